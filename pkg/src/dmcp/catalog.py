"""Bundled universal detuning-modulated sequences.

These are the published reference parameter sets, quoted to two decimals, so
scans and figures are reproducible without running the solver. Names encode
target angle, piece count and order: e.g. "pi-n4-o1" is the four-piece
first-order pi rotation. `catalog_sequence` turns an entry into a
CompositeSequence; `derived_sequence` re-solves the underlying point-to-point
problem seeded at the catalog values and returns the exact root (residuals
below 1e-10 instead of the two-decimal rounding).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import CompositeSequence, SequenceKind
from .synthesis import SynthesisProblem, make_universal, solve_pp

__all__ = ["CatalogEntry", "SEQUENCE_CATALOG", "catalog_names", "catalog_sequence", "derived_sequence"]


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    target_angle: float
    order: int
    ratios: tuple[float, ...]

    @property
    def half_ratios(self) -> tuple[float, ...]:
        return self.ratios[: len(self.ratios) // 2]


SEQUENCE_CATALOG: dict[str, CatalogEntry] = {
    e.name: e
    for e in [
        CatalogEntry("pi-n4-o1", np.pi, 1, (5.52, 0.69, -0.69, -5.52)),
        CatalogEntry("pi-n6-o1", np.pi, 1, (5.89, 1.01, -5.68, 5.68, -1.01, -5.89)),
        CatalogEntry("pi-n6-o2", np.pi, 2, (-4.25, -1.96, 1.65, -1.65, 1.96, 4.25)),
        CatalogEntry("pi2-n4-o1", np.pi / 2, 1, (11.99, 1.94, -1.94, -11.99)),
        CatalogEntry("pi2-n6-o1", np.pi / 2, 1, (-0.97, 0.97, 0.37, -0.37, -0.97, 0.97)),
        CatalogEntry("pi2-n6-o2", np.pi / 2, 2, (-52.23, -6.76, -1.74, 1.74, 6.76, 52.23)),
    ]
}


def catalog_names() -> list[str]:
    return list(SEQUENCE_CATALOG)


def catalog_sequence(name: str) -> CompositeSequence:
    """CompositeSequence for a catalog entry (two-decimal published values)."""
    try:
        entry = SEQUENCE_CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown sequence {name!r}; known: {', '.join(SEQUENCE_CATALOG)}") from None
    return CompositeSequence.from_ratios(
        entry.ratios, entry.target_angle, order=entry.order,
        kind=SequenceKind.UNIVERSAL, label=name,
    )


def derived_sequence(name: str) -> CompositeSequence:
    """Re-derive a catalog entry: solve the PP conditions seeded at the
    published values and build the universal sequence from the exact root."""
    entry = SEQUENCE_CATALOG[name]
    problem = SynthesisProblem(entry.target_angle, len(entry.half_ratios), entry.order)
    root = solve_pp(problem, entry.half_ratios)
    return make_universal(
        root, entry.target_angle, order=entry.order, label=f"{name}-derived"
    )
