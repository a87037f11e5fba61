import numpy as np
import pytest

from dmcp.catalog import SEQUENCE_CATALOG, catalog_sequence
from dmcp.dynamics import (
    CompositeSequence,
    SequenceKind,
    compose,
    compose_grid,
    gate_distance,
    resonant_pulse,
    target_rotation,
)
from dmcp.synthesis import (
    ConditionResidual,
    ConvergenceError,
    SynthesisProblem,
    make_universal,
    pp_residuals,
    solve_pp,
    transfer_profile,
    verify_sequence,
)

PI_PROBLEM = SynthesisProblem(np.pi, 2, 1)
PI2_PROBLEM = SynthesisProblem(np.pi / 2, 2, 1)


def transfer_infidelity(seq, eps):
    """|0> transfer-probability deviation from the target split."""
    u = compose_grid(seq, area_scale=np.asarray(eps, dtype=float))
    p = np.abs(u[..., 1, 0]) ** 2
    return np.abs(p - np.sin(seq.target_angle / 2) ** 2)


def test_problem_validation():
    with pytest.raises(ValueError):
        SynthesisProblem(np.pi, 1, 1)
    with pytest.raises(ValueError):
        SynthesisProblem(np.pi, 2, 3)
    assert PI_PROBLEM.amplitude_target == pytest.approx(0.5)
    assert PI2_PROBLEM.amplitude_target == pytest.approx(np.sin(np.pi / 8) ** 2)


def test_residuals_published_pi_pair():
    res = pp_residuals([5.52, 0.69], PI_PROBLEM)
    # two-decimal published values: amplitude off by ~2.2e-3, curvature < 1e-3
    assert abs(res.amplitude_residual) < 3e-3
    assert abs(res.derivative_residuals[0]) < 1e-3


def test_residuals_published_pi2_pair():
    res = pp_residuals([11.99, 1.94], PI2_PROBLEM)
    assert res.max_abs() < 1e-3


def test_residuals_two_resonant_pieces():
    res = pp_residuals([0.0, 0.0], PI_PROBLEM)
    # two resonant pi pulses compose to identity: no transfer at all
    assert res.amplitude_residual == pytest.approx(-0.5, abs=1e-12)


def test_residuals_wrong_length():
    with pytest.raises(ValueError, match="expected 2 ratios"):
        pp_residuals([1.0, 2.0, 3.0], PI_PROBLEM)


def test_residuals_method_validation():
    with pytest.raises(ValueError, match="method"):
        pp_residuals([1.0, 2.0], PI_PROBLEM, method="symbolic")


@pytest.mark.parametrize("ratios", [(5.52, 0.69), (1.3, -0.4), (-2.0, 0.8, 3.1)])
def test_odd_derivatives_vanish_by_symmetry(ratios):
    problem = SynthesisProblem(np.pi, len(ratios), 2 if len(ratios) == 3 else 1)
    res = pp_residuals(ratios, problem, method="fit")
    assert np.max(np.abs(res.odd_derivatives)) < 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_finite_difference_matches_fit(seed):
    """The FD route agrees with the spectral-fit oracle on d1..d4."""
    rng = np.random.default_rng(seed)
    ratios = rng.uniform(-6, 6, size=2)
    problem = SynthesisProblem(np.pi, 2, 1)
    fd = pp_residuals(ratios, problem, method="fd")
    fit = pp_residuals(ratios, problem, method="fit")
    for a, b in zip(
        (fd.amplitude_residual, *fd.derivative_residuals, *fd.odd_derivatives),
        (fit.amplitude_residual, *fit.derivative_residuals, *fit.odd_derivatives),
    ):
        assert abs(a - b) <= 1e-6 * max(1.0, abs(b))


def test_fit_derivatives_match_resonant_closed_form():
    """f(A) = sin^2(A) for two resonant pieces: derivatives are analytic."""
    profile = transfer_profile([0.0, 0.0])
    problem = SynthesisProblem(np.pi, 2, 2)
    res = pp_residuals([0.0, 0.0], problem, method="fit")
    # f = sin^2(A) = (1 - cos 2A)/2: d2 = 2cos(2A) -> 2 at pi; d4 = -8cos(2A) -> -8; d6 = 32
    assert res.derivative_residuals[0] == pytest.approx(2.0, abs=1e-9)
    assert res.derivative_residuals[1] == pytest.approx(-8.0, abs=1e-9)
    assert res.derivative_residuals[2] == pytest.approx(32.0, abs=1e-7)
    assert profile(np.pi) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize(
    "seed,expected",
    [
        ((5.0, 1.0), (5.52, 0.69)),
        ((-5.0, -1.0), (-5.52, -0.69)),
        ((6.6, 0.83), (5.52, 0.69)),  # +20% of the published values
        ((4.4, 0.55), (5.52, 0.69)),  # -20%
    ],
)
def test_solver_recovers_pi_values(seed, expected):
    root = solve_pp(PI_PROBLEM, seed)
    assert np.max(np.abs(root - np.asarray(expected))) < 0.01


@pytest.mark.parametrize("seed", [(12.0, 2.0), (14.4, 2.33), (9.6, 1.55)])
def test_solver_recovers_pi2_values(seed):
    root = solve_pp(PI2_PROBLEM, seed)
    assert np.max(np.abs(root - np.array([11.99, 1.94]))) < 0.01


def test_solver_converges_below_tolerance():
    root = solve_pp(PI_PROBLEM, [5.0, 1.0])
    assert pp_residuals(root, PI_PROBLEM, method="fit").max_abs() < 1e-10


def test_sign_family():
    root = solve_pp(PI_PROBLEM, [5.0, 1.0])
    mirrored = solve_pp(PI_PROBLEM, list(-root))
    assert np.max(np.abs(mirrored + root)) < 1e-8


def test_second_order_pi2_root_matches_published():
    problem = SynthesisProblem(np.pi / 2, 3, 2)
    root = solve_pp(problem, [-52.23, -6.76, -1.74])
    assert np.max(np.abs(root - np.array([-52.23, -6.76, -1.74]))) < 0.01


def test_underdetermined_first_order_n6():
    # 3 unknowns, 2 conditions: lands on the family member nearest the seed
    problem = SynthesisProblem(np.pi, 3, 1)
    seed = [5.89, 1.01, -5.68]
    root = solve_pp(problem, seed)
    assert np.max(np.abs(root - np.asarray(seed))) < 0.05
    assert pp_residuals(root, problem, method="fit").max_abs() < 1e-10


def test_solver_seed_length_check():
    with pytest.raises(ValueError, match="seed"):
        solve_pp(PI_PROBLEM, [1.0, 2.0, 3.0])


def test_solver_reports_non_convergence():
    # the all-resonant point has a singular Jacobian: the solver must stall
    with pytest.raises(ConvergenceError) as exc:
        solve_pp(PI_PROBLEM, [0.0, 0.0])
    assert exc.value.residual_norm > 0
    assert exc.value.iterations >= 1


def test_make_universal_examples():
    seq = make_universal([5.52, 0.69], np.pi)
    assert np.allclose(seq.ratios, [5.52, 0.69, -0.69, -5.52])
    assert seq.kind is SequenceKind.UNIVERSAL
    seq2 = make_universal([11.99, 1.94], np.pi / 2)
    assert np.allclose(seq2.ratios, [11.99, 1.94, -1.94, -11.99])
    single = make_universal([0.8], np.pi)
    assert np.allclose(single.ratios, [0.8, -0.8])
    with pytest.raises(ValueError):
        make_universal([], np.pi)


def test_construction_correctness(derived_pi_o1, derived_pi_o2, derived_pi2_o1):
    for seq in (derived_pi_o1, derived_pi_o2, derived_pi2_o1):
        assert gate_distance(compose(seq), target_rotation(seq)) < 1e-3


@pytest.mark.parametrize("name", sorted(SEQUENCE_CATALOG))
def test_all_published_rows_verify(name):
    report = verify_sequence(catalog_sequence(name))
    assert report.passed, f"{name}: gate distance {report.gate_distance:.3e}"
    assert report.gate_distance < 1e-3


def test_verify_fails_for_zero_pair():
    seq = make_universal([0.0, 0.0], np.pi)
    report = verify_sequence(seq)
    assert not report.passed
    assert report.residuals_fit.amplitude_residual == pytest.approx(-0.5, abs=1e-10)


def test_verify_requires_universal_kind():
    with pytest.raises(ValueError, match="universal"):
        verify_sequence(CompositeSequence.from_ratios([1.0, 2.0], np.pi))


def test_verify_report_serializes():
    report = verify_sequence(catalog_sequence("pi-n4-o1"))
    doc = report.to_dict()
    assert doc["passed"] is True
    assert len(doc["half_ratios"]) == 2
    assert isinstance(doc["residuals_fd"]["derivative_residuals"], list)


def test_arbitrary_angle_derivation():
    """The pipeline is not tied to pi and pi/2: a 2pi/3 universal rotation
    derives, verifies, and lands on the same root from distant seeds."""
    theta = 2 * np.pi / 3
    problem = SynthesisProblem(theta, 2, 1)
    roots = [solve_pp(problem, seed) for seed in ([5.0, 1.0], [8.0, 1.5], [3.0, 0.5])]
    for root in roots[1:]:
        assert np.max(np.abs(root - roots[0])) < 1e-8
    assert np.max(np.abs(roots[0] - np.array([8.8170, 1.3529]))) < 1e-3
    report = verify_sequence(make_universal(roots[0], theta))
    assert report.passed and report.gate_distance < 1e-10


def test_flatness_transfer(derived_pi_o1):
    """First-order universal: transfer infidelity has (numerically) zero
    curvature at eps = 0, unlike the resonant reference."""
    h = 1e-3

    def curvature(seq):
        vals = transfer_infidelity(seq, [-h, 0.0, h])
        return (vals[0] - 2 * vals[1] + vals[2]) / h**2

    assert abs(curvature(derived_pi_o1)) <= 1e-3
    resonant_curv = curvature(resonant_pulse(np.pi))
    assert resonant_curv == pytest.approx(np.pi**2 / 2, rel=1e-4)
    assert abs(curvature(derived_pi_o1)) < resonant_curv
