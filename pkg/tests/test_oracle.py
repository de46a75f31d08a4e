import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import imuon.backend.kernel_part.matcore as matcore
import imuon.backend.kernel_part.norms as norms
import imuon.backend.manifold_part.manifolds as manifolds
import imuon.backend.oracle_part.oracle as oracle
from imuon.backend.kernel_part.norms import CORE_NORMS, FROBENIUS, NUCLEAR, SPECTRAL, NormSpec
from imuon.backend.utility.errors import ConvergenceFailure, InvalidInput

SMALL_DIMS = {
    "fixed_rank": {"m": 6, "n": 5, "r": 2},
    "spd": {"n": 4},
    "stiefel": {"m": 6, "r": 2},
    "grassmann": {"m": 6, "r": 2},
}


# ===== SIMPLEX =====

def test_project_simplex_small_example():
    w = oracle.project_simplex([0.5, 0.2, -1.0])
    np.testing.assert_allclose(w, [0.65, 0.35, 0.0], atol=1e-15)


@given(arrays(np.float64, st.integers(1, 12), elements=st.floats(-10, 10)), st.floats(0.1, 5.0))
def test_project_simplex_satisfies_kkt(v, radius):
    w = oracle.project_simplex(v, radius)
    assert np.all(w >= 0.0)
    assert np.sum(w) == pytest.approx(radius, rel=1e-12, abs=1e-12)
    assert oracle.simplex_kkt_residual(v, w, radius) <= 1e-9


def test_project_simplex_rejects_nonpositive_radius():
    with pytest.raises(InvalidInput):
        oracle.project_simplex([1.0, 2.0], 0.0)


# ===== DYKSTRA =====

def test_dykstra_projection_onto_symmetric_frobenius_ball(rng):
    V = 5.0 * rng.standard_normal((5, 5))
    result, iterations, _ = oracle.dykstra_projection(
        V, matcore.sym_part, lambda Z: Z if np.linalg.norm(Z) <= 1.0 else Z / np.linalg.norm(Z)
    )
    S = matcore.sym_part(V)
    np.testing.assert_allclose(result, S / np.linalg.norm(S), atol=1e-9)
    assert iterations >= 1


def test_dykstra_projection_reports_stall(rng):
    V = 10.0 * rng.standard_normal((4, 4))
    with pytest.raises(ConvergenceFailure):
        oracle.dykstra_projection(V, matcore.sym_part, lambda Z: Z / max(1.0, np.linalg.norm(Z)), tol=1e-15, max_iters=1)


@pytest.mark.parametrize("norm", CORE_NORMS, ids=str)
def test_dykstra_lmo_matches_unconstrained_closed_form(norm, rng):
    H = rng.standard_normal((5, 3))
    result = oracle.dykstra_lmo(H, lambda Z: Z, norm, 2.0)
    closed = norms.matrix_lmo(H, norm, 2.0)
    assert result.value == pytest.approx(closed.value, rel=1e-5)
    assert result.residual <= 1e-6


def test_dykstra_lmo_zero_direction_is_zero(rng):
    X = matcore.random_orthonormal(5, 2, rng)
    H = X @ rng.standard_normal((2, 3))
    result = oracle.dykstra_lmo(H, lambda Z: Z - X @ (X.T @ Z), SPECTRAL, 1.0)
    assert result.value == 0.0
    assert result.iterations == 0


@pytest.mark.parametrize("kind", list(SMALL_DIMS))
@pytest.mark.parametrize("norm", CORE_NORMS, ids=str)
def test_manifold_oracle_agrees_with_intrinsic_lmo(kind, norm, rng):
    residuals = oracle.oracle_agreement_residuals(kind, SMALL_DIMS[kind], norm, 2, rng, tau=1.0)
    assert max(residuals) <= 1e-5


def test_block_structures_follow_scaled_blocks(rng):
    x = manifolds.random_point("stiefel", SMALL_DIMS["stiefel"], rng)
    kinds = [s.kind for s in oracle.block_structures(x)]
    assert kinds == ["skew", "horizontal"]
    product = manifolds.ProductPoint((x, manifolds.random_point("spd", SMALL_DIMS["spd"], rng)))
    assert [s.kind for s in oracle.block_structures(product)] == ["skew", "horizontal", "sym"]


def test_ball_projection_availability():
    assert all(oracle.has_ball_projection(n) for n in CORE_NORMS)
    assert oracle.has_ball_projection(NormSpec.parse("schatten:p=1"))
    assert not oracle.has_ball_projection(NormSpec.parse("kyfan:k=2"))
    assert not oracle.has_ball_projection(NormSpec.parse("schatten:p=3"))


# ===== RANDOM SEARCH =====

@pytest.mark.parametrize("spec", ["kyfan:k=2", "schatten:p=3", "schatten:p=1.5"])
def test_random_search_never_beats_the_closed_form(spec, rng):
    norm = NormSpec.parse(spec)
    for _ in range(3):
        sigma = np.sort(rng.exponential(size=5))[::-1]
        closed = norms.vector_lmo(sigma, norm, 1.0).value
        found = oracle.vector_random_search(sigma, norm, 1.0, samples=2000, sweeps=3, rng=rng)
        assert found.value <= closed * (1.0 + 1e-9) + 1e-12
        assert found.value >= 0.5 * closed


def test_random_search_on_empty_vector():
    assert oracle.vector_random_search(np.zeros(0), SPECTRAL, 1.0).value == 0.0


# ===== FINITE DIFFERENCES =====

def test_finite_diff_grad_of_a_quadratic(rng):
    C = rng.standard_normal((3, 4))
    P = rng.standard_normal((3, 4))
    grad = oracle.finite_diff_grad(lambda M: 0.5 * np.sum(M * M) + np.sum(C * M), P)
    np.testing.assert_allclose(grad, P + C, atol=1e-6)


def test_finite_diff_grad_symmetric_mode(rng):
    C = matcore.sym_part(rng.standard_normal((4, 4)))
    grad = oracle.finite_diff_grad(lambda S: np.sum(C * S), np.eye(4), symmetric=True)
    np.testing.assert_allclose(grad, C, atol=1e-8)


def test_finite_diff_grad_rejects_bad_step():
    with pytest.raises(InvalidInput):
        oracle.finite_diff_grad(lambda M: 0.0, np.zeros(2), h=0.0)


# ===== NUMERIC C_PHI =====

@pytest.mark.parametrize("kind", ["fixed_rank", "grassmann", "spd"])
def test_c_phi_estimate_reaches_the_spectral_radius(kind, rng):
    dims = {"fixed_rank": {"m": 12, "n": 10, "r": 4}, "grassmann": {"m": 10, "r": 3}, "spd": {"n": 8}}[kind]
    x = manifolds.random_point(kind, dims, rng)
    analytic = manifolds.c_phi(x, SPECTRAL)
    estimate = oracle.estimate_c_phi(x, SPECTRAL, samples=5, rng=rng)
    assert estimate <= analytic * (1.0 + 1e-9)
    assert estimate == pytest.approx(analytic, rel=1e-2)


def test_c_phi_estimate_needs_samples(rng):
    x = manifolds.random_point("spd", {"n": 3}, rng)
    with pytest.raises(InvalidInput):
        oracle.estimate_c_phi(x, SPECTRAL, samples=0)


# ===== INVARIANCE SUITE =====

@pytest.mark.parametrize("kind", list(SMALL_DIMS))
@pytest.mark.parametrize("norm", [SPECTRAL, FROBENIUS, NUCLEAR, NormSpec.parse("kyfan:k=2")], ids=str)
def test_invariance_suite_passes_at_random_points(kind, norm, rng):
    x = manifolds.random_point(kind, SMALL_DIMS[kind], rng)
    report = oracle.invariance_suite(x, norm, rng=rng, search_samples=500)
    assert report.all_passed, report.failures
    names = [c.name for c in report.checks]
    assert any(name.endswith("/sv_invariance") for name in names)
    assert any(name.endswith("/gl_invariance") for name in names) == (kind == "fixed_rank")
    assert any(name.endswith("/frobenius_parallel") for name in names) == (norm == FROBENIUS)


def test_invariance_suite_with_impossible_tolerance_fails(rng):
    x = manifolds.random_point("grassmann", SMALL_DIMS["grassmann"], rng)
    report = oracle.invariance_suite(x, SPECTRAL, rng=rng, tol=1e-30)
    assert not report.all_passed
    assert report.failures


def test_check_result_serializes_pass_alias():
    check = oracle.make_check("demo", 1e-12, 1e-9)
    dumped = check.model_dump(by_alias=True)
    assert dumped["pass"] is True
    assert "passed" not in dumped
    assert oracle.make_check("demo", float("nan"), 1.0).passed is False


def test_verify_report_extend_and_failures():
    report = oracle.VerifyReport(checks=[oracle.make_check("a", 0.0, 1.0)])
    report.extend(oracle.VerifyReport(checks=[oracle.make_check("b", 2.0, 1.0)]))
    assert report.failures == ["b"]
    assert not report.all_passed
