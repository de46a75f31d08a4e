import numpy as np
import pytest

import imuon.backend.kernel_part.matcore as matcore
import imuon.backend.manifold_part.manifolds as manifolds
from imuon.backend.kernel_part.norms import CORE_NORMS, FROBENIUS, SPECTRAL, NormSpec
from imuon.backend.manifold_part.manifolds import (
    FixedRankPoint,
    GrassmannPoint,
    MatrixTangent,
    ProductPoint,
    SpdPoint,
    StiefelPoint,
)
from imuon.backend.utility.errors import InvalidInput, NotPositiveDefinite, RankDeficient

DIMS = {
    "fixed_rank": {"m": 12, "n": 10, "r": 4},
    "spd": {"n": 8},
    "stiefel": {"m": 10, "r": 3},
    "grassmann": {"m": 10, "r": 3},
}
ALL_NORMS = list(CORE_NORMS) + [NormSpec.parse("kyfan:k=2"), NormSpec.parse("schatten:p=3")]


def imbalanced(x: FixedRankPoint, alpha: float) -> FixedRankPoint:
    return manifolds.gauge_transform(x, alpha * np.eye(x.B.shape[1]))


# ===== POINTS =====

def test_validate_point_rejects_broken_points(rng):
    B = rng.standard_normal((5, 2))
    with pytest.raises(RankDeficient):
        manifolds.validate_point(FixedRankPoint(np.column_stack([B[:, 0], B[:, 0]]), rng.standard_normal((2, 4))))
    with pytest.raises(NotPositiveDefinite):
        manifolds.validate_point(SpdPoint(np.diag([1.0, -1.0])))
    with pytest.raises(InvalidInput):
        manifolds.validate_point(StiefelPoint(2.0 * matcore.random_orthonormal(5, 2, rng)))
    with pytest.raises(InvalidInput):
        FixedRankPoint(rng.standard_normal((5, 2)), rng.standard_normal((3, 4)))


def test_points_are_immutable(rng):
    x = manifolds.random_point("grassmann", DIMS["grassmann"], rng)
    with pytest.raises(ValueError):
        x.X[0, 0] = 1.0


# ===== INTRINSIC LMO =====

@pytest.mark.parametrize("kind", list(DIMS))
@pytest.mark.parametrize("norm", ALL_NORMS, ids=str)
def test_lmo_is_tangent_bounded_and_attains_the_dual_value(kind, norm, rng):
    for _ in range(5):
        x = manifolds.random_point(kind, DIMS[kind], rng)
        result = manifolds.lmo_direction(x, manifolds.random_egrad(x, rng), norm, 1.5)
        assert manifolds.tangent_residual(x, result.xi_star) <= 1e-9
        assert result.riem_norm_sq <= manifolds.c_phi(x, norm) * 1.5 ** 2 * (1 + 1e-8)
        assert result.dual_value == pytest.approx(1.5 * result.H_dual_sum, rel=1e-8)
        assert result.H_dual == max(result.block_duals)


@pytest.mark.parametrize("norm", ALL_NORMS, ids=str)
def test_fixed_rank_update_is_gauge_invariant(norm, rng):
    x = manifolds.random_point("fixed_rank", DIMS["fixed_rank"], rng)
    G = manifolds.random_egrad(x, rng)
    reference = manifolds.ambient_update(x, manifolds.lmo_direction(x, G, norm, 1.0).xi_star)
    for _ in range(5):
        moved = manifolds.gauge_transform(x, matcore.random_with_condition(4, 4, 1e3, rng))
        other = manifolds.ambient_update(moved, manifolds.lmo_direction(moved, G, norm, 1.0).xi_star)
        assert np.linalg.norm(other - reference) <= 1e-7 * np.linalg.norm(reference)


@pytest.mark.parametrize("alpha", [1.0, 10.0, 1e3])
def test_spectral_ambient_update_depends_only_on_rank(alpha):
    r = DIMS["fixed_rank"]["r"]
    for seed in range(500):
        rng = np.random.default_rng(seed)
        x = imbalanced(manifolds.random_point("fixed_rank", DIMS["fixed_rank"], rng), alpha)
        xi = manifolds.lmo_direction(x, manifolds.random_egrad(x, rng), SPECTRAL, 1.0).xi_star
        Xdot = manifolds.ambient_update(x, xi)
        assert np.linalg.norm(Xdot, 2) <= 2.0 * (1 + 1e-8)
        assert np.linalg.norm(Xdot) ** 2 <= 4.0 * r * (1 + 1e-8)


def test_gram_root_path_matches_qr_path(rng):
    x = manifolds.random_point("fixed_rank", DIMS["fixed_rank"], rng)
    G = manifolds.random_egrad(x, rng)
    via_qr = manifolds.ambient_update(x, manifolds.lmo_direction(x, G, SPECTRAL, 1.0).xi_star)
    via_gram = manifolds.ambient_update(x, manifolds.lmo_direction(x, G, SPECTRAL, 1.0, gram_root=True).xi_star)
    assert np.allclose(via_qr, via_gram, atol=1e-9)


@pytest.mark.parametrize("kind", ["fixed_rank", "grassmann", "stiefel"])
def test_newton_schulz_polar_agrees_with_exact(kind, rng):
    x = manifolds.random_point(kind, DIMS[kind], rng)
    G = manifolds.random_egrad(x, rng)
    exact = manifolds.lmo_direction(x, G, SPECTRAL, 1.0)
    approx = manifolds.lmo_direction(x, G, SPECTRAL, 1.0, polar="newton_schulz")
    assert approx.dual_value == pytest.approx(exact.dual_value, rel=1e-6)


def test_frobenius_direction_is_the_normalized_riemannian_gradient(rng):
    x = manifolds.random_point("grassmann", DIMS["grassmann"], rng)
    G = manifolds.random_egrad(x, rng)
    xi = manifolds.lmo_direction(x, G, FROBENIUS, 1.0).xi_star.Xi
    grad = manifolds.riemannian_gradient(x, G).Xi
    assert np.allclose(xi, grad / np.linalg.norm(grad), atol=1e-12)


def test_zero_gradient_gives_zero_direction(rng):
    x = manifolds.random_point("stiefel", DIMS["stiefel"], rng)
    result = manifolds.lmo_direction(x, np.zeros((10, 3)), SPECTRAL, 1.0)
    assert result.dual_value == 0.0
    assert not np.any(result.xi_star.Xi)


def test_specnuc_is_gated_on_multi_block_manifolds(rng):
    norm = NormSpec.parse("specnuc:ts=1,tn=2")
    x = manifolds.random_point("fixed_rank", DIMS["fixed_rank"], rng)
    G = manifolds.random_egrad(x, rng)
    with pytest.raises(InvalidInput):
        manifolds.lmo_direction(x, G, norm, 1.0)
    assert manifolds.lmo_direction(x, G, norm, 1.0, allow_specnuc_product=True).dual_value > 0
    spd = manifolds.random_point("spd", DIMS["spd"], rng)
    assert manifolds.lmo_direction(spd, manifolds.random_egrad(spd, rng), norm, 1.0).dual_value > 0


def test_bad_inputs_are_rejected(rng):
    x = manifolds.random_point("spd", DIMS["spd"], rng)
    with pytest.raises(InvalidInput):
        manifolds.lmo_direction(x, np.zeros((3, 3)), SPECTRAL, 1.0)
    with pytest.raises(InvalidInput):
        manifolds.lmo_direction(x, manifolds.random_egrad(x, rng), SPECTRAL, -1.0)


def test_product_lmo_decouples_blocks(rng):
    parts = (manifolds.random_point("spd", {"n": 4}, rng), manifolds.random_point("spd", {"n": 3}, rng))
    x = ProductPoint(parts)
    G = manifolds.random_egrad(x, rng)
    joint = manifolds.lmo_direction(x, G, SPECTRAL, 1.0)
    separate = [manifolds.lmo_direction(p, g, SPECTRAL, 1.0) for p, g in zip(parts, G)]
    assert joint.dual_value == pytest.approx(sum(s.dual_value for s in separate))
    assert joint.H_dual == pytest.approx(max(s.H_dual for s in separate))
    assert manifolds.c_phi(x, SPECTRAL) == 7.0
    for got, want in zip(joint.xi_star.components, separate):
        assert np.allclose(got.Xi, want.xi_star.Xi)


# ===== METRIC, RETRACTION, GAUGE =====

@pytest.mark.parametrize("kind", list(DIMS))
def test_metric_is_symmetric_and_positive(kind, rng):
    x = manifolds.random_point(kind, DIMS[kind], rng)
    a = manifolds.riemannian_gradient(x, manifolds.random_egrad(x, rng))
    b = manifolds.riemannian_gradient(x, manifolds.random_egrad(x, rng))
    assert manifolds.metric_inner(x, a, b) == pytest.approx(manifolds.metric_inner(x, b, a))
    assert manifolds.metric_inner(x, a, a) > 0


@pytest.mark.parametrize("kind", list(DIMS))
def test_retraction_stays_on_the_manifold(kind, rng):
    x = manifolds.random_point(kind, DIMS[kind], rng)
    xi = manifolds.lmo_direction(x, manifolds.random_egrad(x, rng), SPECTRAL, 1.0).xi_star
    y = manifolds.retract(x, xi, 0.3)
    manifolds.validate_point(y)
    assert manifolds.retract(x, xi, 0.0) is x


def test_spd_retraction_survives_large_steps(rng):
    x = SpdPoint(np.eye(4))
    xi = MatrixTangent(-np.diag([5.0, 1.0, 0.0, 0.0]))
    y = manifolds.retract(x, xi, 10.0)
    assert np.all(np.linalg.eigvalsh(y.X) > 0)


def test_fixed_rank_retraction_reports_rank_loss(rng):
    x = manifolds.random_point("fixed_rank", DIMS["fixed_rank"], rng)
    xi = manifolds.FixedRankTangent(-x.B, np.zeros_like(x.A))
    with pytest.raises(RankDeficient):
        manifolds.retract(x, xi, 1.0)


def test_gauge_transform_keeps_the_ambient_matrix(rng):
    x = manifolds.random_point("fixed_rank", DIMS["fixed_rank"], rng)
    N = matcore.random_with_condition(4, 4, 50.0, rng)
    assert np.allclose(manifolds.gauge_transform(x, N).ambient(), x.ambient(), atol=1e-10)
    with pytest.raises(InvalidInput):
        manifolds.gauge_transform(x, np.diag([1.0, 1.0, 1.0, 0.0]))


def test_stiefel_tangent_residual_detects_non_tangents(rng):
    x = manifolds.random_point("stiefel", DIMS["stiefel"], rng)
    assert manifolds.tangent_residual(x, MatrixTangent(x.X)) > 0.1
    assert isinstance(manifolds.random_point("grassmann", DIMS["grassmann"], rng), GrassmannPoint)
