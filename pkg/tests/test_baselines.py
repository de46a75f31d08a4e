import numpy as np
import pytest

import imuon.backend.kernel_part.matcore as matcore
import imuon.backend.manifold_part.manifolds as manifolds
import imuon.backend.optimizer_part.baselines as baselines
from imuon.backend.kernel_part.norms import FROBENIUS, NUCLEAR, SPECTRAL
from imuon.backend.manifold_part.manifolds import ProductPoint, SpdPoint, StiefelPoint
from imuon.backend.optimizer_part.optimizer import OptimizerConfig
from imuon.backend.utility.errors import InvalidInput, NotPositiveDefinite

DIMS = {"m": 12, "n": 10, "r": 4}
MIXED_DIMS = ({"m": 12, "n": 10, "r": 4}, {"m": 8, "n": 8, "r": 2}, {"m": 20, "n": 6, "r": 3}, {"m": 6, "n": 15, "r": 5})
GAUGES = (1.0, 10.0, 1e3)


def gauged_points(alpha, count=500):
    """Seeded fixed-rank points over mixed sizes, rescaled to the gauge (B / alpha, alpha A)"""
    for seed in range(count):
        rng = np.random.default_rng(seed)
        dims = MIXED_DIMS[seed % len(MIXED_DIMS)]
        x = manifolds.random_point("fixed_rank", dims, rng)
        yield manifolds.gauge_transform(x, alpha * np.eye(dims["r"])), rng


@pytest.fixture
def point(rng):
    return manifolds.random_point("fixed_rank", DIMS, rng)


# ===== FACTOR-WISE MUON =====

def test_factorwise_muon_depends_on_the_gauge(point, rng):
    egrad = manifolds.random_egrad(point, rng)
    moved = manifolds.gauge_transform(point, 1e3 * np.eye(DIMS["r"]))
    reference = manifolds.ambient_update(point, baselines.factorwise_directions(point, egrad, 1.0))
    other = manifolds.ambient_update(moved, baselines.factorwise_directions(moved, egrad, 1.0))
    assert np.linalg.norm(other - reference) / np.linalg.norm(reference) >= 0.5


def test_factorwise_muon_ambient_step_blows_up_when_imbalanced():
    for x, rng in gauged_points(1e3):
        egrad = manifolds.random_egrad(x, rng)
        ambient = manifolds.ambient_update(x, baselines.factorwise_directions(x, egrad, 1.0))
        assert np.linalg.norm(ambient, 2) > 10.0
        intrinsic = manifolds.ambient_update(x, manifolds.lmo_direction(x, egrad, SPECTRAL, 1.0).xi_star)
        assert np.linalg.norm(intrinsic, 2) <= 2.0 * (1 + 1e-8)


def test_factorwise_muon_step_moves_both_factors(point, rng):
    egrad = manifolds.random_egrad(point, rng)
    nxt = baselines.factorwise_muon_step(point, egrad, 1.0, 0.1)
    G_B, G_A = baselines.factor_gradients(point, egrad)
    np.testing.assert_allclose(point.B - nxt.B, 0.1 * matcore.polar_exact(G_B), atol=1e-12)
    np.testing.assert_allclose(point.A - nxt.A, 0.1 * matcore.polar_exact(G_A), atol=1e-12)


# ===== SPECTRON =====

def test_spectron_radius(point):
    expected = 0.5 / (np.linalg.norm(point.A, 2) + np.linalg.norm(point.B, 2) + 1.0)
    assert baselines.spectron_radius(point, 0.5) == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("alpha", GAUGES)
def test_spectron_ambient_step_is_bounded_by_eta(alpha):
    for x, rng in gauged_points(alpha):
        egrad = manifolds.random_egrad(x, rng)
        nxt = baselines.spectron_step(x, baselines.factor_gradients(x, egrad), 0.5)
        assert np.linalg.norm(nxt.ambient() - x.ambient(), 2) <= 0.5 * (1 + 1e-12)


def test_spectron_power_iteration_radius_is_never_smaller(point):
    exact = baselines.spectron_radius(point, 0.5, power_iters=0)
    assert baselines.spectron_radius(point, 0.5, power_iters=1) >= exact * (1 - 1e-12)
    assert baselines.spectron_radius(point, 0.5, power_iters=200) == pytest.approx(exact, rel=1e-4)


# ===== EUCLIDEAN STEPS =====

def test_euclid_step_keeps_frames_orthonormal(rng):
    x = manifolds.random_point("stiefel", {"m": 8, "r": 3}, rng)
    nxt = baselines.euclid_lmo_step(x, manifolds.random_egrad(x, rng), SPECTRAL, 1.0, 0.3)
    assert isinstance(nxt, StiefelPoint)
    np.testing.assert_allclose(nxt.X.T @ nxt.X, np.eye(3), atol=1e-10)


def test_euclid_step_on_spd_stays_symmetric(rng):
    x = manifolds.random_point("spd", {"n": 4}, rng)
    nxt = baselines.euclid_lmo_step(x, manifolds.random_egrad(x, rng), FROBENIUS, 1.0, 1e-3)
    assert isinstance(nxt, SpdPoint)
    np.testing.assert_allclose(nxt.X, nxt.X.T, atol=1e-14)


def test_euclid_step_leaving_the_cone_raises():
    x = SpdPoint(np.eye(3))
    with pytest.raises(NotPositiveDefinite):
        baselines.euclid_lmo_step(x, np.eye(3), SPECTRAL, 1.0, 2.0)


def test_euclid_step_on_products_is_componentwise(rng):
    a = manifolds.random_point("grassmann", {"m": 6, "r": 2}, rng)
    b = manifolds.random_point("spd", {"n": 3}, rng)
    egrads = (manifolds.random_egrad(a, rng), manifolds.random_egrad(b, rng))
    nxt = baselines.euclid_lmo_step(ProductPoint((a, b)), egrads, NUCLEAR, 1.0, 1e-3)
    alone = baselines.euclid_lmo_step(a, egrads[0], NUCLEAR, 1.0, 1e-3)
    np.testing.assert_allclose(nxt.components[0].X, alone.X, atol=1e-14)


# ===== SCALEDGD =====

def test_scaledgd_matches_the_frobenius_lmo_direction(point, rng):
    egrad = manifolds.random_egrad(point, rng)
    assert baselines.scaledgd_equivalence_check(point, egrad, 1.0) == pytest.approx(1.0, abs=1e-10)


def test_scaledgd_equivalence_needs_fixed_rank(rng):
    x = manifolds.random_point("spd", {"n": 3}, rng)
    with pytest.raises(InvalidInput):
        baselines.scaledgd_equivalence_check(x, np.eye(3), 1.0)


# ===== REGISTRY =====

def test_method_norm():
    assert baselines.method_norm("imuon", NUCLEAR) == NUCLEAR
    assert baselines.method_norm("egd", SPECTRAL) == FROBENIUS
    assert baselines.method_norm("imuon-nu", SPECTRAL) == NUCLEAR
    with pytest.raises(InvalidInput):
        baselines.method_norm("adam", SPECTRAL)


def test_make_step_rejects_unknown_and_misplaced_methods(rng):
    cfg = OptimizerConfig.build(eta=0.1)
    x = manifolds.random_point("grassmann", {"m": 6, "r": 2}, rng)
    with pytest.raises(ValueError):
        baselines.make_step("adam", cfg, x)
    for method in baselines.FIXED_RANK_ONLY:
        with pytest.raises(InvalidInput):
            baselines.make_step(method, cfg, x)


def test_make_step_fw_muon_matches_the_direct_step(point, rng):
    cfg = OptimizerConfig.build(eta=0.1)
    egrad = manifolds.random_egrad(point, rng)
    step = baselines.make_step("fw-muon", cfg, point)
    nxt, _ = step(point, egrad, 0)
    direct = baselines.factorwise_muon_step(point, egrad, cfg.tau, 0.1)
    np.testing.assert_allclose(nxt.B, direct.B, atol=1e-12)
    np.testing.assert_allclose(nxt.A, direct.A, atol=1e-12)


def run_two_steps(method, point, egrads, **kwargs):
    step = baselines.make_step(method, OptimizerConfig.build(eta=0.1, **kwargs), point)
    x = point
    for t, egrad in enumerate(egrads):
        x, _ = step(x, egrad, t)
    return x


def test_make_step_spectron_ignores_momentum_by_default(point, rng):
    egrads = [manifolds.random_egrad(point, rng) for _ in range(2)]
    plain = run_two_steps("spectron", point, egrads)
    with_beta = run_two_steps("spectron", point, egrads, momentum_beta=0.9)
    np.testing.assert_array_equal(with_beta.B, plain.B)
    np.testing.assert_array_equal(with_beta.A, plain.A)
    parity = run_two_steps("spectron", point, egrads, momentum_beta=0.9, spectron_momentum=True)
    assert not np.allclose(parity.B, plain.B)


def test_make_step_scaledgd_rejects_momentum(point):
    with pytest.raises(InvalidInput):
        baselines.make_step("scaledgd", OptimizerConfig.build(eta=0.1, momentum_beta=0.5), point)
    baselines.make_step("scaledgd", OptimizerConfig.build(eta=0.1), point)
