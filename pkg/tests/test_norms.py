import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

import imuon.backend.kernel_part.norms as norms
from imuon.backend.kernel_part.norms import FROBENIUS, NUCLEAR, SPECTRAL, NormSpec
from imuon.backend.utility.errors import InvalidInput

FAMILIES = [
    SPECTRAL,
    FROBENIUS,
    NUCLEAR,
    NormSpec.parse("kyfan:k=2"),
    NormSpec.parse("schatten:p=3"),
    NormSpec.parse("schatten:p=1.5"),
]

sigmas = st.lists(st.one_of(st.just(0.0), st.floats(1e-6, 100.0)), min_size=1, max_size=8).map(
    lambda values: np.sort(np.array(values))[::-1]
)


def test_closed_forms_on_a_small_vector():
    sigma = np.array([3.0, 2.0, 1.0])
    assert norms.vector_lmo(sigma, SPECTRAL, 1.0).value == pytest.approx(6.0)
    assert np.allclose(norms.vector_lmo(sigma, SPECTRAL, 2.0).z_star, [2.0, 2.0, 2.0])
    assert norms.vector_lmo(sigma, FROBENIUS, 1.0).value == pytest.approx(np.sqrt(14.0))
    assert np.allclose(norms.vector_lmo(sigma, NUCLEAR, 1.0).z_star, [1.0, 0.0, 0.0])
    assert norms.vector_lmo(sigma, NormSpec.parse("kyfan:k=2"), 1.0).value == pytest.approx(5.0)


def test_zero_sigma_gives_zero_maximizer():
    result = norms.vector_lmo(np.zeros(4), FROBENIUS, 1.0)
    assert result.value == 0.0
    assert not np.any(result.z_star)


@pytest.mark.parametrize("norm", FAMILIES, ids=str)
@given(sigma=sigmas, tau=st.floats(0.1, 10.0))
def test_value_equals_tau_times_dual_norm_and_maximizer_is_feasible(norm, sigma, tau):
    result = norms.vector_lmo(sigma, norm, tau)
    assert result.value == pytest.approx(tau * norms.dual_norm(sigma, norm), rel=1e-9, abs=1e-9)
    assert norms.norm_value(result.z_star, norm) <= tau * (1 + 1e-9)
    assert float(np.dot(result.z_star, sigma)) == pytest.approx(result.value, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("norm", FAMILIES, ids=str)
def test_maximizer_beats_random_feasible_points(norm, rng):
    sigma = np.sort(rng.random(6))[::-1]
    best = norms.vector_lmo(sigma, norm, 1.0).value
    for _ in range(500):
        z = rng.random(6)
        z /= norms.norm_value(z, norm)
        assert np.dot(z, sigma) <= best * (1 + 1e-12)


def test_family_coincidences(rng):
    for _ in range(100):
        sigma = np.sort(rng.random(5))[::-1]
        pairs = [
            (NormSpec.parse("kyfan:k=5"), SPECTRAL),
            (NormSpec.parse("kyfan:k=1"), NUCLEAR),
            (NormSpec.parse("schatten:p=2"), FROBENIUS),
            (NormSpec.parse("schatten:p=1"), NUCLEAR),
        ]
        for left, right in pairs:
            assert np.allclose(norms.vector_lmo(sigma, left, 1.0).z_star, norms.vector_lmo(sigma, right, 1.0).z_star)


def test_kyfan_gauge_and_clamping():
    kyfan = NormSpec.parse("kyfan:k=2")
    assert norms.norm_value([5.0, 2.0], kyfan) == pytest.approx(5.0)
    assert norms.norm_value([1.0, 1.0, 1.0], kyfan) == pytest.approx(1.5)
    wide = NormSpec.parse("kyfan:k=10")
    assert np.allclose(norms.vector_lmo(np.array([2.0, 1.0]), wide, 1.0).z_star, [1.0, 1.0])
    assert norms.dual_norm([5.0, 1.0, 1.0], kyfan) == pytest.approx(6.0)


def test_specnuc_fills_budget_greedily():
    norm = NormSpec.parse("specnuc:ts=1,tn=2.5")
    result = norms.vector_lmo(np.array([4.0, 3.0, 2.0, 1.0]), norm, 1.0)
    assert np.allclose(result.z_star, [1.0, 1.0, 0.5, 0.0])
    assert result.value == pytest.approx(8.0)
    assert norms.support_value(np.array([4.0, 3.0, 2.0, 1.0]), norm) == pytest.approx(8.0)
    with pytest.raises(InvalidInput):
        norms.dual_norm(np.array([1.0]), norm)


@pytest.mark.parametrize("bad", [[1.0, 2.0], [1.0, -0.1], [np.inf], [[1.0]]])
def test_sigma_validation(bad):
    with pytest.raises(InvalidInput):
        norms.vector_lmo(bad, SPECTRAL, 1.0)


def test_nonpositive_tau_is_rejected():
    with pytest.raises(InvalidInput):
        norms.vector_lmo(np.array([1.0]), SPECTRAL, 0.0)


@pytest.mark.parametrize("text", ["spectral", "frobenius", "nuclear", "kyfan:k=3", "schatten:p=4", "specnuc:ts=1,tn=2.5"])
def test_parse_canonical_forms(text):
    assert str(NormSpec.parse(text)) == text


@pytest.mark.parametrize("text", ["operator", "kyfan", "kyfan:k=0", "schatten:p=0.5", "schatten:q=3", "spectral:k=2", "kyfan:k"])
def test_parse_rejects_malformed(text):
    with pytest.raises(InvalidInput):
        NormSpec.parse(text)


@pytest.mark.parametrize("norm", [SPECTRAL, NUCLEAR, NormSpec.parse("schatten:p=3")], ids=str)
def test_matrix_lmo_aligns_with_input(norm, rng):
    H = rng.standard_normal((6, 4))
    result = norms.matrix_lmo(H, norm, 2.0)
    assert np.vdot(result.Z_star, H) == pytest.approx(result.value)
    assert norms.matrix_norm_value(result.Z_star, norm) <= 2.0 * (1 + 1e-10)


def test_matrix_lmo_masks_null_directions(rng):
    H = np.hstack([rng.standard_normal((6, 2)), np.zeros((6, 3))])
    Z = norms.matrix_lmo(H, SPECTRAL, 1.0).Z_star
    assert np.linalg.norm(Z[:, 2:]) <= 1e-10
    assert np.linalg.matrix_rank(Z, tol=1e-8) == 2


def test_frobenius_matrix_lmo_is_normalized_input(rng):
    H = rng.standard_normal((3, 5))
    assert np.allclose(norms.matrix_lmo(H, FROBENIUS, 1.5).Z_star, 1.5 * H / np.linalg.norm(H))


@pytest.mark.parametrize("norm", [SPECTRAL, FROBENIUS, NUCLEAR], ids=str)
def test_symmetric_lmo_matches_general_lmo_on_symmetric_input(norm, rng):
    G = rng.standard_normal((5, 5))
    H = 0.5 * (G + G.T)
    sym = norms.symmetric_lmo(H, norm, 1.0)
    general = norms.matrix_lmo(H, norm, 1.0)
    assert np.array_equal(sym.Z_star, sym.Z_star.T)
    assert sym.value == pytest.approx(general.value)
    assert np.vdot(sym.Z_star, H) == pytest.approx(general.value)


@pytest.mark.parametrize(
    "norm, kind, dims, expected",
    [
        (SPECTRAL, "fixed_rank", {"m": 12, "n": 10, "r": 4}, 8.0),
        (SPECTRAL, "spd", {"n": 8}, 8.0),
        (SPECTRAL, "stiefel", {"m": 10, "r": 3}, 5.0),
        (SPECTRAL, "grassmann", {"m": 10, "r": 3}, 3.0),
        (FROBENIUS, "fixed_rank", {"m": 12, "n": 10, "r": 4}, 2.0),
        (FROBENIUS, "stiefel", {"m": 5, "r": 1}, 1.0),
        (NUCLEAR, "spd", {"n": 8}, 1.0),
        (NormSpec.parse("kyfan:k=2"), "grassmann", {"m": 10, "r": 3}, 2.0),
        (NormSpec.parse("schatten:p=4"), "spd", {"n": 4}, 2.0),
    ],
)
def test_c_phi_analytic(norm, kind, dims, expected):
    assert norms.c_phi_analytic(norm, kind, dims) == pytest.approx(expected)


def test_c_phi_undefined_for_specnuc_and_bad_dims():
    assert norms.c_phi_analytic(NormSpec.parse("specnuc:ts=1,tn=2"), "spd", {"n": 3}) is None
    with pytest.raises(InvalidInput):
        norms.c_phi_analytic(SPECTRAL, "fixed_rank", {"m": 3, "n": 3, "r": 5})
    with pytest.raises(InvalidInput):
        norms.c_phi_analytic(SPECTRAL, "stiefel", {"m": 3})
