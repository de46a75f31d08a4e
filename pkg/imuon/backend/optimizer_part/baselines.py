"""
Euclidean comparison methods: factor-wise Muon, Spectron rescaling, Euclidean
norm-ball steps (EGD, Muon, NuMuon), ScaledGD, and the method registry used
by the experiment harness.
"""
import logging
from enum import Enum
from typing import Optional, Tuple

import numpy as np

import imuon.backend.kernel_part.matcore as matcore
import imuon.backend.kernel_part.norms as norms
import imuon.backend.manifold_part.manifolds as manifolds
import imuon.backend.optimizer_part.optimizer as optimizer
import imuon.configuration.config as config
from imuon.backend.kernel_part.norms import FROBENIUS, NUCLEAR, SPECTRAL, NormSpec
from imuon.backend.manifold_part.manifolds import FixedRankPoint, ManifoldPoint
from imuon.backend.utility.errors import InvalidInput

logger = logging.getLogger(__name__)


class BaselineKind(str, Enum):
    EGD = "egd"
    FACTORWISE_MUON = "fw-muon"
    SPECTRON = "spectron"
    NUMUON_EUCLID = "numuon"
    MUON_EUCLID = "muon"
    SCALEDGD = "scaledgd"


class IntrinsicKind(str, Enum):
    IMUON = "imuon"
    RGD = "rgd"
    IMUON_NU = "imuon-nu"


# Norm each method's direction is normalized in; None keeps the configured norm
METHOD_NORMS = {
    IntrinsicKind.IMUON.value: None,
    IntrinsicKind.RGD.value: FROBENIUS,
    IntrinsicKind.IMUON_NU.value: NUCLEAR,
    BaselineKind.EGD.value: FROBENIUS,
    BaselineKind.FACTORWISE_MUON.value: SPECTRAL,
    BaselineKind.SPECTRON.value: SPECTRAL,
    BaselineKind.NUMUON_EUCLID.value: NUCLEAR,
    BaselineKind.MUON_EUCLID.value: SPECTRAL,
    BaselineKind.SCALEDGD.value: FROBENIUS,
}

# Intrinsic method -> Euclidean counterpart with the same norm
COUNTERPARTS = {
    IntrinsicKind.RGD.value: BaselineKind.EGD.value,
    IntrinsicKind.IMUON.value: BaselineKind.FACTORWISE_MUON.value,
    IntrinsicKind.IMUON_NU.value: BaselineKind.NUMUON_EUCLID.value,
}

FIXED_RANK_ONLY = (BaselineKind.FACTORWISE_MUON.value, BaselineKind.SPECTRON.value, BaselineKind.SCALEDGD.value)


def factor_gradients(x: FixedRankPoint, egrad_X) -> Tuple[np.ndarray, np.ndarray]:
    """(dX A^T, B^T dX)"""
    G = matcore.as_matrix(egrad_X, "egrad_X")
    return G @ x.A.T, x.B.T @ G


# =====================================================
# FACTOR-WISE MUON AND SPECTRON
# =====================================================

def factorwise_directions(x: FixedRankPoint, egrad_X, tau: float) -> manifolds.FixedRankTangent:
    """Euclidean spectral LMO on each factor gradient independently"""
    G_B, G_A = factor_gradients(x, egrad_X)
    return manifolds.FixedRankTangent(tau * matcore.polar_exact(G_B), tau * matcore.polar_exact(G_A))


def factorwise_muon_step(x: FixedRankPoint, egrad_X, tau: float, eta: float) -> FixedRankPoint:
    """B+ = B - eta tau Ortho(dX A^T), A+ = A - eta tau Ortho(B^T dX)"""
    direction = factorwise_directions(x, egrad_X, tau)
    return FixedRankPoint(x.B - eta * direction.Bdot, x.A - eta * direction.Adot)


def spectron_radius(x: FixedRankPoint, eta: float, power_iters: Optional[int] = None) -> float:
    """rho = eta / (||A||_2 + ||B||_2 + 1), with exact norms when power_iters is 0"""
    power_iters = config.SPECTRON_POWER_ITERS if power_iters is None else power_iters
    if power_iters <= 0:
        norm_A, norm_B = np.linalg.norm(x.A, 2), np.linalg.norm(x.B, 2)
    else:
        norm_A = matcore.spectral_norm_estimate(x.A, power_iters)
        norm_B = matcore.spectral_norm_estimate(x.B, power_iters)
    return eta / (norm_A + norm_B + 1.0)


def spectron_directions(x: FixedRankPoint, momenta, eta: float, power_iters: Optional[int] = None) -> manifolds.FixedRankTangent:
    M_B, M_A = momenta
    rho = spectron_radius(x, eta, power_iters)
    return manifolds.FixedRankTangent(rho * matcore.polar_exact(M_B), rho * matcore.polar_exact(M_A))


def spectron_step(x: FixedRankPoint, momenta, eta: float, power_iters: Optional[int] = None) -> FixedRankPoint:
    """
    Orthogonalized factor step rescaled so the ambient update has spectral norm <= eta

    Args:
        x: current factors
        momenta: (M_B, M_A) factor directions (raw factor gradients without momentum)
        eta: target ambient step
        power_iters: power iterations for the factor norm estimates, 0 for exact norms
    """
    direction = spectron_directions(x, momenta, eta, power_iters)
    return FixedRankPoint(x.B - direction.Bdot, x.A - direction.Adot)


# =====================================================
# EUCLIDEAN NORM-BALL STEPS
# =====================================================

def euclid_lmo_direction(x, egrad, norm: NormSpec, tau: float):
    """
    Euclidean LMO direction in ambient or factor coordinates:
    factor pair for fixed-rank, symmetric matrix for SPD, matrix otherwise
    """
    if isinstance(x, manifolds.ProductPoint):
        return tuple(euclid_lmo_direction(c, g, norm, tau) for c, g in zip(x.components, egrad))
    if isinstance(x, FixedRankPoint):
        G_B, G_A = factor_gradients(x, egrad)
        return manifolds.FixedRankTangent(norms.matrix_lmo(G_B, norm, tau).Z_star, norms.matrix_lmo(G_A, norm, tau).Z_star)
    if isinstance(x, manifolds.SpdPoint):
        return norms.symmetric_lmo(matcore.sym_part(matcore.as_matrix(egrad, "egrad")), norm, tau).Z_star
    return norms.matrix_lmo(egrad, norm, tau).Z_star


def euclid_lmo_step(x, egrad, norm: NormSpec, tau: float, eta: float):
    """
    Step against the Euclidean LMO direction; Stiefel / Grassmann frames are
    re-orthonormalized with qf, SPD iterates are checked, never projected

    Raises:
        NotPositiveDefinite: SPD iterate left the cone
    """
    if isinstance(x, manifolds.ProductPoint):
        return manifolds.ProductPoint(tuple(euclid_lmo_step(c, g, norm, tau, eta) for c, g in zip(x.components, egrad)))
    direction = euclid_lmo_direction(x, egrad, norm, tau)
    if isinstance(x, FixedRankPoint):
        return FixedRankPoint(x.B - eta * direction.Bdot, x.A - eta * direction.Adot)
    if isinstance(x, manifolds.SpdPoint):
        X_next = matcore.sym_part(x.X - eta * direction)
        matcore.spd_eig(X_next)
        return manifolds.SpdPoint(X_next)
    if isinstance(x, (manifolds.StiefelPoint, manifolds.GrassmannPoint)):
        return type(x)(matcore.qf(x.X - eta * direction))
    return matcore.as_matrix(x) - eta * direction


# =====================================================
# SCALEDGD
# =====================================================

def scaledgd_step(x: FixedRankPoint, egrad_X, eta: float) -> FixedRankPoint:
    """Unnormalized step along (dB (AA^T)^{-1}, (B^T B)^{-1} dA)"""
    grad = manifolds.riemannian_gradient(x, egrad_X)
    return manifolds.retract(x, manifolds.scale_tangent(grad, -1.0), eta)


def _block_cosine(u: np.ndarray, v: np.ndarray, weight_left=None, weight_right=None) -> float:
    """Cosine of u, v under <u W_r, v> / <W_l u, v> style block metrics"""
    def inner(a, b):
        if weight_right is not None:
            return matcore.frob_inner(a @ weight_right, b)
        return matcore.frob_inner(weight_left @ a, b)
    nu, nv = inner(u, u), inner(v, v)
    if nu == 0.0 or nv == 0.0:
        return 1.0
    return inner(u, v) / np.sqrt(nu * nv)


def scaledgd_equivalence_check(x: FixedRankPoint, egrad_X, tau: float) -> float:
    """Smallest per-block metric cosine between the frobenius LMO direction and ScaledGD"""
    if not isinstance(x, FixedRankPoint):
        raise InvalidInput("ScaledGD equivalence is defined on fixed-rank points")
    lmo = manifolds.lmo_direction(x, egrad_X, FROBENIUS, tau).xi_star
    grad = manifolds.riemannian_gradient(x, egrad_X)
    AAt = x.A @ x.A.T
    BtB = x.B.T @ x.B
    cos_B = _block_cosine(lmo.Bdot, grad.Bdot, weight_right=AAt)
    cos_A = _block_cosine(lmo.Adot, grad.Adot, weight_left=BtB)
    return float(min(cos_B, cos_A))


# =====================================================
# METHOD REGISTRY
# =====================================================

def method_norm(method: str, default: NormSpec) -> NormSpec:
    if method not in METHOD_NORMS:
        raise InvalidInput(f"Unknown method {method!r}; choose from {sorted(METHOD_NORMS)}")
    return METHOD_NORMS[method] or default


def make_step(method: str, cfg: optimizer.OptimizerConfig, x0: ManifoldPoint) -> optimizer.StepFunction:
    """
    Step closure for a CLI method tag. Intrinsic methods use cfg.norm;
    Euclidean methods normalize in their own norm with radius cfg.tau.
    Spectron ignores momentum_beta unless cfg.spectron_momentum is set;
    ScaledGD rejects momentum.
    """
    if method in (k.value for k in IntrinsicKind):
        return optimizer.make_imuon_step(cfg, x0)
    kind = BaselineKind(method)
    if kind.value in FIXED_RANK_ONLY and not isinstance(x0, FixedRankPoint):
        raise InvalidInput(f"{kind.value} needs a fixed-rank problem")
    if kind == BaselineKind.SCALEDGD and cfg.momentum_beta > 0.0:
        raise InvalidInput("scaledgd does not take momentum; set momentum_beta = 0")
    norm = METHOD_NORMS[kind.value]
    state = optimizer.MomentumState()
    beta = cfg.momentum_beta
    if kind == BaselineKind.SPECTRON and not cfg.spectron_momentum:
        beta = 0.0

    def step(x, egrad, t):
        eta = optimizer.step_size(cfg, t)
        if isinstance(x, FixedRankPoint):
            grads = factor_gradients(x, egrad)
            if beta > 0.0:
                grads = optimizer.momentum_combine(state, grads, beta)
            if kind == BaselineKind.SPECTRON:
                return spectron_step(x, grads, eta), None
            if kind == BaselineKind.SCALEDGD:
                return scaledgd_step(x, egrad, eta), None
            G_B, G_A = grads
            Bdot = norms.matrix_lmo(G_B, norm, cfg.tau).Z_star
            Adot = norms.matrix_lmo(G_A, norm, cfg.tau).Z_star
            return FixedRankPoint(x.B - eta * Bdot, x.A - eta * Adot), None
        if beta > 0.0:
            egrad = optimizer.momentum_combine(state, egrad, beta)
        return euclid_lmo_step(x, egrad, norm, cfg.tau, eta), None

    return step
