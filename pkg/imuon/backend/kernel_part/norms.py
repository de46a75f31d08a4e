"""
Unitarily invariant norm families and their linear maximization oracles.

Every family acts on singular values only, so the matrix LMO is the vector
LMO on sigma lifted back with the singular vectors of the input.
"""
import logging
import math
from enum import Enum
from typing import Mapping, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

import imuon.configuration.config as config
import imuon.backend.kernel_part.matcore as matcore
from imuon.backend.utility.errors import InvalidInput

logger = logging.getLogger(__name__)


class NormFamily(str, Enum):
    SPECTRAL = "spectral"
    FROBENIUS = "frobenius"
    NUCLEAR = "nuclear"
    KYFAN = "kyfan"
    SCHATTEN = "schatten"
    SPECNUC = "specnuc"


# text key -> (field, type)
_PARAMETER_NAMES = {
    "k": ("k", int),
    "p": ("p", float),
    "ts": ("tau_spec", float),
    "tn": ("tau_nuc", float),
}


class NormSpec(BaseModel):
    """Tagged norm family with its parameters; canonical text form via str()"""
    model_config = ConfigDict(frozen=True)

    family: NormFamily
    k: Optional[int] = None
    p: Optional[float] = None
    tau_spec: Optional[float] = None
    tau_nuc: Optional[float] = None

    @model_validator(mode="after")
    def _check_parameters(self) -> "NormSpec":
        family = self.family
        if family == NormFamily.KYFAN:
            if self.k is None or self.k < 1:
                raise ValueError("kyfan needs an integer k >= 1")
        elif family == NormFamily.SCHATTEN:
            if self.p is None or not math.isfinite(self.p):
                raise ValueError("schatten needs a finite p (use spectral for p = inf)")
            if not config.SCHATTEN_P_MIN <= self.p <= config.SCHATTEN_P_MAX:
                raise ValueError(f"schatten p must lie in [{config.SCHATTEN_P_MIN}, {config.SCHATTEN_P_MAX}]")
        elif family == NormFamily.SPECNUC:
            if not self.tau_spec or not self.tau_nuc or self.tau_spec <= 0 or self.tau_nuc <= 0:
                raise ValueError("specnuc needs positive ts and tn")
        extra = {
            NormFamily.KYFAN: ("p", "tau_spec", "tau_nuc"),
            NormFamily.SCHATTEN: ("k", "tau_spec", "tau_nuc"),
            NormFamily.SPECNUC: ("k", "p"),
        }.get(family, ("k", "p", "tau_spec", "tau_nuc"))
        for name in extra:
            if getattr(self, name) is not None:
                raise ValueError(f"{family.value} takes no parameter {name}")
        return self

    # ===== CONSTRUCTORS =====

    @classmethod
    def make(cls, family: str, **params) -> "NormSpec":
        try:
            return cls(family=family, **params)
        except ValidationError as e:
            raise InvalidInput(f"Invalid norm {family!r}: {e.errors()[0]['msg']}") from e

    @classmethod
    def parse(cls, text: str) -> "NormSpec":
        """
        Parse the canonical form, e.g. "spectral", "kyfan:k=3",
        "schatten:p=4", "specnuc:ts=1,tn=2.5"
        """
        head, _, tail = text.strip().partition(":")
        params = {}
        if tail:
            for item in tail.split(","):
                key, sep, value = item.partition("=")
                if not sep:
                    raise InvalidInput(f"Malformed norm parameter {item!r} in {text!r}")
                key = key.strip()
                if key not in _PARAMETER_NAMES:
                    raise InvalidInput(f"Unknown norm parameter {key!r} in {text!r}")
                name, cast = _PARAMETER_NAMES[key]
                try:
                    params[name] = cast(value)
                except ValueError as e:
                    raise InvalidInput(f"Bad value for {key!r} in {text!r}") from e
        try:
            family = NormFamily(head.strip().lower())
        except ValueError as e:
            raise InvalidInput(f"Unknown norm family {head!r}") from e
        return cls.make(family.value, **params)

    def __str__(self) -> str:
        if self.family == NormFamily.KYFAN:
            return f"kyfan:k={self.k}"
        if self.family == NormFamily.SCHATTEN:
            return f"schatten:p={self.p:g}"
        if self.family == NormFamily.SPECNUC:
            return f"specnuc:ts={self.tau_spec:g},tn={self.tau_nuc:g}"
        return self.family.value


SPECTRAL = NormSpec(family=NormFamily.SPECTRAL)
FROBENIUS = NormSpec(family=NormFamily.FROBENIUS)
NUCLEAR = NormSpec(family=NormFamily.NUCLEAR)
CORE_NORMS = (SPECTRAL, FROBENIUS, NUCLEAR)


class VectorLmoResult(NamedTuple):
    z_star: np.ndarray
    value: float


class MatrixLmoResult(NamedTuple):
    Z_star: np.ndarray
    value: float
    sigma: np.ndarray


# =====================================================
# SINGULAR VALUE VECTORS
# =====================================================

def _check_sigma(sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 1:
        raise InvalidInput("sigma must be a 1-D vector")
    if not np.all(np.isfinite(sigma)):
        raise InvalidInput("sigma contains non-finite entries")
    if np.any(sigma < 0.0):
        raise InvalidInput("sigma must be nonnegative")
    if sigma.size > 1:
        slack = config.SIGMA_ORDER_TOL * max(float(sigma[0]), 1.0)
        if np.any(np.diff(sigma) > slack):
            raise InvalidInput("sigma must be sorted nonincreasing")
    return sigma


def _schatten_route(norm: NormSpec) -> NormSpec:
    """Schatten p=1 and p=2 evaluate through nuclear and frobenius"""
    if norm.family == NormFamily.SCHATTEN:
        if norm.p == 1.0:
            return NUCLEAR
        if norm.p == 2.0:
            return FROBENIUS
    return norm


def _lp_norm(v: np.ndarray, p: float) -> float:
    top = float(np.max(v)) if v.size else 0.0
    if top == 0.0:
        return 0.0
    return top * float(np.sum((v / top) ** p)) ** (1.0 / p)


def vector_lmo(sigma, norm: NormSpec, tau: float) -> VectorLmoResult:
    """
    Closed-form maximizer of <z, sigma> over {phi(z) <= tau}

    Args:
        sigma: nonincreasing nonnegative vector
        norm: norm family; specnuc ignores tau and uses its own budgets
        tau: ball radius

    Returns:
        VectorLmoResult(z_star, value)
    """
    sigma = _check_sigma(sigma)
    if not tau > 0:
        raise InvalidInput(f"tau must be positive, got {tau}")
    n = sigma.size
    z = np.zeros(n)
    if n == 0 or not np.any(sigma > 0.0):
        return VectorLmoResult(z, 0.0)

    norm = _schatten_route(norm)
    family = norm.family
    if family == NormFamily.SPECTRAL:
        z[:] = tau
        value = tau * float(np.sum(sigma))
    elif family == NormFamily.FROBENIUS:
        length = float(np.linalg.norm(sigma))
        z = tau * sigma / length
        value = tau * length
    elif family == NormFamily.NUCLEAR:
        z[0] = tau
        value = tau * float(sigma[0])
    elif family == NormFamily.KYFAN:
        k = min(norm.k, n)
        z[:k] = tau
        value = tau * float(np.sum(sigma[:k]))
    elif family == NormFamily.SCHATTEN:
        p = norm.p
        q = p / (p - 1.0)
        weights = (sigma / sigma[0]) ** (q - 1.0)
        z = tau * weights / _lp_norm(weights, p)
        value = tau * _lp_norm(sigma, q)
    elif family == NormFamily.SPECNUC:
        ts, tn = norm.tau_spec, norm.tau_nuc
        full = min(int(math.floor(tn / ts)), n)
        z[:full] = ts
        if full < n:
            z[full] = tn - full * ts
        value = float(np.dot(z, sigma))
    else:
        raise InvalidInput(f"Unsupported norm family {family}")
    return VectorLmoResult(z, value)


def dual_norm(sigma, norm: NormSpec) -> float:
    """
    Dual norm on singular values, so that vector_lmo value = tau * dual_norm

    kyfan:k is the ball {||Z||_2 <= 1, ||Z||_* <= k}, so its dual is the Ky Fan
    k-norm: dual_norm(kyfan:k=2, (5, 1, 1)) = 6.

    Raises:
        InvalidInput: for specnuc, whose support value comes only from vector_lmo
    """
    sigma = _check_sigma(sigma)
    if sigma.size == 0:
        return 0.0
    norm = _schatten_route(norm)
    family = norm.family
    if family == NormFamily.SPECTRAL:
        return float(np.sum(sigma))
    if family == NormFamily.FROBENIUS:
        return float(np.linalg.norm(sigma))
    if family == NormFamily.NUCLEAR:
        return float(sigma[0])
    if family == NormFamily.KYFAN:
        return float(np.sum(sigma[:min(norm.k, sigma.size)]))
    if family == NormFamily.SCHATTEN:
        return _lp_norm(sigma, norm.p / (norm.p - 1.0))
    raise InvalidInput("specnuc has no standalone dual norm; use vector_lmo(...).value")


def support_value(sigma, norm: NormSpec) -> float:
    """Dual norm where defined, otherwise the unit-radius LMO value"""
    if norm.family == NormFamily.SPECNUC:
        return vector_lmo(sigma, norm, 1.0).value
    return dual_norm(sigma, norm)


def norm_value(z, norm: NormSpec) -> float:
    """
    Gauge of the norm ball on a nonnegative vector (any order).
    kyfan:k measures max(z_1, sum(z)/k); specnuc the larger of its two budget ratios.
    """
    z = np.sort(np.abs(np.asarray(z, dtype=np.float64)))[::-1]
    if z.size == 0:
        return 0.0
    norm = _schatten_route(norm)
    family = norm.family
    if family == NormFamily.SPECTRAL:
        return float(z[0])
    if family == NormFamily.FROBENIUS:
        return float(np.linalg.norm(z))
    if family == NormFamily.NUCLEAR:
        return float(np.sum(z))
    if family == NormFamily.KYFAN:
        return max(float(z[0]), float(np.sum(z)) / norm.k)
    if family == NormFamily.SCHATTEN:
        return _lp_norm(z, norm.p)
    return max(float(z[0]) / norm.tau_spec, float(np.sum(z)) / norm.tau_nuc)


def matrix_norm_value(M, norm: NormSpec) -> float:
    return norm_value(matcore.svd(M).sigma, norm)


# =====================================================
# MATRIX LMO
# =====================================================

def matrix_lmo(H, norm: NormSpec, tau: float) -> MatrixLmoResult:
    """
    Maximize <Z, H> over {phi(Z) <= tau} by aligning with the SVD of H.
    Directions with numerically zero singular values get no weight.
    """
    H = matcore.as_matrix(H, "H")
    family = _schatten_route(norm).family
    if family == NormFamily.FROBENIUS:
        length = float(np.linalg.norm(H))
        if length == 0.0:
            return MatrixLmoResult(np.zeros_like(H), 0.0, np.zeros(min(H.shape)))
        sigma = matcore.svd(H).sigma
        return MatrixLmoResult(tau * H / length, tau * length, sigma)

    U, sigma, V = matcore.svd(H)
    result = vector_lmo(sigma, norm, tau)
    keep = matcore.numerical_rank_mask(sigma, H.shape)
    z = np.where(keep, result.z_star, 0.0)
    Z = (U * z) @ V.T
    return MatrixLmoResult(Z, result.value, sigma)


def symmetric_lmo(H, norm: NormSpec, tau: float) -> MatrixLmoResult:
    """
    LMO for symmetric H via its eigendecomposition; the maximizer is exactly
    symmetric. sigma is |lambda| in nonincreasing order.
    """
    Q, lam = matcore.sym_eig(H)
    order = np.argsort(-np.abs(lam), kind="stable")
    Q = Q[:, order]
    lam = lam[order]
    sigma = np.abs(lam)
    cutoff = config.EIG_ZERO_REL_TOL * (float(sigma[0]) if sigma.size else 0.0)
    signs = np.where(sigma > cutoff, np.sign(lam), 0.0)
    result = vector_lmo(sigma, norm, tau)
    Z = matcore.sym_part((Q * (signs * result.z_star)) @ Q.T)
    return MatrixLmoResult(Z, result.value, sigma)


# =====================================================
# SQUARED RIEMANNIAN RADIUS
# =====================================================

def block_radius(norm: NormSpec, rank: int) -> Optional[float]:
    """Largest ||Z||_F^2 over the unit ball among matrices of rank <= rank"""
    if rank <= 0:
        return 0.0
    norm = _schatten_route(norm)
    family = norm.family
    if family == NormFamily.SPECTRAL:
        return float(rank)
    if family in (NormFamily.FROBENIUS, NormFamily.NUCLEAR):
        return 1.0
    if family == NormFamily.KYFAN:
        return float(min(norm.k, rank))
    if family == NormFamily.SCHATTEN:
        return 1.0 if norm.p <= 2.0 else float(rank) ** (1.0 - 2.0 / norm.p)
    return None


def manifold_block_ranks(manifold_kind: str, dims: Mapping[str, int]) -> Sequence[int]:
    """Maximal rank of each decoupled scaled block"""
    kind = str(getattr(manifold_kind, "value", manifold_kind))
    try:
        if kind == "fixed_rank":
            m, n, r = dims["m"], dims["n"], dims["r"]
            if not 1 <= r <= min(m, n):
                raise InvalidInput(f"fixed_rank needs 1 <= r <= min(m, n), got {dims}")
            return (r, r)
        if kind == "spd":
            n = dims["n"]
            if n < 1:
                raise InvalidInput(f"spd needs n >= 1, got {dims}")
            return (n,)
        if kind in ("stiefel", "grassmann"):
            m, r = dims["m"], dims["r"]
            if not 1 <= r <= m:
                raise InvalidInput(f"{kind} needs 1 <= r <= m, got {dims}")
            normal = min(m - r, r)
            return (2 * (r // 2), normal) if kind == "stiefel" else (normal,)
    except KeyError as e:
        raise InvalidInput(f"Missing dimension {e} for {kind}") from e
    raise InvalidInput(f"Unknown manifold kind {manifold_kind!r}")


def c_phi_analytic(norm: NormSpec, manifold_kind: str, dims: Mapping[str, int]) -> Optional[float]:
    """
    Analytic squared Riemannian radius of the intrinsic unit ball: the sum of
    per-block radii under the l-infinity product. None for specnuc.
    """
    total = 0.0
    for rank in manifold_block_ranks(manifold_kind, dims):
        radius = block_radius(norm, rank)
        if radius is None:
            return None
        total += radius
    return total
