"""
Fixed-rank, SPD, Stiefel and Grassmann geometries plus finite products of them.

Each manifold provides the metric, the scaled gradient H = G_x^{1/2} grad f,
the closed-form intrinsic LMO direction for any supported norm family, and a
retraction. Points and tangents are immutable; all functions are pure.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as sla

import imuon.configuration.config as config
import imuon.backend.kernel_part.matcore as matcore
import imuon.backend.kernel_part.norms as norms
from imuon.backend.kernel_part.norms import NormFamily, NormSpec
from imuon.backend.utility.errors import InvalidInput, NotPositiveDefinite, RankDeficient

logger = logging.getLogger(__name__)


class ManifoldKind(str, Enum):
    FIXED_RANK = "fixed_rank"
    SPD = "spd"
    STIEFEL = "stiefel"
    GRASSMANN = "grassmann"
    PRODUCT = "product"


class PolarMethod(str, Enum):
    EXACT = "exact"
    NEWTON_SCHULZ = "newton_schulz"


def _frozen(M, name: str) -> np.ndarray:
    arr = matcore.as_matrix(M, name).copy()
    arr.setflags(write=False)
    return arr


# =====================================================
# POINTS AND TANGENTS
# =====================================================

@dataclass(frozen=True, eq=False)
class FixedRankPoint:
    """X = B A with B m x r and A r x n, both full rank"""
    B: np.ndarray
    A: np.ndarray
    kind = ManifoldKind.FIXED_RANK

    def __post_init__(self):
        object.__setattr__(self, "B", _frozen(self.B, "B"))
        object.__setattr__(self, "A", _frozen(self.A, "A"))
        if self.B.shape[1] != self.A.shape[0]:
            raise InvalidInput(f"Factor shapes do not chain: {self.B.shape} x {self.A.shape}")

    @property
    def dims(self) -> Dict[str, int]:
        return {"m": self.B.shape[0], "n": self.A.shape[1], "r": self.B.shape[1]}

    def ambient(self) -> np.ndarray:
        return self.B @ self.A


@dataclass(frozen=True, eq=False)
class FixedRankTangent:
    Bdot: np.ndarray
    Adot: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Bdot", _frozen(self.Bdot, "Bdot"))
        object.__setattr__(self, "Adot", _frozen(self.Adot, "Adot"))


@dataclass(frozen=True, eq=False)
class SpdPoint:
    X: np.ndarray
    kind = ManifoldKind.SPD

    def __post_init__(self):
        object.__setattr__(self, "X", _frozen(self.X, "X"))
        if self.X.shape[0] != self.X.shape[1]:
            raise InvalidInput(f"SPD point must be square, got {self.X.shape}")

    @property
    def dims(self) -> Dict[str, int]:
        return {"n": self.X.shape[0]}


@dataclass(frozen=True, eq=False)
class StiefelPoint:
    X: np.ndarray
    kind = ManifoldKind.STIEFEL

    def __post_init__(self):
        object.__setattr__(self, "X", _frozen(self.X, "X"))

    @property
    def dims(self) -> Dict[str, int]:
        return {"m": self.X.shape[0], "r": self.X.shape[1]}


@dataclass(frozen=True, eq=False)
class GrassmannPoint:
    X: np.ndarray
    kind = ManifoldKind.GRASSMANN

    def __post_init__(self):
        object.__setattr__(self, "X", _frozen(self.X, "X"))

    @property
    def dims(self) -> Dict[str, int]:
        return {"m": self.X.shape[0], "r": self.X.shape[1]}


@dataclass(frozen=True, eq=False)
class MatrixTangent:
    """Tangent carried as one ambient matrix (SPD, Stiefel, Grassmann)"""
    Xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Xi", _frozen(self.Xi, "Xi"))


SpdTangent = MatrixTangent
StiefelTangent = MatrixTangent
GrassmannTangent = MatrixTangent


@dataclass(frozen=True, eq=False)
class ProductPoint:
    """Finite product of manifold points under the l-infinity product norm"""
    components: Tuple["ManifoldPoint", ...]
    kind = ManifoldKind.PRODUCT

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise InvalidInput("ProductPoint needs at least one component")
        if any(isinstance(c, ProductPoint) for c in self.components):
            raise InvalidInput("Nested products are not supported")


@dataclass(frozen=True, eq=False)
class ProductTangent:
    components: Tuple["TangentVector", ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))


ManifoldPoint = Union[FixedRankPoint, SpdPoint, StiefelPoint, GrassmannPoint, ProductPoint]
TangentVector = Union[FixedRankTangent, MatrixTangent, ProductTangent]


# =====================================================
# SCALED GRADIENTS AND LMO RESULTS
# =====================================================

@dataclass(frozen=True, eq=False)
class ScaledGradient:
    """
    Per-manifold scaled gradient. blocks holds the matrices whose singular
    values drive the LMO; aux keeps the factors needed to map back.
    """
    kind: ManifoldKind
    blocks: Tuple[np.ndarray, ...]
    aux: Dict[str, np.ndarray] = field(default_factory=dict)
    components: Tuple["ScaledGradient", ...] = ()


@dataclass(frozen=True, eq=False)
class LmoResult:
    xi_star: TangentVector
    dual_value: float
    riem_norm_sq: float
    H_dual: float
    H_dual_sum: float
    block_duals: Tuple[float, ...]
    blocks: Tuple[np.ndarray, ...] = ()


def _tangent_like(x: ManifoldPoint, ambient_blocks):
    if isinstance(x, FixedRankPoint):
        return FixedRankTangent(*ambient_blocks)
    return MatrixTangent(ambient_blocks)


# =====================================================
# VALIDATION
# =====================================================

def validate_point(x: ManifoldPoint) -> None:
    """
    Raise if x violates its manifold's point invariants

    Raises:
        RankDeficient, NotPositiveDefinite, InvalidInput
    """
    if isinstance(x, ProductPoint):
        for component in x.components:
            validate_point(component)
        return
    if isinstance(x, FixedRankPoint):
        for name, factor in (("B", x.B), ("A^T", x.A.T)):
            sigma = np.linalg.svd(factor, compute_uv=False)
            if sigma[-1] <= config.FACTOR_RANK_REL_TOL * sigma[0]:
                raise RankDeficient(f"Factor {name} is numerically rank deficient")
        return
    if isinstance(x, SpdPoint):
        if np.linalg.norm(x.X - x.X.T) > config.SYMMETRY_TOL * max(np.linalg.norm(x.X), 1.0):
            raise InvalidInput("SPD point is not symmetric")
        matcore.spd_sqrt_invsqrt(x.X)
        return
    if isinstance(x, (StiefelPoint, GrassmannPoint)):
        r = x.X.shape[1]
        if r > x.X.shape[0]:
            raise InvalidInput(f"Frame has more columns than rows: {x.X.shape}")
        if np.linalg.norm(x.X.T @ x.X - np.eye(r)) > config.POINT_ORTHO_TOL:
            raise InvalidInput("Frame columns are not orthonormal")
        return
    raise InvalidInput(f"Unknown point type {type(x).__name__}")


def tangent_residual(x: ManifoldPoint, xi: TangentVector) -> float:
    """Relative violation of the tangent-space constraint (0 for exact tangents)"""
    _check_shapes(x, xi)
    if isinstance(x, ProductPoint):
        return max(tangent_residual(c, t) for c, t in zip(x.components, xi.components))
    if isinstance(x, FixedRankPoint):
        return 0.0
    Xi = xi.Xi
    scale = 1.0 + np.linalg.norm(Xi)
    if isinstance(x, SpdPoint):
        return float(np.linalg.norm(Xi - Xi.T) / scale)
    if isinstance(x, StiefelPoint):
        P = x.X.T @ Xi
        return float(np.linalg.norm(P + P.T) / scale)
    return float(np.linalg.norm(x.X.T @ Xi) / scale)


def _check_shapes(x: ManifoldPoint, xi: TangentVector) -> None:
    if isinstance(x, ProductPoint):
        if not isinstance(xi, ProductTangent) or len(xi.components) != len(x.components):
            raise InvalidInput("Product tangent does not match the product point")
        return
    if isinstance(x, FixedRankPoint):
        if not isinstance(xi, FixedRankTangent) or xi.Bdot.shape != x.B.shape or xi.Adot.shape != x.A.shape:
            raise InvalidInput("Fixed-rank tangent shapes do not match the point")
        return
    if not isinstance(xi, MatrixTangent) or xi.Xi.shape != x.X.shape:
        raise InvalidInput(f"Tangent shape does not match point shape {x.X.shape}")


def _egrad_matrix(x: ManifoldPoint, egrad) -> np.ndarray:
    G = matcore.as_matrix(egrad, "egrad")
    expected = (x.B.shape[0], x.A.shape[1]) if isinstance(x, FixedRankPoint) else x.X.shape
    if G.shape != expected:
        raise InvalidInput(f"egrad shape {G.shape} does not match ambient shape {expected}")
    return G


def _product_egrads(x: ProductPoint, egrad) -> Sequence:
    if not isinstance(egrad, (tuple, list)) or len(egrad) != len(x.components):
        raise InvalidInput("Product egrad must be a sequence with one matrix per component")
    return egrad


# =====================================================
# METRIC AND RIEMANNIAN GRADIENT
# =====================================================

def metric_inner(x: ManifoldPoint, xi: TangentVector, zeta: TangentVector) -> float:
    """
    Riemannian metric g_x(xi, zeta)

    fixed-rank: tr(Bdot1^T Bdot2 A A^T) + tr(B^T B Adot1 Adot2^T)
    SPD: tr(X^{-1} xi X^{-1} zeta); Stiefel / Grassmann: Euclidean
    """
    _check_shapes(x, xi)
    _check_shapes(x, zeta)
    if isinstance(x, ProductPoint):
        return float(sum(metric_inner(c, a, b) for c, a, b in zip(x.components, xi.components, zeta.components)))
    if isinstance(x, FixedRankPoint):
        AAt = x.A @ x.A.T
        BtB = x.B.T @ x.B
        return matcore.frob_inner(xi.Bdot @ AAt, zeta.Bdot) + matcore.frob_inner(BtB @ xi.Adot, zeta.Adot)
    if isinstance(x, SpdPoint):
        left = sla.solve(x.X, xi.Xi, assume_a="pos")
        right = sla.solve(x.X, zeta.Xi, assume_a="pos")
        return float(np.trace(left @ right))
    return matcore.frob_inner(xi.Xi, zeta.Xi)


def riemannian_gradient(x: ManifoldPoint, egrad) -> TangentVector:
    """
    grad f under the metric: fixed-rank (grad_B f (AA^T)^{-1}, (B^T B)^{-1} grad_A f);
    SPD X grad X; Stiefel G - X sym(X^T G); Grassmann (I - X X^T) G
    """
    if isinstance(x, ProductPoint):
        grads = _product_egrads(x, egrad)
        return ProductTangent(tuple(riemannian_gradient(c, g) for c, g in zip(x.components, grads)))
    G = _egrad_matrix(x, egrad)
    if isinstance(x, FixedRankPoint):
        grad_B = G @ x.A.T
        grad_A = x.B.T @ G
        Bdot = sla.solve(x.A @ x.A.T, grad_B.T, assume_a="pos").T
        Adot = sla.solve(x.B.T @ x.B, grad_A, assume_a="pos")
        return FixedRankTangent(Bdot, Adot)
    if isinstance(x, SpdPoint):
        return MatrixTangent(matcore.sym_part(x.X @ matcore.sym_part(G) @ x.X))
    X = x.X
    P = X.T @ G
    if isinstance(x, StiefelPoint):
        return MatrixTangent(G - X @ matcore.sym_part(P))
    return MatrixTangent(G - X @ P)


# =====================================================
# SCALED GRADIENT
# =====================================================

def scale_gradient(x: ManifoldPoint, egrad, gram_root: Optional[bool] = None) -> ScaledGradient:
    """
    Compute H = G_x^{1/2}(grad f) per manifold

    Args:
        x: manifold point
        egrad: Euclidean gradient in ambient shape (fixed-rank: dX of shape m x n;
            product: one matrix per component)
        gram_root: fixed-rank only, use the dense (AA^T)^{-1/2} path instead of QR

    Returns:
        ScaledGradient whose blocks are the scaled matrices
    """
    if isinstance(x, ProductPoint):
        grads = _product_egrads(x, egrad)
        parts = tuple(scale_gradient(c, g, gram_root) for c, g in zip(x.components, grads))
        blocks = tuple(b for part in parts for b in part.blocks)
        return ScaledGradient(ManifoldKind.PRODUCT, blocks, {}, parts)
    G = _egrad_matrix(x, egrad)
    if isinstance(x, FixedRankPoint):
        use_gram = config.FIXED_RANK_GRAM_ROOT if gram_root is None else gram_root
        if use_gram:
            A_half, A_invhalf = matcore.spd_sqrt_invsqrt(x.A @ x.A.T)
            B_half, B_invhalf = matcore.spd_sqrt_invsqrt(x.B.T @ x.B)
            H_B = G @ x.A.T @ A_invhalf
            H_A = B_invhalf @ x.B.T @ G
            aux = {"A_invhalf": A_invhalf, "B_invhalf": B_invhalf}
        else:
            Q_A, R_A = matcore.thin_qr(x.A.T)
            Q_B, R_B = matcore.thin_qr(x.B)
            H_B = G @ Q_A
            H_A = Q_B.T @ G
            aux = {"Q_A": Q_A, "R_A": R_A, "Q_B": Q_B, "R_B": R_B}
        return ScaledGradient(ManifoldKind.FIXED_RANK, (H_B, H_A), aux)
    if isinstance(x, SpdPoint):
        X_half, X_invhalf = matcore.spd_sqrt_invsqrt(x.X)
        H = matcore.sym_part(X_half @ matcore.sym_part(G) @ X_half)
        return ScaledGradient(ManifoldKind.SPD, (H,), {"X_half": X_half, "X_invhalf": X_invhalf})
    X = x.X
    P = X.T @ G
    if isinstance(x, StiefelPoint):
        S = matcore.skew_part(P)
        N_hat = G - X @ P
        return ScaledGradient(ManifoldKind.STIEFEL, (S, N_hat))
    return ScaledGradient(ManifoldKind.GRASSMANN, (G - X @ P,))


def unscale(x: ManifoldPoint, scaled: ScaledGradient, blocks: Sequence[np.ndarray]) -> TangentVector:
    """
    Map scaled-space blocks Z back to a tangent vector xi = G_x^{-1/2} Z.
    scaled supplies the factorizations computed by scale_gradient at x.
    """
    if isinstance(x, ProductPoint):
        out, start = [], 0
        for component, part in zip(x.components, scaled.components):
            count = len(part.blocks)
            out.append(unscale(component, part, blocks[start:start + count]))
            start += count
        return ProductTangent(tuple(out))
    if isinstance(x, FixedRankPoint):
        Z_B, Z_A = blocks
        aux = scaled.aux
        if "R_A" in aux:
            Bdot = sla.solve_triangular(aux["R_A"], Z_B.T, lower=False).T
            Adot = sla.solve_triangular(aux["R_B"], Z_A, lower=False)
        else:
            Bdot = Z_B @ aux["A_invhalf"]
            Adot = aux["B_invhalf"] @ Z_A
        return FixedRankTangent(Bdot, Adot)
    if isinstance(x, SpdPoint):
        X_half = scaled.aux["X_half"]
        return MatrixTangent(matcore.sym_part(X_half @ blocks[0] @ X_half))
    X = x.X
    if isinstance(x, StiefelPoint):
        Z_skew, Z_normal = blocks
        Z_normal = Z_normal - X @ (X.T @ Z_normal)
        return MatrixTangent(X @ Z_skew + Z_normal)
    Z = blocks[0]
    return MatrixTangent(Z - X @ (X.T @ Z))


# =====================================================
# INTRINSIC LMO
# =====================================================

def _block_lmo(H: np.ndarray, norm: NormSpec, tau: float, polar: PolarMethod, skew: bool = False) -> Tuple[np.ndarray, float]:
    """Return (Z, support value of sigma(H)) for one scaled block"""
    if H.size == 0:
        return np.zeros_like(H), 0.0
    if polar == PolarMethod.NEWTON_SCHULZ and norm.family == NormFamily.SPECTRAL and not skew:
        sigma = matcore.svd(H).sigma
        if sigma[0] == 0.0:
            return np.zeros_like(H), 0.0
        if np.all(matcore.numerical_rank_mask(sigma, H.shape)):
            Z = tau * matcore.polar_newton_schulz(H)
            return Z, norms.support_value(sigma, norm)
        logger.debug("Rank-deficient block, using the exact polar factor")
    result = norms.matrix_lmo(H, norm, tau)
    Z = result.Z_star
    if skew:
        Z = 0.5 * (Z - Z.T)
    return Z, norms.support_value(result.sigma, norm)


def _component_lmo(x, scaled: ScaledGradient, norm: NormSpec, tau: float, polar: PolarMethod):
    if isinstance(x, SpdPoint):
        result = norms.symmetric_lmo(scaled.blocks[0], norm, tau)
        return [result.Z_star], [norms.support_value(result.sigma, norm)]
    if isinstance(x, StiefelPoint):
        S, N_hat = scaled.blocks
        Z_skew, d_skew = _block_lmo(S, norm, tau, polar, skew=True)
        Z_normal, d_normal = _block_lmo(N_hat, norm, tau, polar)
        return [Z_skew, Z_normal], [d_skew, d_normal]
    Zs, duals = [], []
    for H in scaled.blocks:
        Z, d = _block_lmo(H, norm, tau, polar)
        Zs.append(Z)
        duals.append(d)
    return Zs, duals


def _scaled_lmo(x, scaled: ScaledGradient, norm, tau, polar):
    if isinstance(x, ProductPoint):
        Zs, duals = [], []
        for component, part in zip(x.components, scaled.components):
            z_part, d_part = _component_lmo(component, part, norm, tau, polar)
            Zs.extend(z_part)
            duals.extend(d_part)
        return Zs, duals
    return _component_lmo(x, scaled, norm, tau, polar)


def _has_multiple_blocks(x: ManifoldPoint) -> bool:
    return isinstance(x, (FixedRankPoint, StiefelPoint, ProductPoint))


def lmo_direction(
    x: ManifoldPoint,
    egrad,
    norm: NormSpec,
    tau: float,
    polar: Union[str, PolarMethod] = PolarMethod.EXACT,
    gram_root: Optional[bool] = None,
    allow_specnuc_product: Optional[bool] = None,
) -> LmoResult:
    """
    Closed-form intrinsic LMO: maximize g_x(xi, grad f) subject to phi(G_x^{1/2} xi) <= tau,
    with every decoupled block constrained at tau.

    Args:
        x: manifold point
        egrad: Euclidean gradient (ambient shape)
        norm: unitarily invariant norm family
        tau: radius
        polar: "exact" or "newton_schulz" for spectral tall blocks
        gram_root: fixed-rank debug path
        allow_specnuc_product: permit specnuc on multi-block manifolds

    Returns:
        LmoResult with xi_star, dual value and norms
    """
    if not tau > 0:
        raise InvalidInput(f"tau must be positive, got {tau}")
    polar = PolarMethod(polar)
    allow = config.ALLOW_SPECNUC_ON_PRODUCT if allow_specnuc_product is None else allow_specnuc_product
    if norm.family == NormFamily.SPECNUC and _has_multiple_blocks(x) and not allow:
        raise InvalidInput("specnuc is disabled on multi-block manifolds")

    scaled = scale_gradient(x, egrad, gram_root)
    Zs, duals = _scaled_lmo(x, scaled, norm, tau, polar)
    xi = unscale(x, scaled, Zs)
    grad = riemannian_gradient(x, egrad)
    dual_value = metric_inner(x, xi, grad)
    riem_norm_sq = metric_inner(x, xi, xi)
    H_dual = max(duals) if duals else 0.0
    logger.debug(f"LMO on {x.kind.value} with {norm}: dual={dual_value:.6e} norm_sq={riem_norm_sq:.6e}")
    return LmoResult(
        xi_star=xi,
        dual_value=float(dual_value),
        riem_norm_sq=float(riem_norm_sq),
        H_dual=float(H_dual),
        H_dual_sum=float(sum(duals)),
        block_duals=tuple(float(d) for d in duals),
        blocks=tuple(Zs),
    )


# =====================================================
# RETRACTION AND GAUGE
# =====================================================

def scale_tangent(xi: TangentVector, alpha: float) -> TangentVector:
    if isinstance(xi, ProductTangent):
        return ProductTangent(tuple(scale_tangent(c, alpha) for c in xi.components))
    if isinstance(xi, FixedRankTangent):
        return FixedRankTangent(alpha * xi.Bdot, alpha * xi.Adot)
    return MatrixTangent(alpha * xi.Xi)


def zero_tangent(x: ManifoldPoint) -> TangentVector:
    if isinstance(x, ProductPoint):
        return ProductTangent(tuple(zero_tangent(c) for c in x.components))
    if isinstance(x, FixedRankPoint):
        return FixedRankTangent(np.zeros_like(x.B), np.zeros_like(x.A))
    return MatrixTangent(np.zeros_like(x.X))


def _is_zero(xi: TangentVector) -> bool:
    if isinstance(xi, ProductTangent):
        return all(_is_zero(c) for c in xi.components)
    if isinstance(xi, FixedRankTangent):
        return not np.any(xi.Bdot) and not np.any(xi.Adot)
    return not np.any(xi.Xi)


def retract(x: ManifoldPoint, xi: TangentVector, eta: float) -> ManifoldPoint:
    """
    Move from x along +eta * xi and map back onto the manifold

    Raises:
        RankDeficient: fixed-rank step lost rank
        NotPositiveDefinite: SPD input not positive definite
    """
    _check_shapes(x, xi)
    if eta < 0:
        raise InvalidInput(f"eta must be nonnegative, got {eta}")
    if isinstance(x, ProductPoint):
        return ProductPoint(tuple(retract(c, t, eta) for c, t in zip(x.components, xi.components)))
    if eta == 0.0 or _is_zero(xi):
        return x
    if isinstance(x, FixedRankPoint):
        candidate = FixedRankPoint(x.B + eta * xi.Bdot, x.A + eta * xi.Adot)
        try:
            validate_point(candidate)
        except RankDeficient as e:
            logger.error(f"Fixed-rank retraction lost rank at eta={eta}: {e}")
            raise
        return candidate
    if isinstance(x, SpdPoint):
        X_half, X_invhalf = matcore.spd_sqrt_invsqrt(x.X)
        W = matcore.sym_part(X_invhalf @ xi.Xi @ X_invhalf)
        return SpdPoint(matcore.sym_part(X_half @ matcore.spd_exp(eta * W) @ X_half))
    Q = matcore.qf(x.X + eta * xi.Xi)
    return type(x)(Q)


def gauge_transform(x: FixedRankPoint, N) -> FixedRankPoint:
    """Return the representative (B N^{-1}, N A) of the same ambient matrix"""
    N = matcore.as_matrix(N, "N")
    r = x.B.shape[1]
    if N.shape != (r, r):
        raise InvalidInput(f"Gauge must be {r} x {r}, got {N.shape}")
    if not np.isfinite(np.linalg.cond(N)) or np.linalg.cond(N) > config.GAUGE_MAX_COND:
        raise InvalidInput("Gauge matrix is singular or too ill-conditioned")
    B_new = sla.solve(N.T, x.B.T).T
    return FixedRankPoint(B_new, N @ x.A)


def ambient_update(x: FixedRankPoint, xi: FixedRankTangent) -> np.ndarray:
    """Ambient velocity Bdot A + B Adot"""
    _check_shapes(x, xi)
    return xi.Bdot @ x.A + x.B @ xi.Adot


# =====================================================
# CONSTANTS AND SAMPLING
# =====================================================

def c_phi(x: ManifoldPoint, norm: NormSpec) -> Optional[float]:
    """Analytic squared radius at x; products sum their components"""
    if isinstance(x, ProductPoint):
        values = [c_phi(c, norm) for c in x.components]
        return None if any(v is None for v in values) else float(sum(values))
    return norms.c_phi_analytic(norm, x.kind.value, x.dims)


def random_point(kind: Union[str, ManifoldKind], dims: Dict[str, int], rng: np.random.Generator) -> ManifoldPoint:
    """Random point with well-conditioned factors / eigenvalues"""
    kind = ManifoldKind(kind)
    if kind == ManifoldKind.FIXED_RANK:
        m, n, r = dims["m"], dims["n"], dims["r"]
        return FixedRankPoint(rng.standard_normal((m, r)), rng.standard_normal((r, n)))
    if kind == ManifoldKind.SPD:
        return SpdPoint(matcore.random_spd(dims["n"], rng))
    if kind == ManifoldKind.STIEFEL:
        return StiefelPoint(matcore.random_orthonormal(dims["m"], dims["r"], rng))
    if kind == ManifoldKind.GRASSMANN:
        return GrassmannPoint(matcore.random_orthonormal(dims["m"], dims["r"], rng))
    raise InvalidInput("random_point does not build products; combine components with ProductPoint")


def random_egrad(x: ManifoldPoint, rng: np.random.Generator):
    """Random Euclidean gradient shaped for x (symmetric for SPD)"""
    if isinstance(x, ProductPoint):
        return tuple(random_egrad(c, rng) for c in x.components)
    if isinstance(x, FixedRankPoint):
        return rng.standard_normal((x.B.shape[0], x.A.shape[1]))
    if isinstance(x, SpdPoint):
        return matcore.random_symmetric(x.X.shape[0], rng)
    return rng.standard_normal(x.X.shape)
