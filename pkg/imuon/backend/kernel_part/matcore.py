"""
Dense linear-algebra kernels shared by every other module:
SVD, thin QR, polar factor (exact and Newton-Schulz), symmetric
eigendecomposition, matrix sign, SPD roots, exp and log.
"""
import logging
from typing import NamedTuple, Optional, Tuple

import numpy as np
import scipy.linalg as sla

import imuon.configuration.config as config
from imuon.backend.utility.errors import (
    ConvergenceFailure,
    InvalidInput,
    NotPositiveDefinite,
    RankDeficient,
)

logger = logging.getLogger(__name__)


class SvdFactors(NamedTuple):
    """Compact SVD M = U diag(sigma) V^T, sigma nonincreasing"""
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray


# =====================================================
# INPUT CHECKS
# =====================================================

def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Convert to a finite 2-D float64 array or raise InvalidInput"""
    arr = np.asarray(M, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return arr


def sym_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def skew_part(M: np.ndarray) -> np.ndarray:
    """Return (M - M^T) / 2"""
    M = as_matrix(M)
    return 0.5 * (M - M.T)


def frob_inner(X: np.ndarray, Y: np.ndarray) -> float:
    return float(np.vdot(X, Y))


# =====================================================
# SVD AND POLAR FACTOR
# =====================================================

def svd(M) -> SvdFactors:
    """
    Compact SVD of a finite matrix

    Args:
        M: p x q matrix

    Returns:
        SvdFactors with min(p, q) columns in U and V
    """
    M = as_matrix(M)
    try:
        U, sigma, Vt = sla.svd(M, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        logger.warning("gesdd failed, retrying SVD with gesvd")
        U, sigma, Vt = sla.svd(M, full_matrices=False, lapack_driver="gesvd")
    return SvdFactors(U, sigma, Vt.T)


def numerical_rank_mask(sigma: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    """Boolean mask of singular values that are numerically nonzero"""
    if sigma.size == 0 or sigma[0] <= 0.0:
        return np.zeros(sigma.shape, dtype=bool)
    cutoff = max(shape) * np.finfo(np.float64).eps * sigma[0]
    return sigma > cutoff


def polar_exact(M) -> np.ndarray:
    """Polar factor U V^T on the compact SVD; null directions stay zero"""
    factors = svd(M)
    keep = numerical_rank_mask(factors.sigma, factors.U.shape[:1] + factors.V.shape[:1])
    return (factors.U[:, keep]) @ (factors.V[:, keep]).T


def polar_newton_schulz(M, max_iters: Optional[int] = None, tol: Optional[float] = None) -> np.ndarray:
    """
    Cubic Newton-Schulz iteration X <- 1.5 X - 0.5 X X^T X from X0 = M / ||M||_F

    Args:
        M: full column-rank matrix (wide input is handled by transposing)
        max_iters: iteration budget, config.NS_MAX_ITERS by default
        tol: stop when ||X^T X - I||_F <= tol, config.NS_TOL by default

    Returns:
        Orthonormal-column approximation of the polar factor
    """
    max_iters = config.NS_MAX_ITERS if max_iters is None else max_iters
    tol = config.NS_TOL if tol is None else tol
    M = as_matrix(M)
    transposed = M.shape[0] < M.shape[1]
    X = M.T if transposed else M
    eye = np.eye(X.shape[1])

    residual = np.linalg.norm(X.T @ X - eye)
    if residual <= tol:
        return X.T.copy() if transposed else X.copy()

    scale = np.linalg.norm(X)
    if scale == 0.0:
        raise InvalidInput("Newton-Schulz needs a nonzero full-rank matrix")
    X = X / scale
    for iteration in range(1, max_iters + 1):
        X = 1.5 * X - 0.5 * X @ (X.T @ X)
        residual = np.linalg.norm(X.T @ X - eye)
        if residual <= tol:
            logger.debug(f"Newton-Schulz converged in {iteration} iterations")
            return X.T if transposed else X
    raise ConvergenceFailure("Newton-Schulz did not converge", residual=float(residual), iterations=max_iters)


# =====================================================
# SYMMETRIC EIGENPROBLEMS
# =====================================================

def sym_eig(S) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigendecomposition S = Q diag(lam) Q^T with lam nonincreasing

    Raises:
        InvalidInput: if S is not square or visibly asymmetric
    """
    S = as_matrix(S)
    if S.shape[0] != S.shape[1]:
        raise InvalidInput(f"sym_eig needs a square matrix, got {S.shape}")
    norm = np.linalg.norm(S)
    if np.linalg.norm(S - S.T) > config.SYMMETRY_TOL * max(norm, 1e-300):
        raise InvalidInput("sym_eig input is not symmetric")
    lam, Q = sla.eigh(sym_part(S))
    return Q[:, ::-1], lam[::-1]


def matrix_sign_sym(S, zero_tol: Optional[float] = None) -> np.ndarray:
    """Q diag(sign(lam)) Q^T with |lam| <= EIG_ZERO_REL_TOL * max|lam| mapped to 0"""
    Q, lam = sym_eig(S)
    rel = config.EIG_ZERO_REL_TOL if zero_tol is None else zero_tol
    cutoff = rel * (np.max(np.abs(lam)) if lam.size else 0.0)
    signs = np.where(np.abs(lam) > cutoff, np.sign(lam), 0.0)
    return sym_part((Q * signs) @ Q.T)


def spd_eig(X) -> Tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of an SPD matrix; raises NotPositiveDefinite below the floor"""
    Q, lam = sym_eig(X)
    n = lam.size
    floor = config.SPD_FLOOR_REL * float(np.trace(X)) / max(n, 1)
    if lam[-1] <= floor:
        raise NotPositiveDefinite("Matrix is not positive definite", min_eigenvalue=float(lam[-1]))
    return Q, lam


def spd_sqrt_invsqrt(X) -> Tuple[np.ndarray, np.ndarray]:
    """Return (X^{1/2}, X^{-1/2}) from one eigendecomposition"""
    Q, lam = spd_eig(X)
    root = np.sqrt(lam)
    X_half = sym_part((Q * root) @ Q.T)
    X_invhalf = sym_part((Q / root) @ Q.T)
    return X_half, X_invhalf


def spd_exp(S) -> np.ndarray:
    """Exponential of a symmetric matrix"""
    Q, lam = sym_eig(S)
    return sym_part((Q * np.exp(lam)) @ Q.T)


def spd_log(X) -> np.ndarray:
    """Principal logarithm of an SPD matrix"""
    Q, lam = spd_eig(X)
    return sym_part((Q * np.log(lam)) @ Q.T)


def log_divided_differences(lam: np.ndarray) -> np.ndarray:
    """
    Daleckii-Krein kernel of log: (log a - log b)/(a - b), 1/a on the diagonal
    and for numerically equal eigenvalues.
    """
    a = lam[:, None]
    b = lam[None, :]
    diff = a - b
    close = np.abs(diff) <= 1e-12 * np.maximum(np.abs(a), np.abs(b))
    safe = np.where(close, 1.0, diff)
    kernel = (np.log(a) - np.log(b)) / safe
    mean = 0.5 * (a + b)
    return np.where(close, 1.0 / mean, kernel)


def log_frechet_adjoint(Q: np.ndarray, lam: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
    """
    Adjoint of the Frechet derivative of log at P = Q diag(lam) Q^T applied to
    a symmetric cotangent.
    """
    inner = Q.T @ sym_part(cotangent) @ Q
    return sym_part(Q @ (log_divided_differences(lam) * inner) @ Q.T)


# =====================================================
# QR AND NORM ESTIMATES
# =====================================================

def thin_qr(M) -> Tuple[np.ndarray, np.ndarray]:
    """
    Thin QR with a positive R diagonal

    Raises:
        RankDeficient: if M is wide or |R_ii| <= QR_RANK_REL_TOL * ||M||_F
    """
    M = as_matrix(M)
    rows, cols = M.shape
    if rows < cols:
        raise RankDeficient(f"thin_qr needs rows >= cols, got {M.shape}")
    Q, R = sla.qr(M, mode="economic")
    signs = np.where(np.diag(R) < 0.0, -1.0, 1.0)
    Q = Q * signs
    R = signs[:, None] * R
    threshold = config.QR_RANK_REL_TOL * np.linalg.norm(M)
    if cols and np.min(np.abs(np.diag(R))) <= threshold:
        raise RankDeficient("thin_qr input is numerically rank deficient")
    return Q, R


def qf(M) -> np.ndarray:
    """Q factor of the sign-fixed thin QR"""
    return thin_qr(M)[0]


def spectral_norm_estimate(M, power_iters: Optional[int] = None) -> float:
    """Power-iteration lower bound on ||M||_2 from a fixed-seed start vector"""
    power_iters = config.POWER_ITERS if power_iters is None else power_iters
    M = as_matrix(M)
    rng = np.random.default_rng(config.POWER_ITERATION_SEED)
    v = rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(max(power_iters, 1)):
        w = M @ v
        estimate = float(np.linalg.norm(w))
        if estimate == 0.0:
            return 0.0
        v = M.T @ w
        norm_v = np.linalg.norm(v)
        if norm_v == 0.0:
            break
        v /= norm_v
    return float(np.linalg.norm(M @ v)) if power_iters > 0 else estimate


# =====================================================
# RANDOM SAMPLING HELPERS
# =====================================================

def random_orthonormal(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return qf(rng.standard_normal((rows, cols)))


def random_symmetric(n: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.standard_normal((n, n))
    return sym_part(G) / np.sqrt(n)


def random_spd(n: int, rng: np.random.Generator, shift: float = 1.0) -> np.ndarray:
    G = rng.standard_normal((n, n)) / np.sqrt(n)
    return sym_part(G @ G.T + shift * np.eye(n))


def random_with_condition(rows: int, cols: int, cond: float, rng: np.random.Generator) -> np.ndarray:
    """Random matrix whose singular values are log-spaced from 1 down to 1/cond"""
    k = min(rows, cols)
    U = random_orthonormal(rows, k, rng)
    V = random_orthonormal(cols, k, rng)
    sigma = np.geomspace(1.0, 1.0 / cond, k)
    return (U * sigma) @ V.T
