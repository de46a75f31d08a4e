"""
Desk-scale objectives with analytic Euclidean gradients:
fixed-rank matrix completion, SPD prototype classification, Grassmann
Frechet prototypes and Stiefel sub-center prototypes, with synthetic
instance generators and gradient samplers.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as sp_linalg
from scipy.special import logsumexp, softmax

import imuon.backend.kernel_part.matcore as matcore
import imuon.backend.manifold_part.manifolds as manifolds
import imuon.configuration.config as config
from imuon.backend.manifold_part.manifolds import (
    FixedRankPoint,
    GrassmannPoint,
    ProductPoint,
    SpdPoint,
    StiefelPoint,
)
from imuon.backend.utility.errors import InvalidInput

logger = logging.getLogger(__name__)


# =====================================================
# MATRIX COMPLETION
# =====================================================

@dataclass(frozen=True, eq=False)
class CompletionInstance:
    """Rank-r ground truth U diag(sigma) V^T observed on omega (|omega| x 2 indices)"""
    m: int
    n: int
    r: int
    s: int
    kappa: float
    rho: float
    seed: int
    omega: np.ndarray
    Y: np.ndarray
    U_star: np.ndarray
    sigma_star: np.ndarray
    V_star: np.ndarray
    spacing: str = "log"

    def ground_truth(self) -> np.ndarray:
        return (self.U_star * self.sigma_star) @ self.V_star.T


def gen_completion(m: int, n: int, r: int, s: int, kappa: float, rho: float, seed: int) -> CompletionInstance:
    """
    Random rank-r matrix with sigma log-spaced from sigma_1 to sigma_1 / kappa
    (scaled to unit entry rms), observed on s r (m + n) uniform entries with
    Gaussian noise of relative scale rho
    """
    count = s * r * (m + n)
    if count > m * n:
        raise InvalidInput(f"Oversampling {count} exceeds the {m * n} entries")
    if not 1 <= r <= min(m, n) or kappa < 1.0 or rho < 0.0:
        raise InvalidInput(f"Invalid completion parameters r={r} kappa={kappa} rho={rho}")
    rng = np.random.default_rng(seed)
    U = matcore.random_orthonormal(m, r, rng)
    V = matcore.random_orthonormal(n, r, rng)
    sigma = np.geomspace(1.0, 1.0 / kappa, r)
    sigma = sigma * np.sqrt(m * n / np.sum(sigma ** 2))

    flat = np.sort(rng.choice(m * n, size=count, replace=False))
    rows, cols = np.divmod(flat, n)
    clean = np.sum((U[rows] * sigma) * V[cols], axis=1)
    Y = clean
    if rho > 0.0:
        rms = np.sqrt(np.mean(clean ** 2))
        Y = clean + rng.standard_normal(count) * rho * rms
    logger.info(f"Generated completion instance m={m} n={n} r={r} |omega|={count} kappa={kappa} rho={rho}")
    return CompletionInstance(
        m=m, n=n, r=r, s=s, kappa=float(kappa), rho=float(rho), seed=seed,
        omega=np.stack([rows, cols], axis=1).astype(np.int64), Y=Y,
        U_star=U, sigma_star=sigma, V_star=V,
    )


def completion_value_grad(inst: CompletionInstance, x: FixedRankPoint, indices: Optional[np.ndarray] = None) -> Tuple[float, np.ndarray]:
    """
    f = (1 / 2|omega|) ||P_omega(BA - Y)||^2 and its gradient P_omega(BA - Y) / |omega|
    as a dense m x n matrix. indices restricts to a subset of omega.
    """
    if x.B.shape[0] != inst.m or x.A.shape[1] != inst.n:
        raise InvalidInput(f"Point shape {(x.B.shape[0], x.A.shape[1])} does not match instance {(inst.m, inst.n)}")
    omega = inst.omega if indices is None else inst.omega[indices]
    Y = inst.Y if indices is None else inst.Y[indices]
    rows, cols = omega[:, 0], omega[:, 1]
    count = rows.size
    residual = np.sum(x.B[rows] * x.A[:, cols].T, axis=1) - Y
    f = 0.5 * float(np.dot(residual, residual)) / count
    G = np.zeros((inst.m, inst.n))
    G[rows, cols] = residual / count
    return f, G


def completion_init(inst: CompletionInstance, alpha: float = 1.0) -> FixedRankPoint:
    """
    Balanced factors of the rank-r SVD of the rescaled zero-filled observations,
    then imbalanced as (alpha B, A / alpha)
    """
    rows, cols = inst.omega[:, 0], inst.omega[:, 1]
    p = rows.size / (inst.m * inst.n)
    observed = sparse.csr_matrix((inst.Y / p, (rows, cols)), shape=(inst.m, inst.n))
    v0 = np.ones(min(inst.m, inst.n)) / np.sqrt(min(inst.m, inst.n))
    if inst.r < min(inst.m, inst.n) - 1:
        L, S, Rt = sp_linalg.svds(observed, k=inst.r, v0=v0)
        order = np.argsort(S)[::-1]
        L, S, Rt = L[:, order], S[order], Rt[order]
    else:
        L, S, V = matcore.svd(observed.toarray())
        L, S, Rt = L[:, :inst.r], S[:inst.r], V[:, :inst.r].T
    root = np.sqrt(S)
    return FixedRankPoint(alpha * (L * root), (root[:, None] * Rt) / alpha)


class CompletionProblem:
    """Completion objective over fixed-rank points; metric is relative recovery error"""

    def __init__(self, inst: CompletionInstance):
        self.inst = inst
        self.population = inst.omega.shape[0]
        self._truth = inst.ground_truth()
        self._truth_norm = float(np.linalg.norm(self._truth))

    def value_grad(self, x, indices=None):
        return completion_value_grad(self.inst, x, indices)

    def value(self, x) -> float:
        return self.value_grad(x)[0]

    def egrad(self, x):
        return self.value_grad(x)[1]

    def metric(self, x) -> float:
        return relative_error(self, x)

    def initial_point(self, rng: Optional[np.random.Generator] = None, alpha: float = 1.0) -> FixedRankPoint:
        return completion_init(self.inst, alpha)


def relative_error(problem: CompletionProblem, x: FixedRankPoint) -> float:
    """||BA - X*||_F / ||X*||_F"""
    return float(np.linalg.norm(x.ambient() - problem._truth) / problem._truth_norm)


# =====================================================
# SPD PROTOTYPES
# =====================================================

@dataclass(frozen=True, eq=False)
class SpdProtoInstance:
    n_dim: int
    K: int
    per_class: int
    seed: int
    beta: float
    lambda_reg: float
    spread: float
    samples: np.ndarray
    labels: np.ndarray
    test_samples: np.ndarray
    test_labels: np.ndarray
    anchors: np.ndarray


def gen_spd_proto(
    n_dim: int,
    K: int,
    per_class: int,
    seed: int,
    test_per_class: Optional[int] = None,
    beta: Optional[float] = None,
    lambda_reg: Optional[float] = None,
    spread: Optional[float] = None,
) -> SpdProtoInstance:
    """
    Clustered SPD samples C = M_c^{1/2} exp(spread W) M_c^{1/2} around class
    centers M_c = G G^T + I, with log-Euclidean class means as anchors
    """
    if n_dim < 1 or K < 1 or per_class < 1:
        raise InvalidInput(f"Invalid SPD prototype sizes n={n_dim} K={K} per_class={per_class}")
    spread = config.SPD_SAMPLE_SPREAD if spread is None else spread
    test_per_class = per_class if test_per_class is None else test_per_class
    rng = np.random.default_rng(seed)
    roots = []
    for _ in range(K):
        G = rng.standard_normal((n_dim, n_dim))
        roots.append(matcore.spd_sqrt_invsqrt(matcore.sym_part(G @ G.T + np.eye(n_dim)))[0])

    def draw(count):
        mats, labels = [], []
        for c in range(K):
            for _ in range(count):
                W = matcore.random_symmetric(n_dim, rng)
                mats.append(matcore.sym_part(roots[c] @ matcore.spd_exp(spread * W) @ roots[c]))
                labels.append(c)
        return np.array(mats), np.array(labels, dtype=np.int64)

    samples, labels = draw(per_class)
    test_samples, test_labels = draw(test_per_class)
    anchors = np.array([
        matcore.spd_exp(np.mean([matcore.spd_log(C) for C in samples[labels == c]], axis=0))
        for c in range(K)
    ])
    return SpdProtoInstance(
        n_dim=n_dim, K=K, per_class=per_class, seed=seed,
        beta=config.SPD_LOGIT_SCALE if beta is None else float(beta),
        lambda_reg=config.SPD_ANCHOR_WEIGHT if lambda_reg is None else float(lambda_reg),
        spread=float(spread), samples=samples, labels=labels,
        test_samples=test_samples, test_labels=test_labels, anchors=anchors,
    )


def affine_invariant_dist_sq(C_invhalf: np.ndarray, X: np.ndarray) -> float:
    """||log(C^{-1/2} X C^{-1/2})||_F^2 given C^{-1/2}"""
    _, lam = matcore.spd_eig(matcore.sym_part(C_invhalf @ X @ C_invhalf))
    return float(np.sum(np.log(lam) ** 2))


def affine_invariant_dist_sq_grad(C_invhalf: np.ndarray, X: np.ndarray) -> Tuple[float, np.ndarray]:
    """Squared affine-invariant distance and its Euclidean gradient in X"""
    Q, lam = matcore.spd_eig(matcore.sym_part(C_invhalf @ X @ C_invhalf))
    log_lam = np.log(lam)
    cotangent = 2.0 * (Q * log_lam) @ Q.T
    grad_P = matcore.log_frechet_adjoint(Q, lam, cotangent)
    return float(np.sum(log_lam ** 2)), matcore.sym_part(C_invhalf @ grad_P @ C_invhalf)


def spd_proto_value_grad(
    inst: SpdProtoInstance,
    prototypes: Sequence[np.ndarray],
    indices: Optional[np.ndarray] = None,
    sample_invhalf: Optional[np.ndarray] = None,
    anchor_invhalf: Optional[np.ndarray] = None,
) -> Tuple[float, Tuple[np.ndarray, ...]]:
    """
    Mean cross-entropy over logits -beta d(C_i, X_c)^2 plus
    lambda sum_c d(X_c, anchor_c)^2, with gradients for every prototype
    """
    if len(prototypes) != inst.K:
        raise InvalidInput(f"Expected {inst.K} prototypes, got {len(prototypes)}")
    idx = np.arange(inst.labels.size) if indices is None else np.asarray(indices)
    if sample_invhalf is None:
        sample_invhalf = np.array([matcore.spd_sqrt_invsqrt(C)[1] for C in inst.samples])
    if anchor_invhalf is None:
        anchor_invhalf = np.array([matcore.spd_sqrt_invsqrt(A)[1] for A in inst.anchors])
    N, K = idx.size, inst.K

    dist = np.zeros((N, K))
    dgrad = np.zeros((N, K, inst.n_dim, inst.n_dim))
    for row, i in enumerate(idx):
        for c in range(K):
            dist[row, c], dgrad[row, c] = affine_invariant_dist_sq_grad(sample_invhalf[i], prototypes[c])

    logits = -inst.beta * dist
    labels = inst.labels[idx]
    lse = logsumexp(logits, axis=1)
    loss = float(np.mean(lse - logits[np.arange(N), labels]))
    probs = softmax(logits, axis=1)
    probs[np.arange(N), labels] -= 1.0
    weights = -inst.beta * probs / N

    grads = []
    for c in range(K):
        reg, reg_grad = affine_invariant_dist_sq_grad(anchor_invhalf[c], prototypes[c])
        loss += inst.lambda_reg * reg
        grad = np.tensordot(weights[:, c], dgrad[:, c], axes=1) + inst.lambda_reg * reg_grad
        grads.append(matcore.sym_part(grad))
    return loss, tuple(grads)


def spd_proto_accuracy(inst: SpdProtoInstance, prototypes: Sequence[np.ndarray], split: str = "test") -> float:
    """Nearest-prototype accuracy under the affine-invariant distance"""
    samples, labels = (inst.test_samples, inst.test_labels) if split == "test" else (inst.samples, inst.labels)
    proto_invhalf = [matcore.spd_sqrt_invsqrt(X)[1] for X in prototypes]
    predictions = [
        int(np.argmin([affine_invariant_dist_sq(P, C) for P in proto_invhalf]))
        for C in samples
    ]
    return float(np.mean(np.array(predictions) == labels))


class SpdProtoProblem:
    """Prototype objective on the product of K SPD manifolds"""

    def __init__(self, inst: SpdProtoInstance):
        self.inst = inst
        self.population = inst.labels.size
        self._sample_invhalf = np.array([matcore.spd_sqrt_invsqrt(C)[1] for C in inst.samples])
        self._anchor_invhalf = np.array([matcore.spd_sqrt_invsqrt(A)[1] for A in inst.anchors])

    def value_grad(self, x: ProductPoint, indices=None):
        prototypes = [component.X for component in x.components]
        return spd_proto_value_grad(self.inst, prototypes, indices, self._sample_invhalf, self._anchor_invhalf)

    def value(self, x) -> float:
        return self.value_grad(x)[0]

    def egrad(self, x):
        return self.value_grad(x)[1]

    def metric(self, x) -> float:
        return spd_proto_accuracy(self.inst, [c.X for c in x.components])

    def initial_point(self, rng: Optional[np.random.Generator] = None) -> ProductPoint:
        return ProductPoint(tuple(SpdPoint(A) for A in self.inst.anchors))


# =====================================================
# GRASSMANN FRECHET PROTOTYPES
# =====================================================

@dataclass(frozen=True, eq=False)
class GrassmannFrechetInstance:
    m: int
    k: int
    K: int
    per_class: int
    seed: int
    spread: float
    samples: np.ndarray
    labels: np.ndarray
    test_samples: np.ndarray
    test_labels: np.ndarray


def gen_grassmann_frechet(
    m: int, k: int, K: int, per_class: int, seed: int,
    test_per_class: Optional[int] = None, spread: Optional[float] = None,
) -> GrassmannFrechetInstance:
    """Subspace samples qf(center + spread G / sqrt(m)) around K random centers"""
    if not 1 <= k <= m or K < 1 or per_class < 1:
        raise InvalidInput(f"Invalid Grassmann sizes m={m} k={k} K={K}")
    spread = config.GRASSMANN_SAMPLE_SPREAD if spread is None else spread
    test_per_class = per_class if test_per_class is None else test_per_class
    rng = np.random.default_rng(seed)
    centers = [matcore.random_orthonormal(m, k, rng) for _ in range(K)]

    def draw(count):
        frames, labels = [], []
        for c in range(K):
            for _ in range(count):
                frames.append(matcore.qf(centers[c] + spread * rng.standard_normal((m, k)) / np.sqrt(m)))
                labels.append(c)
        return np.array(frames), np.array(labels, dtype=np.int64)

    samples, labels = draw(per_class)
    test_samples, test_labels = draw(test_per_class)
    return GrassmannFrechetInstance(
        m=m, k=k, K=K, per_class=per_class, seed=seed, spread=float(spread),
        samples=samples, labels=labels, test_samples=test_samples, test_labels=test_labels,
    )


def _principal_cosines(X: np.ndarray, S: np.ndarray):
    U, s, V = matcore.svd(X.T @ S)
    return U, np.clip(s, 0.0, config.PRINCIPAL_ANGLE_CLAMP), s, V


def grassmann_dist_sq(X: np.ndarray, S: np.ndarray) -> float:
    """Sum of squared principal angles between span(X) and span(S)"""
    _, clamped, _, _ = _principal_cosines(X, S)
    return float(np.sum(np.arccos(clamped) ** 2))


def grassmann_dist_sq_grad(X: np.ndarray, S: np.ndarray) -> Tuple[float, np.ndarray]:
    """Squared geodesic distance and its Euclidean gradient in X (clamped angles get zero slope)"""
    U, clamped, raw, V = _principal_cosines(X, S)
    theta = np.arccos(clamped)
    active = raw < config.PRINCIPAL_ANGLE_CLAMP
    slope = np.where(active, -2.0 * theta / np.sqrt(1.0 - clamped ** 2), 0.0)
    return float(np.sum(theta ** 2)), S @ (V * slope) @ U.T


def grassmann_frechet_value_grad(
    inst: GrassmannFrechetInstance, X_c: np.ndarray, c: int, indices: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray]:
    """Mean squared geodesic distance from X_c to the class-c samples"""
    members = np.flatnonzero(inst.labels == c)
    if indices is not None:
        members = np.intersect1d(members, indices)
    if members.size == 0:
        return 0.0, np.zeros_like(X_c)
    total, grad = 0.0, np.zeros_like(X_c)
    for i in members:
        d, g = grassmann_dist_sq_grad(X_c, inst.samples[i])
        total += d
        grad += g
    return total / members.size, grad / members.size


def grassmann_accuracy(inst: GrassmannFrechetInstance, prototypes: Sequence[np.ndarray], split: str = "test") -> float:
    samples, labels = (inst.test_samples, inst.test_labels) if split == "test" else (inst.samples, inst.labels)
    predictions = [int(np.argmin([grassmann_dist_sq(P, S) for P in prototypes])) for S in samples]
    return float(np.mean(np.array(predictions) == labels))


class GrassmannFrechetProblem:
    """Sum over classes of the per-class Frechet objective; one Grassmann prototype per class"""

    def __init__(self, inst: GrassmannFrechetInstance):
        self.inst = inst
        self.population = inst.labels.size

    def value_grad(self, x: ProductPoint, indices=None):
        total, grads = 0.0, []
        for c, component in enumerate(x.components):
            f, g = grassmann_frechet_value_grad(self.inst, component.X, c, indices)
            total += f
            grads.append(g)
        return total, tuple(grads)

    def value(self, x) -> float:
        return self.value_grad(x)[0]

    def egrad(self, x):
        return self.value_grad(x)[1]

    def metric(self, x) -> float:
        return grassmann_accuracy(self.inst, [c.X for c in x.components])

    def initial_point(self, rng: np.random.Generator) -> ProductPoint:
        return ProductPoint(tuple(
            GrassmannPoint(matcore.random_orthonormal(self.inst.m, self.inst.k, rng)) for _ in range(self.inst.K)
        ))


# =====================================================
# STIEFEL SUB-CENTER PROTOTYPES
# =====================================================

@dataclass(frozen=True, eq=False)
class StiefelProtoInstance:
    m: int
    C: int
    q: int
    per_class: int
    seed: int
    margin: float
    gamma: float
    spread: float
    features: np.ndarray
    labels: np.ndarray
    test_features: np.ndarray
    test_labels: np.ndarray


def _unit_rows(M: np.ndarray) -> np.ndarray:
    return M / np.linalg.norm(M, axis=1, keepdims=True)


def gen_stiefel_proto(
    m: int, C: int, q: int, per_class: int, seed: int,
    test_per_class: Optional[int] = None, margin: Optional[float] = None,
    gamma: Optional[float] = None, spread: Optional[float] = None,
) -> StiefelProtoInstance:
    """Unit-sphere features in Gaussian clusters around q random sub-centers per class"""
    if C * q > m or C < 1 or q < 1 or per_class < 1:
        raise InvalidInput(f"Need C q <= m, got m={m} C={C} q={q}")
    spread = config.STIEFEL_SAMPLE_SPREAD if spread is None else spread
    test_per_class = per_class if test_per_class is None else test_per_class
    rng = np.random.default_rng(seed)
    centers = _unit_rows(rng.standard_normal((C, q, m)).reshape(C * q, m)).reshape(C, q, m)

    def draw(count):
        feats, labels = [], []
        for c in range(C):
            picks = rng.integers(0, q, size=count)
            noise = spread * rng.standard_normal((count, m)) / np.sqrt(m)
            feats.append(_unit_rows(centers[c, picks] + noise))
            labels.extend([c] * count)
        return np.concatenate(feats), np.array(labels, dtype=np.int64)

    features, labels = draw(per_class)
    test_features, test_labels = draw(test_per_class)
    return StiefelProtoInstance(
        m=m, C=C, q=q, per_class=per_class, seed=seed,
        margin=config.STIEFEL_MARGIN if margin is None else float(margin),
        gamma=config.STIEFEL_LOGIT_SCALE if gamma is None else float(gamma),
        spread=float(spread), features=features, labels=labels,
        test_features=test_features, test_labels=test_labels,
    )


def _subcenter_scores(features: np.ndarray, X: np.ndarray, C: int, q: int):
    scores = (features @ X).reshape(features.shape[0], C, q)
    best = np.argmax(scores, axis=2)
    return np.take_along_axis(scores, best[:, :, None], axis=2)[:, :, 0], best


def stiefel_proto_value_grad(inst: StiefelProtoInstance, X: np.ndarray, indices: Optional[np.ndarray] = None) -> Tuple[float, np.ndarray]:
    """
    Additive-margin softmax over s_c = max_j h^T x_{c,j}; column c q + j of X is
    sub-center j of class c, argmax ties go to the lowest j
    """
    if X.shape != (inst.m, inst.C * inst.q):
        raise InvalidInput(f"Expected X of shape {(inst.m, inst.C * inst.q)}, got {X.shape}")
    idx = np.arange(inst.labels.size) if indices is None else np.asarray(indices)
    H = inst.features[idx]
    labels = inst.labels[idx]
    N = idx.size
    scores, best = _subcenter_scores(H, X, inst.C, inst.q)
    onehot = np.zeros((N, inst.C))
    onehot[np.arange(N), labels] = 1.0
    logits = inst.gamma * (scores - inst.margin * onehot)
    loss = float(np.mean(logsumexp(logits, axis=1) - logits[np.arange(N), labels]))

    coef = inst.gamma * (softmax(logits, axis=1) - onehot) / N
    weights = np.zeros((N, inst.C * inst.q))
    columns = np.arange(inst.C)[None, :] * inst.q + best
    np.put_along_axis(weights, columns, coef, axis=1)
    return loss, H.T @ weights


def stiefel_accuracy(inst: StiefelProtoInstance, X: np.ndarray, split: str = "test") -> float:
    features, labels = (inst.test_features, inst.test_labels) if split == "test" else (inst.features, inst.labels)
    scores, _ = _subcenter_scores(features, X, inst.C, inst.q)
    return float(np.mean(np.argmax(scores, axis=1) == labels))


class StiefelProtoProblem:
    def __init__(self, inst: StiefelProtoInstance):
        self.inst = inst
        self.population = inst.labels.size

    def value_grad(self, x: StiefelPoint, indices=None):
        return stiefel_proto_value_grad(self.inst, x.X, indices)

    def value(self, x) -> float:
        return self.value_grad(x)[0]

    def egrad(self, x):
        return self.value_grad(x)[1]

    def metric(self, x) -> float:
        return stiefel_accuracy(self.inst, x.X)

    def initial_point(self, rng: np.random.Generator) -> StiefelPoint:
        """Class feature means, jittered per sub-center, then orthonormalized"""
        inst = self.inst
        columns = []
        for c in range(inst.C):
            mean = inst.features[inst.labels == c].mean(axis=0)
            for _ in range(inst.q):
                columns.append(mean + 0.1 * rng.standard_normal(inst.m) / np.sqrt(inst.m))
        return StiefelPoint(matcore.qf(np.array(columns).T))


# =====================================================
# GRADIENT SAMPLERS
# =====================================================

class FullBatchSampler:
    def __init__(self, problem):
        self.problem = problem

    def sample(self, x, rng: np.random.Generator):
        return self.problem.egrad(x)


class MinibatchSampler:
    """Uniform minibatch without replacement over the problem's sample population"""

    def __init__(self, problem, batch_size: int):
        if batch_size < 1:
            raise InvalidInput(f"batch_size must be positive, got {batch_size}")
        self.problem = problem
        self.batch_size = batch_size

    def sample(self, x, rng: np.random.Generator):
        if self.batch_size >= self.problem.population:
            return self.problem.egrad(x)
        indices = np.sort(rng.choice(self.problem.population, size=self.batch_size, replace=False))
        return self.problem.value_grad(x, indices)[1]


class AdditiveNoiseSampler:
    """Full gradient plus Gaussian noise of Frobenius size sigma per component"""

    def __init__(self, problem, sigma: float):
        if sigma < 0.0:
            raise InvalidInput(f"sigma must be nonnegative, got {sigma}")
        self.problem = problem
        self.sigma = sigma

    def _perturb(self, G: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.sigma == 0.0:
            return G
        noise = rng.standard_normal(G.shape)
        if G.shape[0] == G.shape[1] and np.allclose(G, G.T):
            noise = matcore.sym_part(noise)
        return G + self.sigma * noise / np.linalg.norm(noise)

    def sample(self, x, rng: np.random.Generator):
        grad = self.problem.egrad(x)
        if isinstance(grad, tuple):
            return tuple(self._perturb(g, rng) for g in grad)
        return self._perturb(grad, rng)


# =====================================================
# REGISTRY
# =====================================================

PROBLEM_MANIFOLDS = {
    "complete": manifolds.ManifoldKind.FIXED_RANK,
    "spd": manifolds.ManifoldKind.SPD,
    "grassmann": manifolds.ManifoldKind.GRASSMANN,
    "stiefel": manifolds.ManifoldKind.STIEFEL,
}


def problem_labels() -> List[str]:
    return sorted(PROBLEM_MANIFOLDS)
