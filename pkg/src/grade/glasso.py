"""Standardized group lasso for a single response.

Solves

    min  (1/2N) ||y - C - t theta_0 - sum_k X_k theta_k||^2
         + lam sum_k ||theta_k||_{G_k} + (mu/2) sum_k ||theta_k||_{G_k}^2,

where ``||v||_{G} = sqrt(v^T G v)`` and ``G_k = X_k^T X_k / N`` is the
(uncentered) group Gram matrix.  Intercepts ``C`` (one per experiment, one
shared, or none) and the time coefficient are unpenalized.

Each group is reparameterized so that its penalty becomes a plain Euclidean
norm, unpenalized columns are profiled out by projection, and the result is
minimized by block coordinate descent with exact block updates.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .errors import NoConvergence

RANK_TOL = 1e-10
EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# problem definition
# ---------------------------------------------------------------------------

class PenalizedDesign:
    """Design-level part of a group lasso problem, shared by all responses.

    Parameters
    ----------
    X : ndarray, shape (N, P)
        Penalized columns.
    groups : list of index arrays
        Column indices of each penalized group.
    unpenalized : ndarray, shape (N, q) or None
        Extra unpenalized columns (e.g. time).
    experiment : ndarray of int, shape (N,) or None
    intercept : {"per_experiment", "common", "none"}
    """

    def __init__(self, X, groups, unpenalized=None, experiment=None, intercept="common",
                 penalty_gram="profiled"):
        self.X = np.asarray(X, dtype=float)
        self.groups = [np.asarray(g, dtype=int) for g in groups]
        N = self.X.shape[0]
        self.unpenalized = (
            np.zeros((N, 0)) if unpenalized is None else np.asarray(unpenalized, dtype=float).reshape(N, -1)
        )
        self.experiment = np.zeros(N, dtype=int) if experiment is None else np.asarray(experiment, dtype=int)
        if intercept not in ("per_experiment", "common", "none"):
            raise ValueError(f"unknown intercept mode {intercept!r}")
        self.intercept = intercept
        if penalty_gram not in ("raw", "centered", "profiled"):
            raise ValueError(f"unknown penalty_gram {penalty_gram!r}")
        self.penalty_gram = penalty_gram
        self._std = None
        self._grams: dict = {}
        self._pinvs: dict = {}

    @classmethod
    def from_design(cls, design, penalty_gram: str = "profiled") -> "PenalizedDesign":
        """Wrap an :class:`grade.basis.IntegratedDesign`."""
        N, p, M = design.blocks.shape
        groups = [np.arange(k * M, (k + 1) * M) for k in range(p)]
        unpen = None if design.time is None else design.time[:, None]
        return cls(design.blocks.reshape(N, p * M), groups, unpen, design.experiment, design.intercept,
                   penalty_gram)

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def intercept_columns(self) -> np.ndarray:
        if self.intercept == "none":
            return np.zeros((self.N, 0))
        if self.intercept == "common":
            return np.ones((self.N, 1))
        labels = np.unique(self.experiment)
        return (self.experiment[:, None] == labels[None, :]).astype(float)

    def unpenalized_matrix(self) -> np.ndarray:
        return np.column_stack([self.intercept_columns(), self.unpenalized])

    def penalty_columns(self, k: int) -> np.ndarray:
        """Columns whose empirical norm defines the penalty of group ``k``."""
        Xk = self.X[:, self.groups[k]]
        if self.penalty_gram == "raw":
            return Xk
        if self.penalty_gram == "centered":
            U = self.intercept_columns()
        else:
            U = self.unpenalized_matrix()
        Q = _orth(U)
        return Xk - Q @ (Q.T @ Xk) if Q.shape[1] else Xk

    def gram(self, k: int) -> np.ndarray:
        if k not in self._grams:
            Xk = self.penalty_columns(k)
            G = Xk.T @ Xk / self.N
            G.setflags(write=False)
            self._grams[k] = G
        return self._grams[k]

    def raw_scale(self, k: int) -> float:
        """Largest eigenvalue of the unprojected group Gram."""
        Xk = self.X[:, self.groups[k]]
        return float(np.linalg.eigvalsh(Xk.T @ Xk / self.N).max()) if Xk.size else 0.0

    def gram_pinv(self, k: int) -> np.ndarray:
        if k not in self._pinvs:
            # directions that projection left at rounding level count as zero
            w, V = np.linalg.eigh(self.gram(k))
            keep = (w > RANK_TOL * max(w.max(initial=0.0), 0.0)) & (w > RANK_TOL * self.raw_scale(k))
            P = (V[:, keep] / w[keep]) @ V[:, keep].T
            P.setflags(write=False)
            self._pinvs[k] = P
        return self._pinvs[k]

    @property
    def standardized(self) -> "StandardizedDesign":
        if self._std is None:
            self._std = _standardize_design(self)
        return self._std


@dataclass
class GroupLassoProblem:
    """A response together with its penalized design and ridge weight."""

    y: np.ndarray
    design: PenalizedDesign
    ridge: float = 0.0

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.y.shape[0] != self.design.N:
            raise ValueError("response length does not match the design")
        if self.ridge < 0:
            raise ValueError("ridge must be non-negative")

    @classmethod
    def from_design(cls, design, y, ridge: float = 0.0) -> "GroupLassoProblem":
        return cls(y, PenalizedDesign.from_design(design), ridge)

    def with_response(self, y) -> "GroupLassoProblem":
        return GroupLassoProblem(y, self.design, self.ridge)


# ---------------------------------------------------------------------------
# standardization
# ---------------------------------------------------------------------------

@dataclass
class GroupTransform:
    """``theta_k = T @ theta_tilde`` maps standardized to original coordinates."""

    T: np.ndarray
    rank: int
    dropped: int
    degenerate: bool


@dataclass
class StandardizedDesign:
    transforms: list
    Z: np.ndarray            # profiled, standardized penalized columns
    blocks: list             # column slices of each group inside Z
    H: np.ndarray            # Z^T Z / N
    block_eig: list          # (eigenvalues, eigenvectors) of each diagonal block
    Q_unpen: np.ndarray      # orthonormal basis of the unpenalized column space
    degenerate: list
    dropped: dict

    def project(self, y: np.ndarray) -> np.ndarray:
        Q = self.Q_unpen
        return y - Q @ (Q.T @ y) if Q.shape[1] else y.copy()


def group_transform(G: np.ndarray, rank_tol: float = RANK_TOL) -> GroupTransform:
    """Factor a group Gram ``G = Q^T Q`` keeping directions above ``rank_tol`` * max eigenvalue."""
    w, V = np.linalg.eigh((G + G.T) / 2)
    top = w.max() if w.size else 0.0
    if not top > 0:
        return GroupTransform(np.zeros((G.shape[0], 0)), 0, G.shape[0], True)
    keep = w > rank_tol * top
    T = V[:, keep] / np.sqrt(w[keep])
    return GroupTransform(T, int(keep.sum()), int((~keep).sum()), False)


def _orth(A: np.ndarray) -> np.ndarray:
    if A.shape[1] == 0:
        return A
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    keep = s > RANK_TOL * max(s.max(), 1e-300) if s.size else np.zeros(0, bool)
    return U[:, keep]


def _standardize_design(design: PenalizedDesign) -> StandardizedDesign:
    N = design.N
    Q = _orth(design.unpenalized_matrix())
    transforms, cols, blocks = [], [], []
    degenerate, dropped = [], {}
    start = 0
    for k, g in enumerate(design.groups):
        G = design.gram(k)
        top = float(np.linalg.eigvalsh(G).max()) if G.size else 0.0
        if top > RANK_TOL * design.raw_scale(k):
            # same cutoff as gram_pinv: relative to both the profiled and raw scale
            tr = group_transform(G, RANK_TOL * max(1.0, design.raw_scale(k) / top))
        else:
            # the group lies inside the unpenalized span up to rounding
            tr = GroupTransform(np.zeros((len(g), 0)), 0, len(g), True)
        Zk = design.X[:, g] @ tr.T
        if Q.shape[1]:
            Zk = Zk - Q @ (Q.T @ Zk)
        if design.penalty_gram == "profiled" and tr.rank:
            # the profiled block is orthonormal in exact arithmetic; restore that
            # to rounding level so block updates take the closed form
            _, sv, Wt = np.linalg.svd(Zk / math.sqrt(N), full_matrices=False)
            # directions inside the unpenalized span leave only rounding residue
            keep = sv ** 2 > RANK_TOL
            rank = int(keep.sum())
            T = tr.T @ (Wt[keep].T / sv[keep])
            tr = GroupTransform(T, rank, tr.dropped + tr.rank - rank, rank == 0)
            Zk = design.X[:, g] @ T
            if Q.shape[1]:
                Zk = Zk - Q @ (Q.T @ Zk)
        transforms.append(tr)
        if tr.degenerate:
            degenerate.append(k)
        if tr.dropped and not tr.degenerate:
            dropped[k] = tr.dropped
        cols.append(Zk)
        blocks.append(slice(start, start + tr.rank))
        start += tr.rank
    Z = np.column_stack(cols) if cols else np.zeros((N, 0))
    H = Z.T @ Z / N
    eig = []
    for sl in blocks:
        Hk = H[sl, sl]
        a, V = np.linalg.eigh((Hk + Hk.T) / 2)
        eig.append((np.clip(a, 0.0, None), V))
    return StandardizedDesign(transforms, Z, blocks, H, eig, Q, degenerate, dropped)


def standardize_groups(problem: GroupLassoProblem) -> StandardizedDesign:
    """Standardized form of the problem's design (cached on the design).

    Every penalized group is mapped so that its Gram matrix is the identity on
    its effective rank; directions with eigenvalue below 1e-10 of the largest
    are dropped and listed in ``dropped``.  All-zero groups are listed in
    ``degenerate`` and never enter the model.
    """
    std = problem.design.standardized
    if std.degenerate:
        warnings.warn(f"degenerate groups excluded from selection: {std.degenerate}", RuntimeWarning)
    return std


# ---------------------------------------------------------------------------
# fits
# ---------------------------------------------------------------------------

@dataclass
class KKTReport:
    stationarity: float          # max residual over active groups
    dual_ratio: float            # max g^T G^+ g over inactive groups
    unpenalized: float           # max |U^T r| / N
    scale: float
    certified: bool
    per_group: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "stationarity": self.stationarity,
            "dual_ratio": self.dual_ratio,
            "unpenalized": self.unpenalized,
            "scale": self.scale,
            "certified": self.certified,
        }


@dataclass
class GroupLassoFit:
    lam: float
    ridge: float
    coef: list                   # original-coordinate block per group
    unpenalized_coef: np.ndarray  # intercept(s) then extra unpenalized columns
    n_intercepts: int
    group_norms: np.ndarray      # ||theta_k||_{G_k}
    objective: float
    rss: float
    n_iter: int
    converged: bool
    theta_std: np.ndarray = field(repr=False, default=None)
    df: int = 0
    kkt: KKTReport | None = None

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.group_norms > 0)

    @property
    def intercepts(self) -> np.ndarray:
        return self.unpenalized_coef[: self.n_intercepts]

    @property
    def extra_coef(self) -> np.ndarray:
        """Coefficients of the extra unpenalized columns (the time column for GRADE)."""
        return self.unpenalized_coef[self.n_intercepts:]

    def summary(self) -> dict:
        out = {
            "lambda": self.lam,
            "active": [int(k) for k in self.active],
            "group_norms": [float(v) for v in self.group_norms],
            "objective": self.objective,
            "rss": self.rss,
            "df": self.df,
            "n_iter": self.n_iter,
            "converged": self.converged,
        }
        if self.kkt is not None:
            out["kkt"] = self.kkt.to_dict()
        return out


def _block_solve(b, a, V, lam, ridge):
    """Minimize 0.5 x^T (A + ridge I) x - b^T x + lam ||x|| with A = V diag(a) V^T."""
    nb = math.sqrt(float(b @ b))
    if nb <= lam:
        return np.zeros_like(b)
    d = a + ridge
    if d.size and d.max() > 0 and d.max() - d.min() <= 1e-12 * d.max():
        # isotropic block (orthonormalized group): soft-threshold the norm
        return (1.0 - lam / nb) * b / d[0]
    c = V.T @ b
    if lam == 0:
        return V @ np.where(d > 0, c / np.where(d > 0, d, 1.0), 0.0)
    c2 = c * c
    # ||x|| = s solves sum c_i^2 / (d_i s + lam)^2 = 1; the left side decreases in s
    def phi(s):
        return float(np.sum(c2 / (d * s + lam) ** 2)) - 1.0

    hi = (nb - lam) / max(d.max(), 1e-300)
    hi = max(hi, 1e-300)
    while phi(hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            raise FloatingPointError("block update is unbounded")
    s = brentq(phi, 0.0, hi, xtol=1e-15 * max(hi, 1.0), rtol=4 * np.finfo(float).eps, maxiter=200)
    return V @ (c * s / (d * s + lam))


def _std_objective(theta, H, c, yy, lam, ridge, blocks):
    quad = 0.5 * theta @ (H @ theta) - c @ theta + 0.5 * yy
    pen = sum(math.sqrt(float(theta[sl] @ theta[sl])) for sl in blocks)
    return quad + lam * pen + 0.5 * ridge * float(theta @ theta)


def compute_lambda_max(problem: GroupLassoProblem) -> float:
    """Smallest lambda at which every penalized group is zero."""
    std = problem.design.standardized
    ybar = std.project(problem.y)
    c = std.Z.T @ ybar / problem.design.N
    norms = [math.sqrt(float(c[sl] @ c[sl])) for sl in std.blocks]
    return max(norms, default=0.0)


def _sweep(theta, grad, H, std, lam, ridge):
    """One pass of exact block updates; returns the largest coefficient change."""
    max_change = 0.0
    for k, sl in enumerate(std.blocks):
        if sl.stop == sl.start:
            continue
        a, V = std.block_eig[k]
        old = theta[sl]
        b = grad[sl] + H[sl, sl] @ old
        new = _block_solve(b, a, V, lam, ridge)
        delta = new - old
        change = float(np.max(np.abs(delta))) if delta.size else 0.0
        if change > 0:
            theta[sl] = new
            grad -= H[:, sl] @ delta
            max_change = max(max_change, change)
    return max_change


def _std_stationarity(theta, grad, lam, ridge, blocks):
    """Largest subgradient residual over the non-zero groups (standardized)."""
    worst = 0.0
    for sl in blocks:
        th = theta[sl]
        nrm = math.sqrt(float(th @ th)) if th.size else 0.0
        if nrm > 0:
            res = grad[sl] - lam * th / nrm - ridge * th
            worst = max(worst, float(np.max(np.abs(res))))
    return worst


def _std_dual_excess(theta, grad, lam, blocks):
    """Largest amount by which a zero group's correlation norm exceeds lambda."""
    worst = 0.0
    for sl in blocks:
        if sl.stop > sl.start and not np.any(theta[sl]):
            worst = max(worst, math.sqrt(float(grad[sl] @ grad[sl])) - lam)
    return worst


def _newton_polish(theta, H, c, yy, lam, ridge, std, max_steps=50):
    """Damped Newton on the groups that are currently non-zero.

    The objective restricted to the active groups is smooth while their norms
    stay positive; a backtracking line search keeps every step a descent step.
    Returns the improved coefficients (or the input if nothing improved).
    """
    active = [sl for sl in std.blocks if sl.stop > sl.start and np.any(theta[sl] != 0)]
    if not active:
        return theta
    idx = np.concatenate([np.arange(sl.start, sl.stop) for sl in active])
    local = []
    pos = 0
    for sl in active:
        local.append(slice(pos, pos + sl.stop - sl.start))
        pos += sl.stop - sl.start
    Hs = H[np.ix_(idx, idx)]
    cs = c[idx]
    x = theta[idx].copy()

    starts = np.array([b.start for b in local])

    def f(z):
        pen = float(np.sum(np.sqrt(np.add.reduceat(z * z, starts))))
        return 0.5 * z @ (Hs @ z) - cs @ z + 0.5 * yy + lam * pen + 0.5 * ridge * float(z @ z)

    fx = f(x)
    eye = np.eye(len(x))
    for _ in range(max_steps):
        g = Hs @ x - cs + ridge * x
        hess = Hs + ridge * eye
        for b in local:
            nb = math.sqrt(float(x[b] @ x[b]))
            if nb == 0:
                return theta
            u = x[b] / nb
            g[b] += lam * u
            hess[b, b] += lam * (np.eye(len(u)) - np.outer(u, u)) / nb
        gnorm = float(np.max(np.abs(g)))
        if gnorm < 1e-14 * max(1.0, float(np.max(np.abs(cs)))):
            break
        damp = 1e-12 * max(float(np.trace(hess)), 1e-300)
        try:
            step = np.linalg.solve(hess + damp * eye, -g)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        slope = float(g @ step)
        improved = False
        for _ in range(30):
            trial = x + t * step
            ft = f(trial)
            if ft <= fx + 1e-4 * t * slope:
                improved = ft < fx
                break
            t *= 0.5
        if not improved:
            break
        x, fx = trial, ft
    out = theta.copy()
    out[idx] = x
    return out


def _extrapolate(theta, direction, obj, H, c, yy, lam, ridge, std, max_doublings=40):
    """Expanding line search along ``direction``; returns the best point."""
    if not np.any(direction):
        return theta, obj
    best, best_obj = theta, obj
    t = 1.0
    for _ in range(max_doublings):
        trial = theta + t * direction
        t_obj = _std_objective(trial, H, c, yy, lam, ridge, std.blocks)
        if not t_obj < best_obj:
            break
        best, best_obj = trial, t_obj
        t *= 2.0
    return best, best_obj


def fit_single(
    problem: GroupLassoProblem,
    lam: float,
    ridge: float | None = None,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    warm_start: np.ndarray | None = None,
    certify: bool = True,
    polish_every: int = 10,
) -> GroupLassoFit:
    """Block coordinate descent at a single lambda.

    Every ``polish_every`` sweeps without convergence, a damped Newton step
    on the current non-zero groups accelerates the tail of the descent
    (strongly correlated groups make plain coordinate descent crawl); set it
    to 0 for pure coordinate descent.  Terminates once the standardized
    subgradient conditions hold to ``1e-3 * tol * max(1, lam)`` (or to
    ``100 * tol * max(1, lam, rms(y))`` once a Newton step stops helping), or after
    ``max_iter`` sweeps, in which case a :class:`NoConvergence` warning is
    issued and ``converged`` is False.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    ridge = problem.ridge if ridge is None else ridge
    design = problem.design
    std = design.standardized
    N = design.N
    ybar = std.project(problem.y)
    c = std.Z.T @ ybar / N
    yy = float(ybar @ ybar) / N
    H = std.H
    theta = np.zeros(H.shape[0]) if warm_start is None else np.array(warm_start, dtype=float)
    grad = c - H @ theta           # Z^T r / N for the current residual
    absH = np.abs(H)
    obj = _std_objective(theta, H, c, yy, lam, ridge, std.blocks)
    converged = False
    n_iter = 0
    anchor = theta.copy()
    for n_iter in range(1, max_iter + 1):
        max_change = _sweep(theta, grad, H, std, lam, ridge)
        new_obj = _std_objective(theta, H, c, yy, lam, ridge, std.blocks)
        # quadratic-form objectives lose digits to cancellation when the
        # coefficients are large, so the slack scales with the summed terms
        slack = 1e-11 * max(1.0, abs(obj), 0.5 * abs(float(theta @ (H @ theta))) + abs(float(c @ theta)))
        assert new_obj <= obj + slack, "objective increased during a sweep"
        obj = new_obj
        # stop on the optimality conditions rather than on coefficient
        # changes alone: on nearly collinear designs coefficients can drift
        # along flat directions long after the fit has settled
        # the floor is the rounding error of the maintained gradient
        kkt_tol = max(1e-3 * tol * max(1.0, lam),
                      64 * EPS * (float(np.max(np.abs(c), initial=0.0))
                                  + float(np.max(absH @ np.abs(theta), initial=0.0))))
        if (_std_stationarity(theta, grad, lam, ridge, std.blocks) <= kkt_tol
                and _std_dual_excess(theta, grad, lam, std.blocks) <= kkt_tol):
            converged = True
            break
        if max_change < tol or (polish_every and n_iter % polish_every == 0):
            polished = _newton_polish(theta, H, c, yy, lam, ridge, std)
            p_obj = _std_objective(polished, H, c, yy, lam, ridge, std.blocks)
            stalled = obj - p_obj <= 1e-13 * max(1.0, abs(obj))
            if p_obj < obj:
                theta, obj = polished, p_obj
            # mass shifting between groups with shared column spans moves
            # along a straight line; follow it while the objective keeps falling
            theta, obj = _extrapolate(theta, theta - anchor, obj, H, c, yy, lam, ridge, std)
            grad = c - H @ theta
            anchor = theta.copy()
            # exactly collinear active groups leave a flat valley that neither
            # sweeps nor Newton steps traverse; accept once the conditions hold
            # at the scale the certificate uses
            stall_tol = 100 * tol * max(1.0, lam, math.sqrt(yy))
            if (stalled
                    and _std_stationarity(theta, grad, lam, ridge, std.blocks) <= stall_tol
                    and _std_dual_excess(theta, grad, lam, std.blocks) <= stall_tol):
                # the original-coordinate conditions decide: standardizing can
                # shrink residuals of badly scaled groups below their true size
                candidate = _assemble(problem, theta, lam, ridge, n_iter, True)
                candidate.kkt = kkt_certificate(candidate, problem)
                if candidate.kkt.certified:
                    return candidate if certify else replace(candidate, kkt=None)
    if not converged:
        warnings.warn(NoConvergence(f"no convergence after {max_iter} sweeps at lambda={lam:.4g}"))
    fit = _assemble(problem, theta, lam, ridge, n_iter, converged)
    if certify:
        fit.kkt = kkt_certificate(fit, problem)
    return fit


def _assemble(problem, theta, lam, ridge, n_iter, converged) -> GroupLassoFit:
    design = problem.design
    std = design.standardized
    coef = []
    fitted = np.zeros(design.N)
    norms = np.zeros(design.n_groups)
    df_pen = 0
    for k, (g, tr, sl) in enumerate(zip(design.groups, std.transforms, std.blocks)):
        th = tr.T @ theta[sl]
        coef.append(th)
        norms[k] = math.sqrt(float(theta[sl] @ theta[sl]))
        if norms[k] > 0:
            fitted += design.X[:, g] @ th
            df_pen += tr.rank
    U = design.unpenalized_matrix()
    if U.shape[1]:
        beta, *_ = np.linalg.lstsq(U, problem.y - fitted, rcond=None)
        fitted = fitted + U @ beta
    else:
        beta = np.zeros(0)
    resid = problem.y - fitted
    rss = float(resid @ resid)
    n_int = design.intercept_columns().shape[1]
    pen = float(norms.sum())
    objective = rss / (2 * design.N) + lam * pen + 0.5 * ridge * float(np.sum(norms ** 2))
    return GroupLassoFit(
        lam=float(lam), ridge=float(ridge), coef=coef, unpenalized_coef=beta, n_intercepts=n_int,
        group_norms=norms, objective=objective, rss=rss, n_iter=n_iter, converged=converged,
        theta_std=theta.copy(), df=int(U.shape[1] + df_pen),
    )


def original_objective(fit: GroupLassoFit, problem: GroupLassoProblem) -> float:
    """Objective recomputed from the fit's original-coordinate coefficients."""
    design = problem.design
    resid = problem.y - design.unpenalized_matrix() @ fit.unpenalized_coef
    pen = 0.0
    ridge_term = 0.0
    for k, g in enumerate(design.groups):
        th = fit.coef[k]
        resid = resid - design.X[:, g] @ th
        q = float(th @ design.gram(k) @ th)
        pen += math.sqrt(max(q, 0.0))
        ridge_term += q
    return float(resid @ resid) / (2 * design.N) + fit.lam * pen + 0.5 * fit.ridge * ridge_term


def kkt_certificate(fit: GroupLassoFit, problem: GroupLassoProblem,
                    stationarity_tol: float = 1e-6, dual_tol: float = 1e-6) -> KKTReport:
    """Check the subgradient conditions of ``fit`` in original coordinates.

    Active groups must satisfy ``X_k^T r / N = lam G_k theta_k / ||theta_k||_G
    + ridge G_k theta_k``; inactive groups need ``g^T G_k^+ g <= 1`` with
    ``g = X_k^T r / (N lam)``.
    """
    design = problem.design
    N = design.N
    U = design.unpenalized_matrix()
    fitted = U @ fit.unpenalized_coef if U.shape[1] else np.zeros(N)
    for k, g in enumerate(design.groups):
        fitted = fitted + design.X[:, g] @ fit.coef[k]
    r = problem.y - fitted
    lam = fit.lam
    scale = max(1.0, lam, float(np.sqrt(np.mean(problem.y ** 2))))
    stat, ratio = 0.0, 0.0
    per_group = []
    for k, g in enumerate(design.groups):
        G = design.gram(k)
        corr = design.X[:, g].T @ r / N
        th = fit.coef[k]
        if fit.group_norms[k] > 0:
            norm = math.sqrt(max(float(th @ G @ th), 0.0))
            res = corr - lam * (G @ th) / norm - fit.ridge * (G @ th)
            val = float(np.linalg.norm(res))
            stat = max(stat, val)
            per_group.append({"group": k, "active": True, "stationarity": val})
        else:
            Gp = design.gram_pinv(k)
            q = float(corr @ Gp @ corr)
            if lam > 0:
                val = q / lam ** 2
            else:
                val = 0.0 if q <= (1e-12 * scale) ** 2 else math.inf
            ratio = max(ratio, val)
            per_group.append({"group": k, "active": False, "dual_ratio": val})
    unpen = float(np.max(np.abs(U.T @ r)) / N) if U.shape[1] else 0.0
    certified = (
        stat <= stationarity_tol * scale
        and ratio <= 1 + dual_tol
        and unpen <= stationarity_tol * scale
    )
    return KKTReport(stat, ratio, unpen, scale, bool(certified), per_group)


# ---------------------------------------------------------------------------
# paths and model selection
# ---------------------------------------------------------------------------

def bic_value(rss: float, df: int, n_eff: int) -> float:
    rss = max(rss, np.finfo(float).tiny)
    return n_eff * math.log(rss / n_eff) + math.log(n_eff) * df


@dataclass
class GroupLassoPath:
    lambdas: np.ndarray
    fits: list
    bic: np.ndarray
    warm_started: bool = True

    @property
    def active_sizes(self) -> list[int]:
        return [len(f.active) for f in self.fits]

    @property
    def certified(self) -> bool:
        return all(f.kkt is None or f.kkt.certified for f in self.fits)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "lambdas": [float(v) for v in self.lambdas],
            "bic": [float(v) for v in self.bic],
            "active_sets": [[int(k) + 1 for k in f.active] for f in self.fits],
            "group_norms": [[float(v) for v in f.group_norms] for f in self.fits],
            "kkt_certified": [bool(f.kkt.certified) if f.kkt else None for f in self.fits],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def lambda_grid(lam_max: float, n_lambda: int, ratio: float) -> np.ndarray:
    """``n_lambda`` log-spaced values from ``lam_max`` down to ``ratio * lam_max``."""
    if n_lambda < 2:
        raise ValueError("a path needs at least two lambdas")
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    return lam_max * ratio ** (np.arange(n_lambda) / (n_lambda - 1))


def fit_path(
    problem: GroupLassoProblem,
    n_lambda: int = 50,
    ratio: float = 1e-3,
    ridge: float | None = None,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    lambdas=None,
    warm: bool = True,
) -> GroupLassoPath:
    """Fit a decreasing lambda path with warm starts.

    ``lambdas`` overrides the default grid from :func:`compute_lambda_max`.
    """
    if lambdas is None:
        lam_max = compute_lambda_max(problem)
        lambdas = lambda_grid(lam_max, n_lambda, ratio) if lam_max > 0 else np.zeros(n_lambda)
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(np.diff(lambdas) > 0):
        raise ValueError("lambda grid must be non-increasing")
    fits = []
    theta = None
    n_eff = problem.design.N
    for lam in lambdas:
        fit = fit_single(problem, lam, ridge, tol, max_iter, warm_start=theta if warm else None)
        theta = fit.theta_std
        fits.append(fit)
    bic = np.array([bic_value(f.rss, f.df, n_eff) for f in fits])
    return GroupLassoPath(lambdas, fits, bic, warm)


def bic_select(path: GroupLassoPath, n_effective: int | None = None) -> int:
    """Index of the BIC-minimizing fit; ties go to the larger lambda."""
    if not path.fits:
        raise ValueError("empty path")
    if n_effective is None:
        bic = path.bic
    else:
        bic = np.array([bic_value(f.rss, f.df, n_effective) for f in path.fits])
    return int(np.argmin(bic))
