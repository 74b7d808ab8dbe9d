"""ODE systems, Euler integration, noisy sampling and regulatory effects."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSpec, FittedBasis
from .errors import BadStep, GridMismatch, NonFiniteState, SchemaError

RNG_NAME = "numpy.random.Generator(PCG64)"

# trajectories whose magnitude passes this are treated as blow-ups
LV_MAGNITUDE_CAP = 1e6


class OdeSystem:
    """Base class: a vector field on R^p over the horizon [0, T].

    Subclasses implement :meth:`rhs` (vectorized over leading axes) and
    :meth:`ground_truth_edges`, which returns a boolean ``(p, p)`` matrix
    ``A`` with ``A[k, j]`` true when variable ``k`` regulates variable ``j``.
    """

    p: int
    horizon: float

    def rhs(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def ground_truth_edges(self) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class AdditiveSystem(OdeSystem):
    """``X_j' = drift_j + sum_k psi(X_k)^T coef[j, k]``."""

    drift: np.ndarray
    coef: np.ndarray
    basis: FittedBasis = field(default_factory=lambda: BasisSpec.monomial(3).fit())
    horizon: float = 1.0

    def __post_init__(self):
        drift = np.asarray(self.drift, dtype=float)
        coef = np.asarray(self.coef, dtype=float)
        p = len(drift)
        if coef.shape != (p, p, self.basis.n_basis):
            raise ValueError(f"coef must have shape {(p, p, self.basis.n_basis)}")
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "coef", coef)

    @property
    def p(self) -> int:
        return len(self.drift)

    def rhs(self, x):
        psi = self.basis(x)
        return self.drift + np.einsum("...km,jkm->...j", psi, self.coef)

    def ground_truth_edges(self):
        return np.any(self.coef != 0, axis=2).T

    def describe(self):
        return {
            "kind": "additive",
            "p": self.p,
            "horizon": self.horizon,
            "basis": self.basis.describe(),
            "drift": self.drift.tolist(),
            "coef": self.coef.tolist(),
        }


@dataclass(frozen=True)
class LotkaVolterraPairs(OdeSystem):
    """Uncoupled predator-prey pairs ``(X_{2k-1}, X_{2k})``.

    ``X_odd' = 2 X_odd - v X_odd X_even``, ``X_even' = v X_odd X_even - 2 X_even``.
    """

    interaction: float = 1.0
    n_pairs: int = 5
    horizon: float = 5.0

    def __post_init__(self):
        if self.interaction < 0:
            raise ValueError("interaction strength must be non-negative")

    @property
    def p(self) -> int:
        return 2 * self.n_pairs

    def rhs(self, x):
        a, b = x[..., 0::2], x[..., 1::2]
        v = self.interaction
        out = np.empty_like(x)
        out[..., 0::2] = 2 * a - v * a * b
        out[..., 1::2] = v * a * b - 2 * b
        return out

    def jacobian_pairs(self, x):
        """Per-pair partial derivatives, each of shape ``x.shape[:-1] + (n_pairs,)``.

        Returns ``(d f_odd/d X_odd, d f_odd/d X_even, d f_even/d X_odd, d f_even/d X_even)``.
        """
        a, b = x[..., 0::2], x[..., 1::2]
        v = self.interaction
        return 2 - v * b, -v * a, v * b, v * a - 2

    def ground_truth_edges(self):
        A = np.eye(self.p, dtype=bool)
        if self.interaction > 0:
            for k in range(self.n_pairs):
                A[2 * k, 2 * k + 1] = A[2 * k + 1, 2 * k] = True
        return A

    def describe(self):
        return {"kind": "lotka_volterra", "p": self.p, "horizon": self.horizon,
                "interaction": self.interaction}


@dataclass(frozen=True)
class LinearOscillatorPairs(OdeSystem):
    """``X_{2k-1}' = w_k X_{2k}``, ``X_{2k}' = -w_k X_{2k-1}``."""

    frequencies: tuple = tuple(2 * np.pi * k for k in range(1, 5))
    horizon: float = 1.0

    @property
    def p(self) -> int:
        return 2 * len(self.frequencies)

    def rhs(self, x):
        w = np.asarray(self.frequencies)
        out = np.empty_like(x)
        out[..., 0::2] = w * x[..., 1::2]
        out[..., 1::2] = -w * x[..., 0::2]
        return out

    def ground_truth_edges(self):
        A = np.zeros((self.p, self.p), dtype=bool)
        for k in range(len(self.frequencies)):
            A[2 * k, 2 * k + 1] = A[2 * k + 1, 2 * k] = True
        return A

    def describe(self):
        return {"kind": "oscillator", "p": self.p, "horizon": self.horizon,
                "frequencies": list(map(float, self.frequencies))}


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    values: np.ndarray
    step: float

    @property
    def horizon(self) -> float:
        return float(self.times[-1])


def _n_steps(horizon: float, step: float) -> int:
    if not step > 0:
        raise BadStep(f"step must be positive, got {step}")
    n = int(round(horizon / step))
    if n < 1 or abs(n * step - horizon) > step:
        raise BadStep(f"step {step} does not divide the horizon {horizon}")
    return n


def _rk4(f, x, dt):
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _integrate(system, init, step, method="euler", on_step=None, store=True):
    """Integrate a batch of initial conditions.

    Returns the values of shape (S+1, ..., p) when ``store``; otherwise only
    calls ``on_step(i, x)`` for every grid point and returns the final state.
    """
    n = _n_steps(system.horizon, step)
    x = np.array(init, dtype=float)
    out = np.empty((n + 1,) + x.shape) if store else None
    if store:
        out[0] = x
    if on_step is not None:
        on_step(0, x)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            if method == "euler":
                x = x + step * system.rhs(x)
            elif method == "rk4":
                x = _rk4(system.rhs, x, step)
            else:
                raise ValueError(f"unknown method {method!r}")
            if store:
                out[i + 1] = x
            if on_step is not None:
                on_step(i + 1, x)
    return out if store else x


def euler_integrate(system: OdeSystem, init, step: float = 0.001, method: str = "euler") -> Trajectory:
    """Forward-Euler solution on ``[0, system.horizon]``.

    ``method="rk4"`` switches to classical Runge-Kutta for cross-checks.
    Raises :class:`NonFiniteState` if the state overflows.
    """
    init = np.asarray(init, dtype=float)
    if init.shape != (system.p,):
        raise ValueError(f"init must have shape ({system.p},)")
    values = _integrate(system, init, step, method)
    bad = ~np.isfinite(values).all(axis=1)
    if bad.any():
        i = int(np.argmax(bad))
        raise NonFiniteState(f"state became non-finite at t={i * step:.6g}")
    n = len(values) - 1
    return Trajectory(times=np.arange(n + 1) * step, values=values, step=step)


@dataclass
class TimeSeriesDataset:
    """Noisy observations of R experiments on a shared time grid.

    ``times`` are rescaled to (0, 1]; ``Y`` has shape (R, n, p).  ``truth``
    optionally holds the boolean adjacency ``truth[k, j]`` (k regulates j).
    """

    times: np.ndarray
    Y: np.ndarray
    horizon: float = 1.0
    truth: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.Y = np.asarray(self.Y, dtype=float)
        if self.Y.ndim == 2:
            self.Y = self.Y[None]
        if self.Y.ndim != 3 or self.Y.shape[1] != len(self.times):
            raise ValueError("Y must have shape (R, n, p) matching times")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.times[0] < 0 or self.times[-1] > 1 + 1e-12:
            raise ValueError("times must lie in [0, 1]")
        if self.truth is not None:
            self.truth = np.asarray(self.truth, dtype=bool)
            if self.truth.shape != (self.p, self.p):
                raise ValueError("truth must be p x p")

    @property
    def R(self) -> int:
        return self.Y.shape[0]

    @property
    def n(self) -> int:
        return self.Y.shape[1]

    @property
    def p(self) -> int:
        return self.Y.shape[2]

    def permuted(self, perm) -> "TimeSeriesDataset":
        """Relabel variables: new variable ``i`` is old variable ``perm[i]``."""
        perm = np.asarray(perm)
        truth = None if self.truth is None else self.truth[np.ix_(perm, perm)]
        return TimeSeriesDataset(self.times, self.Y[:, :, perm], self.horizon, truth, dict(self.metadata))

    # -- serialization -------------------------------------------------
    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["experiment", "time"] + [f"x{j + 1}" for j in range(self.p)])
            for r in range(self.R):
                for i, t in enumerate(self.times):
                    w.writerow([r + 1, repr(float(t))] + [repr(float(v)) for v in self.Y[r, i]])

    @classmethod
    def from_csv(cls, path, truth_path=None) -> "TimeSeriesDataset":
        """Read the ``experiment,time,x1,...,xp`` layout.

        Raises :class:`SchemaError` naming the offending line.
        """
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise SchemaError(f"{path}: empty file")
        header = [h.strip() for h in rows[0]]
        p = len(header) - 2
        if header[:2] != ["experiment", "time"] or p < 1 or header[2:] != [f"x{j + 1}" for j in range(p)]:
            raise SchemaError(f"{path}: line 1: bad header {','.join(header)}")
        exps, ts, vals = [], [], []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != p + 2:
                raise SchemaError(f"{path}: line {lineno}: expected {p + 2} fields, got {len(row)}")
            try:
                exps.append(int(row[0]))
                ts.append(float(row[1]))
                vals.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise SchemaError(f"{path}: line {lineno}: {exc}") from None
        exps = np.array(exps)
        labels = np.unique(exps)
        ts = np.array(ts)
        vals = np.array(vals)
        times = ts[exps == labels[0]]
        blocks = []
        for lab in labels:
            sel = exps == lab
            if not np.array_equal(ts[sel], times):
                raise SchemaError(f"{path}: experiment {lab} does not share the time grid")
            blocks.append(vals[sel])
        truth = None
        if truth_path is not None:
            truth = read_edge_list(truth_path, p)
        try:
            return cls(times, np.stack(blocks), truth=truth)
        except ValueError as exc:
            raise SchemaError(f"{path}: {exc}") from None


def write_edge_list(path, adjacency, strengths=None, method=None) -> None:
    """Write ``from,to[,strength]`` with 1-based variable indices."""
    adjacency = np.asarray(adjacency, dtype=bool)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["from", "to"] + (["strength"] if strengths is not None else [])
        w.writerow(header)
        for k, j in zip(*np.nonzero(adjacency)):
            row = [k + 1, j + 1]
            if strengths is not None:
                row.append(repr(float(strengths[k, j])))
            w.writerow(row)


def read_edge_list(path, p: int | None = None, with_strength: bool = False):
    """Read an edge list into a boolean adjacency (and strengths if asked)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0][:2]] != ["from", "to"]:
        raise SchemaError(f"{path}: line 1: expected header starting with from,to")
    has_strength = len(rows[0]) > 2 and rows[0][2].strip() == "strength"
    edges = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            k, j = int(row[0]), int(row[1])
            s = float(row[2]) if has_strength else 1.0
        except (ValueError, IndexError) as exc:
            raise SchemaError(f"{path}: line {lineno}: {exc}") from None
        if k < 1 or j < 1:
            raise SchemaError(f"{path}: line {lineno}: node indices are 1-based")
        edges.append((k - 1, j - 1, s))
    if p is None:
        p = max([max(k, j) + 1 for k, j, _ in edges], default=0)
    A = np.zeros((p, p), dtype=bool)
    S = np.zeros((p, p))
    for k, j, s in edges:
        if k >= p or j >= p:
            raise SchemaError(f"{path}: edge ({k + 1},{j + 1}) outside {p} variables")
        A[k, j] = True
        S[k, j] = s
    return (A, S) if with_strength else A


def _noise(rng, shape, sigma):
    return sigma * rng.standard_normal(shape)


def _grid_indices(traj_times, step, horizon, n):
    target = np.arange(1, n + 1) * horizon / n
    idx = np.rint(target / step).astype(int)
    off = np.abs(idx * step - target)
    if np.any(off > step / 2 + 1e-12) or idx.max() >= len(traj_times):
        raise GridMismatch("observation times do not fall on the integrator grid")
    return idx


def sample_observations(traj: Trajectory, n: int, sigma: float, seed: int) -> TimeSeriesDataset:
    """Observe ``traj`` at ``iT/n`` (i = 1..n) with N(0, sigma^2) noise."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    idx = _grid_indices(traj.times, traj.step, traj.horizon, n)
    X = traj.values[idx]
    rng = np.random.default_rng(seed)
    Y = X + _noise(rng, X.shape, sigma)
    return TimeSeriesDataset(
        times=np.arange(1, n + 1) / n,
        Y=Y[None],
        horizon=traj.horizon,
        metadata={"rng": RNG_NAME, "seed": seed, "sigma": sigma, "n": n, "step": traj.step},
    )


def generate_multi_experiment(
    system: OdeSystem, inits, n: int, sigma: float, seed: int, step: float = 0.001
) -> TimeSeriesDataset:
    """R experiments from ``system`` with per-experiment initial values.

    With R = 1 this matches ``sample_observations(euler_integrate(...))``
    draw for draw.
    """
    inits = np.atleast_2d(np.asarray(inits, dtype=float))
    if inits.shape[0] < 1 or inits.shape[1] != system.p:
        raise ValueError(f"inits must have shape (R, {system.p})")
    if n < 2:
        raise ValueError("n must be at least 2")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    trajs = [euler_integrate(system, x0, step) for x0 in inits]
    idx = _grid_indices(trajs[0].times, step, system.horizon, n)
    X = np.stack([tr.values[idx] for tr in trajs])
    rng = np.random.default_rng(seed)
    Y = X + _noise(rng, X.shape, sigma)
    return TimeSeriesDataset(
        times=np.arange(1, n + 1) / n,
        Y=Y,
        horizon=system.horizon,
        truth=system.ground_truth_edges(),
        metadata={
            "rng": RNG_NAME, "seed": seed, "sigma": sigma, "n": n, "step": step,
            "R": int(inits.shape[0]), "system": system.describe(), "inits": inits.tolist(),
        },
    )


# -- preset systems ---------------------------------------------------------

def appendix_c_system(seed: int = 0) -> tuple[AdditiveSystem, np.ndarray]:
    """The ten-variable additive benchmark: three coupled pairs plus four idle variables.

    Variables 7-10 get standard-normal drifts and initial values drawn from
    ``seed``; all their other coefficients are zero.
    """
    p, M = 10, 3
    drift = np.zeros(p)
    coef = np.zeros((p, p, M))
    drift[:6] = [0.0, 0.4, -0.2, -0.2, 0.05, -0.05]
    coef[0, 0] = [1.2, 0.3, -0.6]
    coef[0, 1] = [0.1, 0.2, 0.2]
    coef[1, 0] = [-2.0, 0.0, 0.4]
    coef[1, 1] = [0.5, 0.2, -0.3]
    coef[2, 3] = [-0.3, 0.4, 0.1]
    coef[3, 2] = [0.2, -0.1, -0.2]
    coef[4, 5] = [0.1, 0.0, -0.8]
    coef[5, 4] = [0.0, 0.0, 0.5]
    init = np.zeros(p)
    init[:6] = [-2.0, 2.0, 2.0, -2.0, -1.5, 1.5]
    rng = np.random.default_rng(seed)
    init[6:] = rng.standard_normal(4)
    drift[6:] = rng.standard_normal(4)
    system = AdditiveSystem(drift, coef, BasisSpec.monomial(3).fit(), horizon=20.0)
    return system, init


def oscillator_inits(rng, n_pairs: int = 4) -> np.ndarray:
    """``(sin y_k, cos y_k)`` per pair with ``y_k ~ N(0, 1)``."""
    y = rng.standard_normal(n_pairs)
    out = np.empty(2 * n_pairs)
    out[0::2] = np.sin(y)
    out[1::2] = np.cos(y)
    return out


def lv_inits(system: LotkaVolterraPairs, size: int, rng, step: float = 0.001,
             variance: float = 2.0, max_tries: int = 1000) -> np.ndarray:
    """Initial values ``N(0, variance I)`` for the Lotka-Volterra pairs.

    Sign combinations that send a pair off to infinity before the horizon are
    common; such a pair's initial values are redrawn until its trajectory
    stays finite and below ``LV_MAGNITUDE_CAP``.
    """
    sd = np.sqrt(variance)
    inits = sd * rng.standard_normal((size, system.p))
    for _ in range(max_tries):
        peak = np.zeros((size, system.p))

        def track(i, x):
            with np.errstate(invalid="ignore"):
                np.fmax(peak, np.where(np.isfinite(x), np.abs(x), np.inf), out=peak)

        _integrate(system, inits, step, on_step=track, store=False)
        pair_peak = np.maximum(peak[:, 0::2], peak[:, 1::2])
        pending = ~(pair_peak <= LV_MAGNITUDE_CAP)
        if not pending.any():
            return inits
        rows, pairs = np.nonzero(pending)
        fresh = sd * rng.standard_normal((len(rows), 2))
        inits[rows, 2 * pairs] = fresh[:, 0]
        inits[rows, 2 * pairs + 1] = fresh[:, 1]
    raise NonFiniteState("could not draw bounded Lotka-Volterra initial values")


def regulatory_effect(system: LotkaVolterraPairs, R: int, seed: int, mc_reps: int = 200,
                      step: float = 0.001, return_se: bool = False):
    """Monte-Carlo estimate of ``D[j, k] = E[R int_0^T (d f_j / d X_k)^2 dt]``.

    The expectation is over initial values drawn by :func:`lv_inits`.  With
    ``return_se`` the Monte-Carlo standard errors are returned as well.
    """
    if mc_reps < 1:
        raise ValueError("mc_reps must be at least 1")
    rng = np.random.default_rng(seed)
    inits = lv_inits(system, mc_reps, rng, step)
    n_steps = _n_steps(system.horizon, step)
    # trapezoid rule accumulated on the fly: end points get half weight
    acc = [np.zeros((mc_reps, system.n_pairs)) for _ in range(4)]

    def accumulate(i, x):
        w = 0.5 * step if i in (0, n_steps) else step
        for a, d in zip(acc, system.jacobian_pairs(x)):
            a += w * d * d

    final = _integrate(system, inits, step, on_step=accumulate, store=False)
    if not np.isfinite(final).all() or not all(np.isfinite(a).all() for a in acc):
        raise NonFiniteState("trajectory became non-finite")
    integrals = [R * a for a in acc]  # each (reps, pairs)
    p, P = system.p, system.n_pairs
    samples = np.zeros((mc_reps, p, p))
    odd, even = 2 * np.arange(P), 2 * np.arange(P) + 1
    samples[:, odd, odd] = integrals[0]
    samples[:, odd, even] = integrals[1]
    samples[:, even, odd] = integrals[2]
    samples[:, even, even] = integrals[3]
    D = samples.mean(axis=0)
    if not return_se:
        return D
    se = samples.std(axis=0, ddof=1) / np.sqrt(mc_reps) if mc_reps > 1 else np.full_like(D, np.nan)
    return D, se


def minimum_effects(D: np.ndarray) -> tuple[float, float]:
    """Smallest self-edge effect and smallest within-pair cross effect."""
    p = D.shape[0]
    self_min = float(np.min(np.diag(D)))
    odd = np.arange(0, p, 2)
    cross = np.r_[D[odd, odd + 1], D[odd + 1, odd]]
    return self_min, float(np.min(cross))


def dataset_metadata_json(dataset: TimeSeriesDataset) -> str:
    return json.dumps(dataset.metadata, indent=2, sort_keys=True)
