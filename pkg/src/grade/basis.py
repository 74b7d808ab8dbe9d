"""Basis families and the integrated design matrix.

A :class:`BasisSpec` names a family (monomial, linear, cubic B-spline,
trigonometric).  Data-dependent families are *fitted* to the range of a
smoothed trajectory, giving a :class:`FittedBasis` that maps values to the
``M`` basis columns.  :func:`build_integrated_design` turns smoothed
trajectories into the regressors ``Psi_k(t) = int_0^t psi(Xhat_k(u)) du``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import BSpline

from .errors import QuadTooCoarse

FAMILIES = ("monomial", "linear", "spline", "trig")
MIN_KNOT_GAP = 1e-3


@dataclass(frozen=True)
class BasisSpec:
    """Description of a basis family.

    Parameters
    ----------
    family : {"monomial", "linear", "spline", "trig"}
    degree : int
        Highest power for the monomial family.
    knots : int
        Number of internal knots for the cubic spline family.
    size : int
        Number of columns for the trigonometric family.
    """

    family: str = "monomial"
    degree: int = 3
    knots: int = 2
    size: int = 4

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown basis family {self.family!r}")
        if self.n_basis < 1:
            raise ValueError("basis must have at least one column")

    @classmethod
    def monomial(cls, degree: int = 3) -> "BasisSpec":
        return cls("monomial", degree=degree)

    @classmethod
    def linear(cls) -> "BasisSpec":
        return cls("linear")

    @classmethod
    def cubic_spline(cls, knots: int = 2) -> "BasisSpec":
        return cls("spline", knots=knots)

    @classmethod
    def trigonometric(cls, size: int = 4) -> "BasisSpec":
        return cls("trig", size=size)

    @classmethod
    def parse(cls, text: str) -> "BasisSpec":
        """Parse ``"monomial3"``, ``"linear"``, ``"spline2"`` or ``"trig4"``."""
        text = text.strip().lower()
        for name in ("monomial", "spline", "trig"):
            if text.startswith(name):
                tail = text[len(name):]
                arg = int(tail) if tail else None
                if name == "monomial":
                    return cls.monomial(3 if arg is None else arg)
                if name == "spline":
                    return cls.cubic_spline(2 if arg is None else arg)
                return cls.trigonometric(4 if arg is None else arg)
        if text == "linear":
            return cls.linear()
        raise ValueError(f"cannot parse basis {text!r}")

    @property
    def label(self) -> str:
        if self.family == "monomial":
            return f"monomial{self.degree}"
        if self.family == "spline":
            return f"spline{self.knots}"
        if self.family == "trig":
            return f"trig{self.size}"
        return "linear"

    @property
    def n_basis(self) -> int:
        if self.family == "monomial":
            return self.degree
        if self.family == "linear":
            return 1
        if self.family == "spline":
            return self.knots + 4
        return self.size

    def fit(self, values=None, lo: float | None = None, hi: float | None = None) -> "FittedBasis":
        """Fix the data-dependent parts of the basis.

        Spline knots sit at equally spaced quantiles of ``values``; the
        boundary knots are the value range.  Knots closer than
        ``MIN_KNOT_GAP`` of the range to each other or to the boundary are
        replaced by evenly spaced ones.  ``lo``/``hi`` override the range
        (and, for splines without ``values``, knots are spread evenly).
        """
        if self.family in ("monomial", "linear"):
            return FittedBasis(self)
        vals = None if values is None else np.asarray(values, dtype=float).ravel()
        if lo is None:
            lo = float(np.min(vals))
        if hi is None:
            hi = float(np.max(vals))
        if not hi - lo > 1e-12 * max(1.0, abs(lo), abs(hi)):
            lo, hi = lo - 0.5, hi + 0.5
        if self.family == "trig":
            return FittedBasis(self, lo=lo, hi=hi)
        frac = np.arange(1, self.knots + 1) / (self.knots + 1)
        inner = np.quantile(vals, frac) if vals is not None else lo + frac * (hi - lo)
        # quantile knots collapse when many values pile up at one level (a
        # decaying trajectory hugging zero); fall back to even spacing then
        gap = MIN_KNOT_GAP * (hi - lo)
        if self.knots and np.min(np.diff(np.concatenate([[lo], inner, [hi]]))) < gap:
            inner = lo + frac * (hi - lo)
        return FittedBasis(self, lo=lo, hi=hi, interior=tuple(float(v) for v in inner))


@dataclass(frozen=True)
class FittedBasis:
    """A basis with its range and knots fixed; call it on values."""

    spec: BasisSpec
    lo: float = 0.0
    hi: float = 1.0
    interior: tuple = ()
    _spline: BSpline | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.spec.family == "spline":
            t = np.r_[[self.lo] * 4, self.interior, [self.hi] * 4]
            m = self.spec.n_basis
            spl = BSpline(t, np.eye(m), 3, extrapolate=True)
            object.__setattr__(self, "_spline", spl)

    @property
    def n_basis(self) -> int:
        return self.spec.n_basis

    @property
    def knot_vector(self) -> np.ndarray:
        return np.r_[[self.lo] * 4, self.interior, [self.hi] * 4]

    def __call__(self, x) -> np.ndarray:
        """Evaluate the basis; output has shape ``x.shape + (M,)``."""
        x = np.asarray(x, dtype=float)
        fam = self.spec.family
        if fam == "linear":
            return x[..., None].copy()
        if fam == "monomial":
            return x[..., None] ** np.arange(1, self.spec.degree + 1)
        if fam == "trig":
            u = (x - self.lo) / (self.hi - self.lo)
            m = self.n_basis
            freq = np.arange(m) // 2 + 1
            arg = 2 * np.pi * u[..., None] * freq
            out = np.where(np.arange(m) % 2 == 0, np.cos(arg), np.sin(arg))
            return np.sqrt(2.0) * out
        return self._spline_eval(x)

    def _spline_eval(self, x: np.ndarray) -> np.ndarray:
        flat = x.ravel()
        inside = np.clip(flat, self.lo, self.hi)
        out = self._spline(inside)
        # linear tails outside the knot range
        below = flat < self.lo
        above = flat > self.hi
        if below.any() or above.any():
            d = self._spline.derivative()
            if below.any():
                out[below] += (flat[below] - self.lo)[:, None] * d(self.lo)[None, :]
            if above.any():
                out[above] += (flat[above] - self.hi)[:, None] * d(self.hi)[None, :]
        return out.reshape(x.shape + (self.n_basis,))

    def describe(self) -> dict:
        d = {"family": self.spec.label, "M": self.n_basis}
        if self.spec.family in ("spline", "trig"):
            d.update(lo=self.lo, hi=self.hi)
        if self.spec.family == "spline":
            d["interior_knots"] = list(self.interior)
        return d


def evaluate_basis(basis, x) -> np.ndarray:
    """Evaluate ``basis`` (a :class:`FittedBasis` or a fixed-range spec) at ``x``."""
    if isinstance(basis, BasisSpec):
        basis = basis.fit(lo=0.0, hi=1.0)
    return basis(x)


def quadrature_grid(times, quad_step: float) -> np.ndarray:
    """Uniform grid of spacing ``quad_step`` from 0, merged with ``times``.

    Merging places every observation time on the grid, so the last panel
    before each ``t_i`` is handled exactly.
    """
    times = np.asarray(times, dtype=float)
    top = float(times.max())
    n_steps = int(np.floor(top / quad_step + 1e-9))
    uniform = np.arange(n_steps + 1) * quad_step
    grid = np.union1d(uniform, times)
    grid = np.union1d(grid, [0.0])
    # drop near-duplicates produced by floating point
    keep = np.r_[True, np.diff(grid) > 1e-12]
    return grid[keep]


def _check_quad_step(times, quad_step):
    if quad_step <= 0:
        raise QuadTooCoarse("quad_step must be positive")
    spacing = np.min(np.diff(np.r_[0.0, np.sort(times)])) if len(times) else np.inf
    # 0.01 is always accepted: observation times are merged into the grid
    if quad_step > max(spacing, 0.01) + 1e-12:
        raise QuadTooCoarse(
            f"quad_step {quad_step} exceeds the observation spacing {spacing:.4g}"
        )


@dataclass
class IntegratedDesign:
    """Regressors for all experiments, stacked row-wise.

    Attributes
    ----------
    blocks : ndarray, shape (N, p, M)
        ``blocks[i, k]`` is the basis block of variable ``k`` in row ``i``.
        For the integrated design this is ``Psi_k(t_i)``; for the
        derivative baseline it is ``psi(Xhat_k(t_i))``.
    time : ndarray of shape (N,) or None
        Unpenalized time column ``Psi_0(t_i) = t_i`` (absent for the baseline).
    experiment : ndarray of int, shape (N,)
    intercept : {"per_experiment", "common", "none"}
    """

    blocks: np.ndarray
    time: np.ndarray | None
    experiment: np.ndarray
    times: np.ndarray
    bases: list
    intercept: str = "per_experiment"
    quad_step: float | None = None
    integrated: bool = True

    def __post_init__(self):
        self.blocks.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.blocks.shape[0]

    @property
    def p(self) -> int:
        return self.blocks.shape[1]

    @property
    def M(self) -> int:
        return self.blocks.shape[2]

    @property
    def R(self) -> int:
        return int(self.experiment.max()) + 1

    @property
    def n(self) -> int:
        return len(self.times)

    def group(self, k: int) -> np.ndarray:
        """Columns of group ``k``; group 0 is the time column."""
        if k == 0:
            if self.time is None:
                raise IndexError("design has no time column")
            return self.time[:, None]
        return self.blocks[:, k - 1, :]

    def matrix(self) -> np.ndarray:
        """Full design: time column (if any) then the p blocks of M columns."""
        flat = self.blocks.reshape(self.n_rows, -1)
        if self.time is None:
            return flat.copy()
        return np.column_stack([self.time, flat])

    def column_names(self) -> list[str]:
        names = [] if self.time is None else ["t"]
        names += [f"x{k + 1}_{m + 1}" for k in range(self.p) for m in range(self.M)]
        return names

    def to_csv(self, path) -> None:
        """Dump the design with a group-annotated header."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["experiment"] + self.column_names())
            for e, row in zip(self.experiment, self.matrix()):
                w.writerow([int(e)] + [repr(float(v)) for v in row])

    def metadata(self) -> dict:
        return {
            "integrated": self.integrated,
            "quad_step": self.quad_step,
            "intercept": self.intercept,
            "bases": [b.describe() for b in self.bases],
        }


def _as_grid(smooths):
    # accept a flat list of p smooths (one experiment) or R lists of p
    if smooths and not isinstance(smooths[0], (list, tuple)):
        return [list(smooths)]
    return [list(s) for s in smooths]


def fit_bases(smooths, spec: BasisSpec, grid) -> list[FittedBasis]:
    """Fit one basis per variable on the smoothed values pooled over experiments."""
    rows = _as_grid(smooths)
    p = len(rows[0])
    out = []
    for k in range(p):
        vals = np.concatenate([rows[r][k](grid) for r in range(len(rows))])
        out.append(spec.fit(vals))
    return out


def build_integrated_design(
    smooths,
    spec: BasisSpec,
    times,
    quad_step: float = 0.01,
    bases: Sequence[FittedBasis] | None = None,
) -> IntegratedDesign:
    """Integrated basis regressors ``Psi_k(t_i)`` for every experiment.

    Parameters
    ----------
    smooths : list of callables, or list of R such lists
        Smoothed trajectories ``Xhat_k`` (anything callable on an array of
        times works, e.g. :class:`grade.smoother.SmoothEstimate`).
    spec : BasisSpec
    times : array_like, shape (n,)
        Observation times in [0, 1], shared by all experiments.
    quad_step : float
        Spacing of the trapezoid grid.
    bases : optional
        Pre-fitted bases (one per variable); fitted from the data otherwise.
    """
    times = np.asarray(times, dtype=float)
    _check_quad_step(times, quad_step)
    rows = _as_grid(smooths)
    R, p = len(rows), len(rows[0])
    grid = quadrature_grid(times, quad_step)
    if bases is None:
        bases = fit_bases(rows, spec, grid)
    idx = np.searchsorted(grid, times)
    idx = np.minimum(idx, len(grid) - 1)
    M = bases[0].n_basis
    blocks = np.empty((R, len(times), p, M))
    for r in range(R):
        for k in range(p):
            vals = bases[k](rows[r][k](grid))
            cum = cumulative_trapezoid(vals, grid, axis=0, initial=0.0)
            blocks[r, :, k, :] = cum[idx]
    n = len(times)
    return IntegratedDesign(
        blocks=blocks.reshape(R * n, p, M),
        time=np.tile(times, R),
        experiment=np.repeat(np.arange(R), n),
        times=times,
        bases=list(bases),
        intercept="per_experiment",
        quad_step=quad_step,
        integrated=True,
    )


def build_basis_design(
    smooths,
    spec: BasisSpec,
    times,
    bases: Sequence[FittedBasis] | None = None,
    quad_step: float = 0.01,
) -> IntegratedDesign:
    """Non-integrated regressors ``psi(Xhat_k(t_i))`` for the derivative baseline."""
    times = np.asarray(times, dtype=float)
    rows = _as_grid(smooths)
    R, p = len(rows), len(rows[0])
    if bases is None:
        bases = fit_bases(rows, spec, quadrature_grid(times, quad_step))
    M = bases[0].n_basis
    blocks = np.empty((R, len(times), p, M))
    for r in range(R):
        for k in range(p):
            blocks[r, :, k, :] = bases[k](rows[r][k](times))
    n = len(times)
    return IntegratedDesign(
        blocks=blocks.reshape(R * n, p, M),
        time=None,
        experiment=np.repeat(np.arange(R), n),
        times=times,
        bases=list(bases),
        intercept="common",
        quad_step=None,
        integrated=False,
    )


def group_gram(design: IntegratedDesign, k: int) -> np.ndarray:
    """``(1/N) sum_i Psi_k(t_i) Psi_k(t_i)^T`` over all N stacked rows."""
    X = design.group(k)
    return X.T @ X / X.shape[0]
