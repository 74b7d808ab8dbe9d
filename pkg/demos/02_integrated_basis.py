"""Basis families and the integrated design used as regressors.

Run with ``python3 demos/02_integrated_basis.py``.
"""
# %% basis families
import numpy as np

from grade.basis import BasisSpec, build_integrated_design, evaluate_basis
from grade.dynamics import appendix_c_system, generate_multi_experiment
from grade.smoother import smooth_dataset

for text in ("linear", "monomial3", "spline2", "trig4"):
    spec = BasisSpec.parse(text)
    fitted = spec.fit(lo=0.0, hi=1.0)
    print(f"{spec.label:10s} M={spec.n_basis}  psi(0.5) = {np.round(evaluate_basis(fitted, 0.5), 3)}")

# %% integrals of psi(x) = (x, x^2, x^3) along x(u) = u are t^2/2, t^3/3, t^4/4
times = np.arange(1, 201) / 200
design = build_integrated_design([lambda u: np.asarray(u, dtype=float)], BasisSpec.monomial(3), times)
print("Psi at t = 1:", design.group(1)[-1], "expected", [1 / 2, 1 / 3, 1 / 4])

# %% integrated design of a smoothed dataset
system, init = appendix_c_system(seed=0)
data = generate_multi_experiment(system, init[None], n=200, sigma=1.0, seed=0)
smooths = smooth_dataset(data)
design = build_integrated_design(smooths, BasisSpec.monomial(3), data.times, quad_step=0.01)
print("design columns:", design.column_names()[:7], "...", len(design.column_names()), "in total")

# %% trapezoid refinement: the error shrinks with the square of the step
fine = build_integrated_design(smooths, BasisSpec.monomial(3), data.times, quad_step=0.0001, bases=design.bases)
for step in (0.005, 0.001, 0.0005):
    d = build_integrated_design(smooths, BasisSpec.monomial(3), data.times, quad_step=step, bases=design.bases)
    print(f"step {step:<7} max |Psi - Psi_fine| = {np.abs(d.blocks - fine.blocks).max():.2e}")
