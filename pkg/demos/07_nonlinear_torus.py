"""Nonlinear run on the torus with the integrating-factor midpoint stepper.

The stiff flux damping alpha/eps^2 sits inside the per-mode matrix
exponential, so the step size is set by the explicit quadratic sources,
not by eps.  The run tracks component norms, conserves the density mean
to machine precision, and keeps the fields real (Hermitian symmetry).

2D runs are outside the d >= 3 hypotheses of the decay theory and are
labeled experimental; they are used here because they render quickly.

Writes demos/output/nonlinear_norms.dat with (t, |a|, |v|, |theta|, |q|).
"""

import math
from pathlib import Path

import numpy as np

from nsclab.evolve import default_dt, imex_step
from nsclab.model import ModelSpec
from nsclab.spectral import Grid, State, random_field

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

rng = np.random.default_rng(3)
grid = Grid(d=2, n=48)
spec = ModelSpec(kind="nsc", d=2, eps=0.25)
mk = lambda a: random_field(grid, rng, a, 3.0)
st = State(a=mk(5e-2), v=(mk(5e-2), mk(5e-2)), theta=mk(5e-2), q=(mk(5e-2), mk(5e-2)))
st.a.coeffs[0, 0] = 0.01  # nonzero mean density perturbation

dt = default_dt(st, spec)
T = 2.0
nsteps = int(round(T / dt))
print(f"experimental 2D run: n = {grid.n}, eps = {spec.eps}, dt = {dt:.4f}, {nsteps} steps")

rows = []
mean0 = st.a.coeffs[0, 0].real
cur = st
for step in range(nsteps + 1):
    if step % 10 == 0 or step == nsteps:
        rows.append(
            (
                cur.time,
                cur.a.l2_norm(),
                math.sqrt(sum(f.l2_norm() ** 2 for f in cur.v)),
                cur.theta.l2_norm(),
                math.sqrt(sum(f.l2_norm() ** 2 for f in cur.q)),
            )
        )
    if step < nsteps:
        cur = imex_step(cur, spec, dt)

drift = abs(cur.a.coeffs[0, 0].real - mean0)
print(f"mean density drift after {nsteps} steps: {drift:.2e}")
print(f"fields still real (Hermitian): {cur.is_hermitian(1e-12)}")
print(f"energy at t=0: {rows[0][1:]},\n       at t={T}: {tuple(round(v, 6) for v in rows[-1][1:])}")

with open(OUT / "nonlinear_norms.dat", "w") as fh:
    fh.write("# t l2_a l2_v l2_theta l2_q\n")
    for row in rows:
        fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
print(f"series written to {OUT/'nonlinear_norms.dat'}")
