"""Independent reference computations used to freeze expected values.

These deliberately avoid the code paths they check: the ODE oracle
integrates dU/dt = M U with an adaptive stiff integrator instead of a
matrix exponential, roots of 2x2 symbols come from the quadratic formula,
and products of modes are checked by direct convolution.
"""

import numpy as np
from scipy.integrate import ode, solve_ivp


def ode_propagate(mat, u0, t, rtol=1e-11, atol=1e-14):
    """Adaptive implicit (BDF) integration of the linear mode ODE."""
    mat = np.asarray(mat, dtype=complex)
    u0 = np.asarray(u0, dtype=complex)
    if t == 0:
        return u0.copy()
    solver = ode(lambda s, y: mat @ y, lambda s, y: mat)
    solver.set_integrator("zvode", method="bdf", rtol=rtol, atol=atol, nsteps=500000, with_jacobian=True)
    solver.set_initial_value(u0, 0.0)
    out = solver.integrate(t)
    if not solver.successful():
        raise RuntimeError("zvode oracle failed")
    return out


def ode_propagate_explicit(mat, u0, t, rtol=1e-10):
    """Adaptive high-order explicit integration (real-embedded DOP853)."""
    mat = np.asarray(mat, dtype=complex)
    u0 = np.asarray(u0, dtype=complex)
    if t == 0:
        return u0.copy()
    n = mat.shape[0]
    mr = np.block([[mat.real, -mat.imag], [mat.imag, mat.real]])
    y0 = np.concatenate([u0.real, u0.imag])
    sol = solve_ivp(
        lambda s, y: mr @ y, (0.0, t), y0, method="DOP853", rtol=rtol,
        atol=1e-13 * max(1.0, float(np.abs(y0).max())),
    )
    y = sol.y[:, -1]
    return y[:n] + 1j * y[n:]


def quadratic_roots(b, c):
    """Roots of lambda^2 + b lambda + c = 0 by the quadratic formula."""
    disc = np.lib.scimath.sqrt(b * b - 4.0 * c)
    return np.array([(-b + disc) / 2.0, (-b - disc) / 2.0])


def toy_damped_roots(alpha, kappa, eps, xi):
    """Characteristic roots of the damped 2x2 coupling:
    lambda^2 + (alpha/eps^2) lambda + kappa xi^2 / eps^2 = 0."""
    return quadratic_roots(alpha / eps**2, kappa * xi**2 / eps**2)


def toy_diffusive_roots(xi):
    """Characteristic roots of the diffusive 2x2 coupling:
    lambda^2 + xi^2 lambda + xi^2 = 0."""
    return quadratic_roots(xi**2, xi**2)


def convolve_modes(modes_a, modes_b):
    """Support of the product of two mode sums: all pairwise frequency sums.

    modes_* map integer mode tuples to complex amplitudes; returns the same
    for the pointwise product of the two trigonometric polynomials.
    """
    out = {}
    for ka, va in modes_a.items():
        for kb, vb in modes_b.items():
            key = tuple(x + y for x, y in zip(ka, kb))
            out[key] = out.get(key, 0.0) + va * vb
    return {k: v for k, v in out.items() if abs(v) > 0}


def companion_roots(coeffs):
    """Polynomial roots via the companion matrix (monic, highest first)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    coeffs = coeffs / coeffs[0]
    n = len(coeffs) - 1
    comp = np.zeros((n, n), dtype=complex)
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -coeffs[:0:-1]
    return np.linalg.eigvals(comp)


def charpoly_det(mat, lam):
    """det(lam I - M) evaluated directly (for cubic cross-checks)."""
    mat = np.asarray(mat, dtype=complex)
    return complex(np.linalg.det(lam * np.eye(mat.shape[0]) - mat))
