"""Shared independent oracles for the test suite.

These deliberately avoid the package's propagation path: dense
eigendecomposition for exact time evolution, a time-dependent
interaction-picture integrator with explicit phase factors, and adaptive
quadrature for the bandwidth integral.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad


def dense_propagate(a: np.ndarray, c0: np.ndarray, t: float) -> np.ndarray:
    """exp(-i a t) c0 via eigendecomposition of the real symmetric matrix."""
    w, v = np.linalg.eigh(a)
    return (v * np.exp(-1j * w * t)) @ (v.T @ c0)


def interaction_picture_reference(omegas, gammas, kappas, t_end, dt, reference=1.0):
    """RK4 integration of the interaction-picture amplitude equations with
    explicit time-dependent phase factors (no rotating-frame transformation).

    Returns the final amplitude vector (qubit first). Moduli should agree
    with the rotating-frame propagation to rounding.
    """
    n = len(omegas)
    det = reference - np.asarray(omegas, dtype=float)   # Omega - omega_i

    def deriv(t, c):
        d = np.empty_like(c)
        phase = np.exp(1j * det * t)
        d[0] = -1j * np.sum(gammas * phase * c[1:])
        d[1:] = -1j * gammas * np.conj(phase) * c[0]
        if kappas is not None:
            osc_phase = np.exp(1j * np.subtract.outer(omegas, omegas) * t)
            d[1:] += -1j * (kappas * osc_phase) @ c[1:]
        return d

    c = np.zeros(n + 1, dtype=complex)
    c[0] = 1.0
    steps = int(round(t_end / dt))
    for k in range(steps):
        t = k * dt
        k1 = deriv(t, c)
        k2 = deriv(t + dt / 2, c + dt / 2 * k1)
        k3 = deriv(t + dt / 2, c + dt / 2 * k2)
        k4 = deriv(t + dt, c + dt * k3)
        c = c + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return c


def chi_quadrature(t: float, width: float) -> float:
    """Adaptive-quadrature oracle for the bandwidth integral, with the
    removable singularity at w = 0 patched by its series."""

    def integrand(w):
        if abs(w) < 1e-6:
            return 0.5 - w * w / 24.0
        return (1.0 - np.cos(w)) / (w * w)

    half = 0.5 * width * t
    val, _ = quad(integrand, 0.0, half, epsabs=1e-12, epsrel=1e-12, limit=400)
    return 2.0 * val
