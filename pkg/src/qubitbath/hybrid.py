"""Qubit-cavity-bath propagation, the dressed-state eigensystem of the
qubit-cavity pair, global-master-equation predictions and local-regime rates.

All energies are normalized by the cavity splitting (= 1). The qubit sits at
r = Omega/Omega0 with detuning D = r - 1, couples to the cavity with the
dimensionless g_bar, and the bath couples to the cavity only.

Propagation runs in the frame rotating at the cavity splitting: qubit
diagonal D, cavity 0, oscillator i at omega_i - 1, all couplings static. In
that frame the dressed-state projections |<1~|psi>|^2, |<2~|psi>|^2 with
their explicit qubit/cavity phase factors reduce exactly to
|alpha c_Q + beta c_C|^2 and |gamma_c c_Q + delta c_C|^2: the frame phases
cancel the projector phases identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from threadpoolctl import threadpool_limits

from . import _kernels
from .bath import BathRealization, BathSpec, sample_bath
from .dynamics import (
    DEFAULT_NORM_TOL,
    RK4_STABILITY,
    TimeGrid,
    _kappa_apply,
    _packed_upper,
    resolve_grid,
)
from .errors import NormDriftError


@dataclass(frozen=True)
class HybridSpec:
    """Qubit-cavity-bath configuration in cavity units."""

    r: float = 1.0
    g_bar: float = 0.1
    bath: BathSpec = field(default_factory=lambda: BathSpec(n_oscillators=0))

    @property
    def detuning(self) -> float:
        return self.r - 1.0

    def validate(self) -> None:
        if self.g_bar < 0:
            raise ValueError(f"g_bar must be >= 0, got {self.g_bar}")
        if abs(self.bath.center - 1.0) > 1e-12:
            raise ValueError("hybrid bath must be centered at the cavity splitting (center = 1)")
        self.bath.validate()


@dataclass(frozen=True)
class HybridEigensystem:
    """Dressed states of the isolated qubit-cavity pair.

    |1~> = alpha |qubit> + beta |cavity> at energy eps1,
    |2~> = gamma_c |qubit> + delta |cavity> at eps2 (>= eps1); the shared
    ground state |0~> sits at eps0 = 0. theta = sqrt(D^2 + 4 g_bar^2) is the
    dressed splitting.
    """

    eps1: float
    eps2: float
    alpha: float
    beta: float
    gamma_c: float
    delta: float
    theta: float
    eps0: float = 0.0

    def validate(self, tol: float = 1e-12) -> None:
        checks = {
            "alpha^2+beta^2": self.alpha**2 + self.beta**2 - 1.0,
            "gamma_c^2+delta^2": self.gamma_c**2 + self.delta**2 - 1.0,
            "orthogonality": self.alpha * self.gamma_c + self.beta * self.delta,
            "alpha^2=delta^2": self.alpha**2 - self.delta**2,
            "beta^2=gamma_c^2": self.beta**2 - self.gamma_c**2,
        }
        for name, val in checks.items():
            if abs(val) > tol:
                raise ValueError(f"eigensystem identity {name} violated by {val:.3e}")
        if self.eps1 > self.eps2:
            raise ValueError("eps1 must be <= eps2")


def hybrid_eigensystem(g_bar: float, detuning: float) -> HybridEigensystem:
    """Closed-form dressed states for coupling g_bar and detuning D.

    eps_{1,2} = 1 + (D -/+ theta)/2. Undefined (raises) at the exact
    degeneracy g_bar = 0, D = 0.
    """
    if g_bar == 0.0 and detuning == 0.0:
        raise ValueError("eigenvectors undefined at the exact degeneracy g_bar = 0, D = 0")
    d = float(detuning)
    theta = math.hypot(d, 2.0 * g_bar)
    eps1 = 1.0 + 0.5 * (d - theta)
    eps2 = 1.0 + 0.5 * (d + theta)

    den1_sq = 4.0 * g_bar**2 + (d - theta) ** 2
    if den1_sq > 0.0:
        den1 = math.sqrt(den1_sq)
        alpha, beta = (d - theta) / den1, 2.0 * g_bar / den1
    else:
        # g_bar = 0, D > 0: lower state is the bare cavity
        alpha, beta = 0.0, 1.0
    den2_sq = 4.0 * g_bar**2 + (d + theta) ** 2
    if den2_sq > 0.0:
        den2 = math.sqrt(den2_sq)
        gamma_c, delta = (d + theta) / den2, 2.0 * g_bar / den2
    else:
        # g_bar = 0, D < 0: upper state is the bare cavity
        gamma_c, delta = 0.0, 1.0
    return HybridEigensystem(eps1=eps1, eps2=eps2, alpha=alpha, beta=beta,
                             gamma_c=gamma_c, delta=delta, theta=theta)


def isolated_populations(g_bar: float, detuning: float, t) -> np.ndarray:
    """Qubit population of the isolated pair after exciting the qubit.

    (1/2)[1 + D^2/theta^2 + (4 g_bar^2/theta^2) cos(theta t)]; the cavity
    holds the complement. Degenerate uncoupled case returns 1.
    """
    t = np.asarray(t, dtype=float)
    th_sq = detuning**2 + 4.0 * g_bar**2
    if th_sq == 0.0:
        return np.ones_like(t)
    th = math.sqrt(th_sq)
    return 0.5 * (1.0 + detuning**2 / th_sq + (4.0 * g_bar**2 / th_sq) * np.cos(th * t))


class GlobalRates(NamedTuple):
    down_1: float   # dressed state |1~> -> ground
    down_2: float   # dressed state |2~> -> ground


def global_rates(eig: HybridEigensystem, gamma0: float) -> GlobalRates:
    """Zero-temperature decay rates of the dressed states into the bath.

    Only the cavity component radiates: Gamma_{1->0} = Gamma0 beta^2 and
    Gamma_{2->0} = Gamma0 delta^2; they sum to Gamma0 exactly. All other
    transitions vanish (selection rule / zero temperature).
    """
    if gamma0 < 0:
        raise ValueError(f"gamma0 must be >= 0, got {gamma0}")
    return GlobalRates(gamma0 * eig.beta**2, gamma0 * eig.delta**2)


def global_populations(eig: HybridEigensystem, gamma0: float, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dressed-state populations (rho11, rho22, rho00) of the rate picture.

    rho11(0) = alpha^2 and rho22(0) = beta^2 for the qubit-excited start;
    each decays with its own rate and the ground state collects the rest.
    """
    t = np.asarray(t, dtype=float)
    rates = global_rates(eig, gamma0)
    rho11 = eig.alpha**2 * np.exp(-rates.down_1 * t)
    rho22 = eig.beta**2 * np.exp(-rates.down_2 * t)
    return rho11, rho22, 1.0 - rho11 - rho22


def ground_rate_initial(g_bar: float, detuning: float, gamma0: float) -> float:
    """Initial ground-state filling rate, Lorentzian in the detuning.

    (Gamma0/2) / (1 + (D / 2 g_bar)^2), peaking at Gamma0/2 on resonance
    with half maximum at |D| = 2 g_bar. Equals 2 Gamma0 alpha^2 beta^2 of
    the rate picture identically.
    """
    if g_bar <= 0:
        raise ValueError(f"g_bar must be > 0, got {g_bar}")
    return 0.5 * gamma0 / (1.0 + (detuning / (2.0 * g_bar)) ** 2)


class LocalRate(NamedTuple):
    value: float
    valid: bool


def local_rate(g_bar: float, detuning: float, gamma0: float) -> LocalRate:
    """Local-picture qubit decay rate g_bar^2 Gamma0 / D^2.

    The cavity acts as a spectral filter; the second-order result holds for
    |D| >> Gamma0 (in cavity units). ``valid`` is False below |D| = 5 Gamma0;
    the value is still returned for overlays.
    """
    if detuning == 0.0:
        raise ValueError("local rate undefined at zero detuning")
    value = g_bar**2 * gamma0 / detuning**2
    return LocalRate(value, bool(abs(detuning) >= 5.0 * gamma0))


@dataclass
class HybridTrajectory:
    """Sampled observables of one qubit-cavity-bath propagation."""

    times: np.ndarray
    p_qubit: np.ndarray
    p_cavity: np.ndarray
    rho11_tilde: np.ndarray
    rho22_tilde: np.ndarray
    norm: np.ndarray
    meta: dict = field(default_factory=dict)

    def validate(self, tol: float = 1e-6) -> None:
        for name in ("p_qubit", "p_cavity", "rho11_tilde", "rho22_tilde"):
            v = getattr(self, name)
            if np.any(v < -tol) or np.any(v > 1 + tol):
                raise ValueError(f"{name} out of [0, 1] beyond tolerance")
        if np.any(self.rho11_tilde + self.rho22_tilde > 1 + tol):
            raise ValueError("rho11_tilde + rho22_tilde exceeds 1 beyond tolerance")


def evolve_hybrid(
    spec: HybridSpec,
    grid: TimeGrid,
    *,
    realization: BathRealization | None = None,
    workers: int | None = None,
    norm_tol: float = DEFAULT_NORM_TOL,
) -> HybridTrajectory:
    """Propagate the (N+2)-amplitude hybrid system from the qubit-excited
    start and record bare and dressed-state populations.

    The bath realization is sampled from ``spec.bath`` unless one is passed
    explicitly. Same integrator contract as :func:`dynamics.evolve`.
    """
    spec.validate()
    real = realization if realization is not None else sample_bath(spec.bath)
    if real.n != spec.bath.n_oscillators:
        raise ValueError("realization size does not match spec.bath")

    eig = hybrid_eigensystem(spec.g_bar, spec.detuning) if (spec.g_bar or spec.detuning) else None

    lam_max = (abs(spec.detuning) + spec.g_bar
               + (float(np.max(np.abs(real.omegas - 1.0))) if real.n else 0.0)
               + math.sqrt(float(np.dot(real.gammas, real.gammas))))
    if real.kappas is not None and real.n > 1:
        lam_max += (real.n - 1) * float(np.max(np.abs(real.kappas)))
    dt, n_steps, stride = resolve_grid(grid, lam_max)

    prev_threads = _kernels.get_num_threads()
    if workers is not None:
        _kernels.set_num_threads(workers)
    try:
        with threadpool_limits(limits=workers):
            traj = _evolve_hybrid_loop(spec, real, eig, dt, n_steps, stride, norm_tol)
    finally:
        if workers is not None:
            _kernels.set_num_threads(prev_threads)
    traj.meta.update({
        "dt": dt,
        "n_steps": n_steps,
        "sample_stride": stride,
        "stability_bound": RK4_STABILITY / lam_max if lam_max > 0 else math.inf,
        "lambda_max_estimate": lam_max,
        "workers": workers if workers is not None else prev_threads,
    })
    return traj


def _evolve_hybrid_loop(spec, real, eig, dt, n_steps, stride, norm_tol):
    n = real.n
    diag = np.ascontiguousarray(real.omegas - 1.0)
    gamma = np.ascontiguousarray(real.gammas)
    ap = _packed_upper(real.kappas) if real.kappas is not None else None
    d_qubit = float(spec.detuning)
    g_qc = float(spec.g_bar)

    c = np.zeros(n + 2, dtype=np.complex128)
    c[0] = 1.0
    u = np.empty_like(c)
    y = np.empty_like(c)

    def stage(out, base, x, a):
        _kernels.hub_stage(out, base, x, a, d_qubit, g_qc, diag, gamma)
        if ap is not None:
            out[2:] += (a * -1j) * _kappa_apply(ap, x[2:], n)

    def project(cq, cc):
        if eig is None:
            return 0.0, 0.0
        r11 = abs(eig.alpha * cq + eig.beta * cc) ** 2
        r22 = abs(eig.gamma_c * cq + eig.delta * cc) ** 2
        return r11, r22

    times = [0.0]
    pq = [float(abs(c[0]) ** 2)]
    pc = [float(abs(c[1]) ** 2)]
    r11_0, r22_0 = project(c[0], c[1])
    r11 = [r11_0]
    r22 = [r22_0]
    norms = [math.sqrt(float(np.vdot(c, c).real))]

    for k in range(1, n_steps + 1):
        stage(u, c, c, dt / 4)
        stage(y, c, u, dt / 3)
        stage(u, c, y, dt / 2)
        stage(y, c, u, dt)
        c, y = y, c
        if k % stride == 0 or k == n_steps:
            nsq = float(np.vdot(c, c).real)
            drift = abs(nsq - 1.0)
            t_now = k * dt
            if drift > 100.0 * norm_tol:
                raise NormDriftError(
                    f"norm^2 drifted to {nsq!r} (|drift| = {drift:.3e} > "
                    f"{100.0 * norm_tol:.3e}) at t = {t_now:.6g}; reduce dt"
                )
            times.append(t_now)
            pq.append(float(abs(c[0]) ** 2))
            pc.append(float(abs(c[1]) ** 2))
            a, b = project(c[0], c[1])
            r11.append(a)
            r22.append(b)
            norms.append(math.sqrt(nsq))

    return HybridTrajectory(
        times=np.asarray(times),
        p_qubit=np.asarray(pq),
        p_cavity=np.asarray(pc),
        rho11_tilde=np.asarray(r11),
        rho22_tilde=np.asarray(r22),
        norm=np.asarray(norms),
    )
