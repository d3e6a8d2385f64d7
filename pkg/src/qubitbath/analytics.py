"""Closed-form decay laws and rate extraction from trajectories.

The laws serve double duty: overlay predictions for the figure presets and
independent oracles for the acceptance suite. Asymptotic laws come with a
vectorized validity flag instead of hard domain errors, because overlays
intentionally plot them outside their regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import sici

from .bath import BathRealization, gamma0_of, lambda0_of, nu0_of

#: quantitative readings of the asymptotic validity conditions
ZENO_MAX_PHASE = 1.0          # Lambda0 t <= 1
LINEAR_MAX_DECAY = 0.1        # Gamma0 t <= 0.1  ("<< 1")
BANDWIDTH_RESOLVED = 10.0     # width t >= 10   (">> 1")

EMPIRICAL = "empirical"
INDEPENDENT_MEANS = "independent-means"


class Law(NamedTuple):
    """A law evaluation plus where it is trustworthy."""

    value: np.ndarray
    valid: np.ndarray


@dataclass(frozen=True)
class DecayLawParams:
    """Parameters feeding the closed-form laws, derived from one realization.

    ``moment4`` is the mixed fourth moment <gamma_i gamma_j kappa_ik
    kappa_kj> entering the internal-coupling rate correction, with its
    convention recorded: "empirical" (Monte Carlo over index triples of the
    actual realization) or "independent-means" (<gamma>^2 <kappa>^2).
    """

    gamma0: float
    lambda0: float
    width: float
    nu0: float
    moment4: float = 0.0
    moment4_convention: str = EMPIRICAL

    def validate(self) -> None:
        for name in ("gamma0", "lambda0", "width", "nu0", "moment4"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.moment4_convention not in (EMPIRICAL, INDEPENDENT_MEANS):
            raise ValueError(f"unknown moment4 convention {self.moment4_convention!r}")

    @classmethod
    def from_realization(cls, real: BathRealization, n_triples: int = 100_000,
                         moment_seed: int = 0) -> "DecayLawParams":
        m4 = empirical_moment4(real, n_triples=n_triples, seed=moment_seed) if real.kappas is not None else 0.0
        return cls(gamma0=gamma0_of(real), lambda0=lambda0_of(real),
                   width=real.spec.width, nu0=nu0_of(real), moment4=m4)


def empirical_moment4(real: BathRealization, n_triples: int = 100_000, seed: int = 0) -> float:
    """Monte-Carlo estimate of <gamma_i gamma_j kappa_ik kappa_kj> over
    uniformly random index triples of the actual realization.

    Index coincidences enter at their natural 1/N rate, which is the point
    of estimating from the sample rather than assuming factorized means.
    """
    if real.kappas is None:
        return 0.0
    if real.n < 2:
        return 0.0
    rng = np.random.default_rng(seed)
    i, j, k = (rng.integers(0, real.n, n_triples) for _ in range(3))
    return float(np.mean(real.gammas[i] * real.gammas[j] * real.kappas[i, k] * real.kappas[k, j]))


def independent_means_moment4(real: BathRealization) -> float:
    """Factorized-moment convention <gamma>^2 <kappa>^2 (off-diagonal mean)."""
    if real.kappas is None or real.n < 2:
        return 0.0
    mean_gamma = float(np.mean(real.gammas))
    n = real.n
    mean_kappa = float(np.sum(real.kappas) / (n * (n - 1)))
    return mean_gamma**2 * mean_kappa**2


def chi(t, width: float) -> np.ndarray:
    """Bandwidth integral chi(t) = integral over [-wt/2, wt/2] of
    (1 - cos w)/w^2.

    Evaluated in closed form, chi = 2 [Si(L) - (1 - cos L)/L] with
    L = width t / 2 (integration by parts of the tail; the w -> 0 point is
    removable). chi(0) = 0, chi is nondecreasing, chi -> pi with the exact
    tail chi - pi = -2/L - 2 sin L / L^2 + O(L^-3).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("chi is defined for t >= 0")
    L = 0.5 * width * t
    si, _ = sici(L)
    small = L < 1e-4
    Ls = np.where(small, 1.0, L)  # placeholder to avoid 0/0; overwritten below
    main = (1.0 - np.cos(Ls)) / Ls
    series = L / 2.0 - L**3 / 24.0
    frac = np.where(small, series, main)
    return 2.0 * (si - frac)


def zeno_population(lambda0: float, t) -> Law:
    """Short-time quadratic decay p = 1 - Lambda0^2 t^2 (valid Lambda0 t <= 1)."""
    t = np.asarray(t, dtype=float)
    return Law(1.0 - (lambda0 * t) ** 2, lambda0 * np.abs(t) <= ZENO_MAX_PHASE)


def linear_population(gamma0: float, t, width: float | None = None) -> Law:
    """Linear decay p = 1 - Gamma0 t (bandwidth resolved, decay barely begun)."""
    t = np.asarray(t, dtype=float)
    valid = gamma0 * t <= LINEAR_MAX_DECAY
    if width is not None:
        valid = valid & (width * t >= BANDWIDTH_RESOLVED)
    return Law(1.0 - gamma0 * t, valid)


def exponential_population(gamma0: float, t) -> np.ndarray:
    """Resummed exponential decay p = exp(-Gamma0 t)."""
    return np.exp(-gamma0 * np.asarray(t, dtype=float))


def longtime_amplitude(gamma0: float, width: float, t) -> Law:
    """Very-long-time persistence amplitude
    exp(-Gamma0 t / 2) + (4 Gamma0 / (pi width)) sin(width t / 2) / (width t).

    The oscillatory term carries the band-edge beating whose 1/t envelope
    eventually outlives the exponential. Valid once the bandwidth is
    resolved (width t >> 1).
    """
    t = np.asarray(t, dtype=float)
    wt = width * t
    osc = np.divide(np.sin(0.5 * wt), wt, out=np.full_like(t, 0.5), where=wt != 0)
    value = np.exp(-0.5 * gamma0 * t) + (4.0 * gamma0 / (math.pi * width)) * osc
    return Law(value, wt >= BANDWIDTH_RESOLVED)


def crossover_time(gamma0: float, width: float) -> float:
    """Scale where the oscillatory tail overtakes the exponential:
    t0 = (4 / Gamma0) ln(width / Gamma0). Requires width > Gamma0 > 0."""
    if not (width > gamma0 > 0):
        raise ValueError(f"crossover time needs width > gamma0 > 0, got width={width}, gamma0={gamma0}")
    return 4.0 / gamma0 * math.log(width / gamma0)


def internal_coupling_rate(gamma0: float, nu0: float, moment4: float) -> Law:
    """Decay rate corrected for internal bath couplings:
    Gamma = Gamma0 - 2 pi^3 nu0^3 <gamma_i gamma_j kappa_ik kappa_kj>.

    Perturbative: a negative result is flagged invalid rather than clipped.
    """
    if moment4 < 0:
        raise ValueError(f"moment4 must be >= 0, got {moment4}")
    value = gamma0 - 2.0 * math.pi**3 * nu0**3 * moment4
    return Law(np.float64(value), np.bool_(value >= 0.0))


@dataclass(frozen=True)
class RateFit:
    """Least-squares exponential rate over a time window."""

    rate: float
    window: tuple[float, float]
    residual: float   # max |log(observable) - fit line| over the window
    n_samples: int = 0


def fit_decay_rate(traj, window: tuple[float, float], observable: str = "p_qubit") -> RateFit:
    """Fit log(observable) = a - rate * t by least squares over the window.

    ``traj`` is anything with ``times`` and the named observable array
    (Trajectory, HybridTrajectory), or a (times, values) pair. Windows with
    fewer than 10 samples are refused; the observable must be strictly
    positive inside the window.
    """
    if isinstance(traj, tuple):
        times, values = traj
    else:
        times, values = traj.times, getattr(traj, observable)
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    if not lo < hi:
        raise ValueError(f"window must have t_lo < t_hi, got {window}")
    mask = (times >= lo) & (times <= hi)
    n = int(mask.sum())
    if n < 10:
        raise ValueError(f"window {window} holds only {n} samples; need at least 10")
    v = values[mask]
    if np.any(v <= 0):
        raise ValueError("observable must be strictly positive on the fit window")
    tw = times[mask]
    logv = np.log(v)
    slope, intercept = np.polyfit(tw, logv, 1)
    residual = float(np.max(np.abs(logv - (slope * tw + intercept))))
    return RateFit(rate=float(-slope), window=(float(lo), float(hi)), residual=residual, n_samples=n)


def first_extremum_time(times, values, t_min: float = 0.0) -> float | None:
    """Time of the first interior local extremum after ``t_min``.

    Used as the crossover detector for the long-time decay: the trace stops
    being monotone once the oscillatory band-edge term competes with the
    exponential. Returns None if the signal stays monotone.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    d = np.diff(values)
    for k in range(1, len(d)):
        if times[k] < t_min:
            continue
        if d[k - 1] == 0.0 or d[k] == 0.0:
            continue
        if (d[k - 1] > 0) != (d[k] > 0):
            return float(times[k])
    return None


def overlay_laws(times, params: DecayLawParams) -> dict[str, np.ndarray]:
    """Law overlay columns on a trajectory's time grid (law_<name>)."""
    times = np.asarray(times, dtype=float)
    cols = {
        "law_zeno": zeno_population(params.lambda0, times).value,
        "law_linear": linear_population(params.gamma0, times, params.width).value,
        "law_exponential": exponential_population(params.gamma0, times),
        "law_longtime": longtime_amplitude(params.gamma0, params.width, times).value ** 2,
    }
    return cols
