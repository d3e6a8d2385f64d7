"""Exact time propagation of the qubit-bath system in the single-excitation
sector, with observables, per-bath energy accounting and the randomness /
revival presets.

Frame: all propagation happens in the frame rotating at the reference
splitting (the qubit's, = 1). There the generator i dc/dt = A c is static
and real symmetric: the qubit diagonal entry is 0, oscillator i carries
omega_i - 1, the qubit row/column holds the couplings gamma_i and the
oscillator block the internal couplings kappa_ij. Moduli |c_i| are identical
to the interaction-picture amplitudes, so every population observable is
frame independent.

Energy accounting uses carrier-quantum bookkeeping: each excitation counts
as one quantum of the reference/carrier energy (spec center, = 1), so
E_qubit + sum_k E_k == center * norm^2 holds identically and deviations
measure integrator error only. Per-mode weighting (each quantum counted at
its own omega_i) is available as ``weighting="mode"``; it differs from the
carrier ledger by the qubit-bath interaction energy, typically ~1e-4 of a
quantum for the presets here.

Integrator: fixed-step classical RK4 on the static matrix, evaluated in
Horner form (see _kernels). The spectral radius is estimated as
max|diag| + Lambda0 + (N-1) max|kappa| and steps are refused beyond the
RK4 imaginary-axis stability limit 2.8 / lambda_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg.blas import dspmv
from threadpoolctl import threadpool_limits

from . import _kernels
from .bath import BathRealization, BathSpec, DEGENERATE, FIXED, NONE, UNIFORM, lambda0_of
from .errors import NormDriftError, StabilityError

ROTATING_FRAME = "rotating-at-center"

#: RK4 stability limit on the imaginary axis, |lambda| dt <= 2.8 (< 2 sqrt 2).
RK4_STABILITY = 2.8

#: Default step fraction of the stability bound.
DEFAULT_DT_FRACTION = 0.25

DEFAULT_NORM_TOL = 1e-6


@dataclass
class AmplitudeState:
    """Complex amplitudes of all single-excitation basis states at one time.

    ``amplitudes[0]`` is the qubit, ``amplitudes[1:]`` the oscillators, in
    the realization's canonical order.
    """

    amplitudes: np.ndarray
    t: float = 0.0
    frame: str = ROTATING_FRAME

    @property
    def c_qubit(self) -> complex:
        return self.amplitudes[0]

    @property
    def c_osc(self) -> np.ndarray:
        return self.amplitudes[1:]

    @property
    def n(self) -> int:
        return len(self.amplitudes) - 1

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def validate(self, tol: float = DEFAULT_NORM_TOL) -> None:
        if abs(self.norm_sq() - 1.0) > tol:
            raise ValueError(f"state norm^2 = {self.norm_sq()!r} deviates beyond {tol}")


def initial_excited(n: int) -> AmplitudeState:
    """Standard preparation: the qubit excited, the bath in vacuum."""
    c = np.zeros(n + 1, dtype=np.complex128)
    c[0] = 1.0
    return AmplitudeState(amplitudes=c, t=0.0)


@dataclass(frozen=True)
class TimeGrid:
    """Integration grid. With ``dt=None`` the step defaults to a quarter of
    the stability bound; with ``sample_stride=None`` roughly 2000 samples
    are kept."""

    t_end: float
    dt: float | None = None
    sample_stride: int | None = None

    def validate(self) -> None:
        if self.t_end < 0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if self.dt is not None and self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.sample_stride is not None and self.sample_stride < 1:
            raise ValueError(f"sample_stride must be >= 1, got {self.sample_stride}")


@dataclass
class Trajectory:
    """Time-sampled observables of one propagation."""

    times: np.ndarray
    p_qubit: np.ndarray
    norm: np.ndarray               # 2-norm of the state at each sample
    energies: np.ndarray           # (n_samples, n_baths) carrier-quantum energies
    meta: dict = field(default_factory=dict)
    checkpoints: list[AmplitudeState] = field(default_factory=list)

    @property
    def n_baths(self) -> int:
        return self.energies.shape[1]

    def validate(self, tol: float = 1e-6) -> None:
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(self.p_qubit < -tol) or np.any(self.p_qubit > 1 + tol):
            raise ValueError("qubit population out of [0, 1] beyond tolerance")
        if np.any(self.energies < -tol):
            raise ValueError("negative bath energy beyond tolerance")


def stability_bound(real: BathRealization, reference: float = 1.0) -> float:
    """Upper estimate of the spectral radius of the propagation matrix.

    max|diagonal| + Lambda0 for the arrowhead part plus a Gershgorin bound
    (N-1) max|kappa| for the internal-coupling block.
    """
    lam = lambda0_of(real)
    if real.n:
        lam += float(np.max(np.abs(real.omegas - reference)))
    if real.kappas is not None and real.n > 1:
        lam += (real.n - 1) * float(np.max(np.abs(real.kappas)))
    return lam


def resolve_grid(grid: TimeGrid, lam_max: float) -> tuple[float, int, int]:
    """Concrete (dt, n_steps, stride) for a grid against a spectral bound."""
    grid.validate()
    if grid.dt is not None:
        dt = grid.dt
        if lam_max > 0 and dt > RK4_STABILITY / lam_max:
            raise StabilityError(
                f"dt = {dt} exceeds the RK4 stability bound "
                f"{RK4_STABILITY / lam_max:.6g} (= 2.8 / lambda_max, lambda_max = {lam_max:.6g})"
            )
    else:
        dt = DEFAULT_DT_FRACTION / lam_max if lam_max > 0 else max(grid.t_end / 100.0, 1e-3)
    n_steps = max(1, int(math.ceil(grid.t_end / dt - 1e-12))) if grid.t_end > 0 else 0
    stride = grid.sample_stride if grid.sample_stride is not None else max(1, n_steps // 2000)
    return dt, n_steps, stride


def build_matrix(real: BathRealization, reference: float = 1.0) -> np.ndarray:
    """Dense rotating-frame matrix A (real symmetric); small N only."""
    n = real.n
    a = np.zeros((n + 1, n + 1))
    a[0, 1:] = real.gammas
    a[1:, 0] = real.gammas
    idx = np.arange(1, n + 1)
    a[idx, idx] = real.omegas - reference
    if real.kappas is not None:
        a[1:, 1:] += real.kappas
    return a


def rhs(state: AmplitudeState, real: BathRealization) -> np.ndarray:
    """Amplitude derivative dc/dt = -i A c in the rotating frame."""
    c = state.amplitudes
    if len(c) != real.n + 1:
        raise ValueError(f"state length {len(c)} does not match N + 1 = {real.n + 1}")
    y = np.empty_like(c)
    y[1:] = (real.omegas - 1.0) * c[1:] + real.gammas * c[0]
    y[0] = np.dot(real.gammas, c[1:])
    if real.kappas is not None:
        y[1:] += real.kappas @ c[1:]
    return -1j * y


def _packed_upper(k: np.ndarray) -> np.ndarray:
    # BLAS packed-U layout (column-major): element (i, j), i <= j, at
    # i + j(j+1)/2 — equals row-major lower-triangle traversal of K == K^T.
    return np.ascontiguousarray(k[np.tril_indices(k.shape[0])])


def _kappa_apply(ap: np.ndarray, x: np.ndarray, n: int) -> np.ndarray:
    xr = np.ascontiguousarray(x.real)
    xi = np.ascontiguousarray(x.imag)
    return dspmv(n, 1.0, ap, xr) + 1j * dspmv(n, 1.0, ap, xi)


def evolve(
    real: BathRealization,
    grid: TimeGrid,
    init: AmplitudeState | None = None,
    *,
    workers: int | None = None,
    norm_tol: float = DEFAULT_NORM_TOL,
    renormalize_every: int = 0,
    checkpoint_times: list[float] | None = None,
    energy_weighting: str = "carrier",
) -> Trajectory:
    """Propagate and sample the qubit-bath system.

    Deterministic for fixed inputs and worker count. The trajectory records
    the qubit population, state norm and per-bath energies at every sampled
    step (always including t = 0 and the final step). Integration aborts
    with :class:`NormDriftError` once |norm^2 - 1| exceeds 100 * norm_tol.

    ``renormalize_every`` > 0 rescales the state to unit norm every that
    many steps; off by default so norm drift stays a visible diagnostic.
    """
    if init is None:
        init = initial_excited(real.n)
    if len(init.amplitudes) != real.n + 1:
        raise ValueError(f"initial state length {len(init.amplitudes)} != N + 1 = {real.n + 1}")
    init.validate(norm_tol)

    lam_max = stability_bound(real)
    dt, n_steps, stride = resolve_grid(grid, lam_max)

    prev_threads = _kernels.get_num_threads()
    if workers is not None:
        _kernels.set_num_threads(workers)
    try:
        with threadpool_limits(limits=workers):
            traj = _evolve_loop(
                real, init, dt, n_steps, stride, norm_tol, renormalize_every,
                checkpoint_times, energy_weighting,
            )
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


def _evolve_loop(real, init, dt, n_steps, stride, norm_tol, renormalize_every,
                 checkpoint_times, energy_weighting):
    n = real.n
    diag = np.ascontiguousarray(real.omegas - 1.0)
    gamma = np.ascontiguousarray(real.gammas)
    ap = _packed_upper(real.kappas) if real.kappas is not None else None

    c = init.amplitudes.astype(np.complex128, copy=True)
    u = np.empty_like(c)
    y = np.empty_like(c)

    def stage(out, base, x, a):
        _kernels.arrow_stage(out, base, x, a, diag, gamma)
        if ap is not None:
            out[1:] += (a * -1j) * _kappa_apply(ap, x[1:], n)

    weights = _energy_weights(real, energy_weighting)
    n_baths = real.spec.n_baths
    labels = real.labels

    remaining_checkpoints = sorted(checkpoint_times) if checkpoint_times else []

    times = [0.0]
    pops = [float(abs(c[0]) ** 2)]
    norms = [math.sqrt(float(np.vdot(c, c).real))]
    energies = [_bath_energy_row(c, labels, weights, n_baths)]
    checkpoints: list[AmplitudeState] = []

    def take_checkpoints(t_now):
        while remaining_checkpoints and remaining_checkpoints[0] <= t_now + dt / 2:
            remaining_checkpoints.pop(0)
            checkpoints.append(AmplitudeState(amplitudes=c.copy(), t=t_now))

    take_checkpoints(0.0)
    for k in range(1, n_steps + 1):
        stage(u, c, c, dt / 4)
        stage(y, c, u, dt / 3)
        stage(u, c, y, dt / 2)
        stage(y, c, u, dt)
        c, y = y, c
        if renormalize_every and k % renormalize_every == 0:
            c /= math.sqrt(float(np.vdot(c, c).real))
        t_now = k * dt
        take_checkpoints(t_now)
        if k % stride == 0 or k == n_steps:
            nsq = float(np.vdot(c, c).real)
            drift = abs(nsq - 1.0)
            if drift > 100.0 * norm_tol and not renormalize_every:
                raise NormDriftError(
                    f"norm^2 drifted to {nsq!r} (|drift| = {drift:.3e} > "
                    f"{100.0 * norm_tol:.3e}) at t = {t_now:.6g}; reduce dt"
                )
            times.append(t_now)
            pops.append(float(abs(c[0]) ** 2))
            norms.append(math.sqrt(nsq))
            energies.append(_bath_energy_row(c, labels, weights, n_baths))

    return Trajectory(
        times=np.asarray(times),
        p_qubit=np.asarray(pops),
        norm=np.asarray(norms),
        energies=np.asarray(energies).reshape(len(times), n_baths),
        checkpoints=checkpoints,
    )


def _energy_weights(real: BathRealization, weighting: str) -> np.ndarray:
    if weighting == "carrier":
        return np.full(real.n, float(real.spec.center))
    if weighting == "mode":
        return real.omegas.astype(float)
    raise ValueError(f"unknown energy weighting {weighting!r}")


def _bath_energy_row(c, labels, weights, n_baths) -> np.ndarray:
    pop = np.abs(c[1:]) ** 2
    return np.bincount(labels, weights=weights * pop, minlength=n_baths)


def bath_energies(state: AmplitudeState, real: BathRealization, weighting: str = "carrier") -> np.ndarray:
    """Energy absorbed by each sub-bath in the given state.

    Default carrier-quantum ledger: every excited mode counts one quantum at
    the carrier energy (spec center), making
    qubit_energy(state) + sum(bath_energies) == center * norm^2 exact.
    ``weighting="mode"`` counts each quantum at its own mode frequency
    instead.
    """
    weights = _energy_weights(real, weighting)
    return _bath_energy_row(state.amplitudes, real.labels, weights, real.spec.n_baths)


def qubit_energy(state: AmplitudeState, real: BathRealization) -> float:
    """Carrier-quantum energy held by the qubit."""
    return float(real.spec.center) * float(abs(state.amplitudes[0]) ** 2)


def norm_error(traj: Trajectory) -> float:
    """Largest |norm^2 - 1| over the trajectory samples."""
    return float(np.max(np.abs(traj.norm**2 - 1.0))) if len(traj.norm) else 0.0


# ---------------------------------------------------------------------------
# randomness / revival presets
# ---------------------------------------------------------------------------

DECAYS = "decays"
OSCILLATES_COS2 = "oscillates-cos2"
PARTIAL_REVIVALS = "partial-revivals"
BOUNDED_BELOW = "bounded-below"
STRONG_REVIVALS = "strong-revivals"

REVIVAL_KINDS = (
    "full-random",
    "degenerate-resonant",
    "degenerate-detuned",
    "equal-couplings",
    "narrow",
)


@dataclass(frozen=True)
class ExpectedBehavior:
    """Machine-checkable expectation attached to a revival preset."""

    behavior: str
    detail: str = ""


def revival_variant_patch(
    kind: str,
    *,
    omega_fix: float | None = None,
    width: float = 0.3,
    internal_couplings: bool = False,
) -> tuple[dict, ExpectedBehavior]:
    """Spec-field updates + expected behavior for one randomness variant."""
    if kind not in REVIVAL_KINDS:
        raise ValueError(f"unknown revival preset kind {kind!r}; choose from {REVIVAL_KINDS}")
    if kind == "full-random":
        return {}, ExpectedBehavior(DECAYS, "uniform frequencies and couplings")
    if kind == "degenerate-resonant":
        patch = {"frequency_dist": DEGENERATE, "omega_fix": 1.0}
        if internal_couplings:
            return patch, ExpectedBehavior(DECAYS, "equal energies with internal couplings: fast decay, no revivals")
        return patch, ExpectedBehavior(OSCILLATES_COS2, "collective mode: p = cos^2(Lambda0 t)")
    if kind == "degenerate-detuned":
        of = omega_fix if omega_fix is not None else (0.7 if internal_couplings else 0.4)
        patch = {"frequency_dist": DEGENERATE, "omega_fix": of}
        return patch, ExpectedBehavior(BOUNDED_BELOW, "detuned collective mode: population never vanishes")
    if kind == "equal-couplings":
        patch = {"qubit_coupling_dist": FIXED}
        if internal_couplings:
            patch["internal_coupling_dist"] = FIXED
        return patch, ExpectedBehavior(STRONG_REVIVALS, "no coupling dispersion: coherent revivals")
    # narrow
    return {"width": width}, ExpectedBehavior(PARTIAL_REVIVALS, f"narrow band width {width}")


def revival_preset(
    kind: str,
    *,
    omega_fix: float | None = None,
    width: float = 0.3,
    internal_couplings: bool = False,
    seed: int = 404,
) -> tuple[BathSpec, ExpectedBehavior]:
    """Bath spec + expected qubit behavior for the randomness study.

    Without internal couplings the family is N = 1e5, gamma_max = 1e-3
    (rate 0.1 for the fully random 2-wide band); with internal couplings
    N = 1e3, gamma_max = 4e-3, kappa_max = 0.01. ``omega_fix`` applies to
    the degenerate-detuned kind (defaults 0.4, or 0.7 with internal
    couplings); ``width`` to the narrow kind.
    """
    from dataclasses import replace

    if internal_couplings:
        base = BathSpec(n_oscillators=1_000, gamma_max=4e-3, width=2.0,
                        internal_coupling_dist=UNIFORM, kappa_max=0.01, seed=seed)
    else:
        base = BathSpec(n_oscillators=100_000, gamma_max=1e-3, width=2.0, seed=seed)
    patch, expected = revival_variant_patch(
        kind, omega_fix=omega_fix, width=width, internal_couplings=internal_couplings)
    return replace(base, **patch), expected


def check_expectation(traj: Trajectory, real: BathRealization, expected: ExpectedBehavior) -> tuple[bool, str]:
    """Evaluate a revival-preset expectation on a finished trajectory."""
    from .bath import gamma0_of  # local import to avoid cycle confusion

    t = traj.times
    p = traj.p_qubit
    lam0 = lambda0_of(real)

    if expected.behavior == OSCILLATES_COS2:
        err = float(np.max(np.abs(p - np.cos(lam0 * t) ** 2)))
        return err <= 1e-6, f"max |p - cos^2(Lambda0 t)| = {err:.3e}"

    if expected.behavior == BOUNDED_BELOW:
        delta = 1.0 - real.spec.omega_fix
        bound = delta**2 / (delta**2 + 4.0 * lam0**2)
        pmin = float(np.min(p))
        return pmin >= bound - 1e-3, f"min p = {pmin:.6f} vs bound {bound:.6f}"

    if expected.behavior == DECAYS:
        g0 = gamma0_of(real)
        mask = t <= 100.0
        ratio = float(np.max(p[mask] / np.exp(-g0 * t[mask])))
        return ratio <= 2.0, f"max p / exp(-Gamma0 t) = {ratio:.3f} for t <= 100"

    if expected.behavior == PARTIAL_REVIVALS:
        k_min = int(np.argmin(p))
        revival = float(np.max(p[k_min:]) - p[k_min]) if k_min + 1 < len(p) else 0.0
        return revival >= 0.05, f"revival height above first minimum = {revival:.3f}"

    if expected.behavior == STRONG_REVIVALS:
        k_min = int(np.argmin(p))
        late_max = float(np.max(p[k_min:])) if k_min + 1 < len(p) else float(p[-1])
        return late_max >= 0.5, f"post-minimum maximum p = {late_max:.3f}"

    raise ValueError(f"unknown expectation {expected.behavior!r}")
