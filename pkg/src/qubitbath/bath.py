"""Oscillator-bath definition, sampling and characterization.

Units: hbar = 1 and the reference splitting (qubit splitting for direct
qubit-bath runs, cavity splitting for hybrid runs) = 1. All frequencies,
couplings and rates are expressed in these units.

A bath is described statistically by a :class:`BathSpec` and realized as one
concrete draw, a :class:`BathRealization`, holding the mode frequencies
``omegas``, the qubit couplings ``gammas``, optional symmetric internal
couplings ``kappas`` and per-mode bath labels for multi-bath runs.

Randomness: a single 64-bit seed feeds ``numpy.random.SeedSequence``, which
is split into three independent substreams (frequencies, qubit couplings,
internal couplings, in that order) driving PCG64 generators. Enabling or
disabling internal couplings therefore never changes the frequency or
coupling draws. Internal couplings are drawn row-major over the strict upper
triangle and mirrored.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateBathError, MemoryGuardError

UNIFORM = "uniform"
FIXED = "fixed"
DEGENERATE = "degenerate"
NONE = "none"

COUPLING_DISTS = (UNIFORM, FIXED)
FREQUENCY_DISTS = (UNIFORM, DEGENERATE)
INTERNAL_DISTS = (NONE, UNIFORM, FIXED)

#: Default cap on N for dense internal-coupling matrices (O(N^2) storage).
DEFAULT_KAPPA_N_LIMIT = 20_000


@dataclass(frozen=True)
class BathSpec:
    """Statistical description of an oscillator bath.

    ``center`` and ``width`` define the uniform frequency support
    ``[center - width/2, center + width/2]``; with ``frequency_dist ==
    "degenerate"`` every mode sits exactly at ``omega_fix`` instead.
    Couplings are uniform on ``[0, gamma_max]`` or fixed at ``gamma_max``;
    internal couplings likewise with ``kappa_max``, or absent.
    ``partition`` lists the fraction of modes belonging to each (mutually
    uncoupled) sub-bath.
    """

    n_oscillators: int
    center: float = 1.0
    width: float = 1.0
    gamma_max: float = 0.0
    qubit_coupling_dist: str = UNIFORM
    frequency_dist: str = UNIFORM
    omega_fix: float = 1.0
    internal_coupling_dist: str = NONE
    kappa_max: float = 0.0
    seed: int = 0
    partition: tuple[float, ...] = (1.0,)
    kappa_n_limit: int = DEFAULT_KAPPA_N_LIMIT

    def validate(self) -> None:
        if self.n_oscillators < 0:
            raise ValueError(f"n_oscillators must be >= 0, got {self.n_oscillators}")
        if self.width < 0:
            raise ValueError(f"width must be >= 0, got {self.width}")
        if self.gamma_max < 0:
            raise ValueError(f"gamma_max must be >= 0, got {self.gamma_max}")
        if self.kappa_max < 0:
            raise ValueError(f"kappa_max must be >= 0, got {self.kappa_max}")
        if self.qubit_coupling_dist not in COUPLING_DISTS:
            raise ValueError(f"unknown qubit_coupling_dist {self.qubit_coupling_dist!r}")
        if self.frequency_dist not in FREQUENCY_DISTS:
            raise ValueError(f"unknown frequency_dist {self.frequency_dist!r}")
        if self.internal_coupling_dist not in INTERNAL_DISTS:
            raise ValueError(f"unknown internal_coupling_dist {self.internal_coupling_dist!r}")
        fr = np.asarray(self.partition, dtype=float)
        if fr.ndim != 1 or len(fr) == 0:
            raise ValueError("partition must be a non-empty sequence of fractions")
        if np.any(fr < 0) or np.any(fr > 1):
            raise ValueError(f"partition fractions must lie in [0, 1], got {self.partition}")
        if abs(fr.sum() - 1.0) > 1e-12:
            raise ValueError(f"partition fractions must sum to 1 within 1e-12, got sum {fr.sum()!r}")

    @property
    def n_baths(self) -> int:
        return len(self.partition)


@dataclass(frozen=True)
class CircuitParams:
    """Physical circuit parameters of a resistor bath coupled to a qubit.

    ``r`` is the bath resistance, ``z_q`` the qubit impedance, ``c_g`` the
    coupling capacitance and ``c_q`` the qubit capacitance (``c_sigma =
    c_g + c_q``). ``z_0`` and ``q_factor`` describe the cavity in hybrid
    setups (quality factor Q = z_0 / r).
    """

    r: float = 0.0
    z_q: float = 1.0
    c_g: float = 1.0
    c_q: float = 0.0
    z_0: float = 0.0
    q_factor: float = 0.0

    def validate(self) -> None:
        for name in ("r", "z_q", "c_g", "c_q", "z_0", "q_factor"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    @property
    def c_sigma(self) -> float:
        return self.c_g + self.c_q


@dataclass(frozen=True)
class BathRealization:
    """One concrete sampled bath, in canonical ascending-frequency order.

    ``kappas`` is either ``None`` or the full symmetric N x N matrix with
    zero diagonal. ``labels[i]`` gives the sub-bath index of mode i; labels
    are assigned to contiguous blocks of the draw order (so every sub-bath
    is an iid sample of the same distributions) and then reordered together
    with the frequencies.
    """

    omegas: np.ndarray
    gammas: np.ndarray
    labels: np.ndarray
    spec: BathSpec
    kappas: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.omegas)

    def validate(self) -> None:
        spec = self.spec
        if not (len(self.omegas) == len(self.gammas) == len(self.labels) == spec.n_oscillators):
            raise ValueError("realization arrays inconsistent with spec.n_oscillators")
        if np.any(np.diff(self.omegas) < 0):
            raise ValueError("omegas must be ascending")
        if spec.frequency_dist == UNIFORM:
            lo, hi = spec.center - spec.width / 2, spec.center + spec.width / 2
            if self.n and (self.omegas[0] < lo or self.omegas[-1] > hi):
                raise ValueError("omegas outside the spec frequency support")
        else:
            if self.n and not np.all(self.omegas == spec.omega_fix):
                raise ValueError("degenerate bath has off-omega_fix frequencies")
        if np.any(self.gammas < 0) or np.any(self.gammas > spec.gamma_max * (1 + 1e-15)):
            raise ValueError("gammas outside [0, gamma_max]")
        if self.kappas is not None:
            k = self.kappas
            if k.shape != (self.n, self.n):
                raise ValueError("kappas must be N x N")
            if np.any(np.diagonal(k) != 0.0):
                raise ValueError("kappas diagonal must be zero")
            if not np.array_equal(k, k.T):
                raise ValueError("kappas must be symmetric")


def _partition_counts(n: int, fractions: tuple[float, ...]) -> np.ndarray:
    """Split n into integer block sizes matching the fractions.

    Largest-remainder rounding; ties broken toward the lowest bath index so
    the outcome is deterministic.
    """
    fr = np.asarray(fractions, dtype=float)
    ideal = fr * n
    counts = np.floor(ideal).astype(int)
    rem = int(n - counts.sum())
    if rem:
        order = np.lexsort((np.arange(len(fr)), -(ideal - counts)))
        counts[order[:rem]] += 1
    return counts


def sample_bath(spec: BathSpec) -> BathRealization:
    """Draw one bath realization from a spec.

    Deterministic: identical (spec, seed) gives a bit-identical realization.
    Oscillators are stored in ascending frequency order; couplings and
    labels travel with their mode through the sort.
    """
    spec.validate()
    n = spec.n_oscillators
    with_kappa = spec.internal_coupling_dist != NONE
    if with_kappa and n > spec.kappa_n_limit:
        raise MemoryGuardError(
            f"dense internal couplings need {n}x{n} storage; refusing above the "
            f"guard of N = {spec.kappa_n_limit} (raise kappa_n_limit to override)"
        )

    ss = np.random.SeedSequence(spec.seed)
    seq_omega, seq_gamma, seq_kappa = ss.spawn(3)

    rng_omega = np.random.Generator(np.random.PCG64(seq_omega))
    if spec.frequency_dist == UNIFORM:
        omegas = spec.center - spec.width / 2 + spec.width * rng_omega.random(n)
    else:
        omegas = np.full(n, float(spec.omega_fix))

    rng_gamma = np.random.Generator(np.random.PCG64(seq_gamma))
    if spec.qubit_coupling_dist == UNIFORM:
        gammas = spec.gamma_max * rng_gamma.random(n)
    else:
        gammas = np.full(n, float(spec.gamma_max))

    labels = np.repeat(np.arange(spec.n_baths), _partition_counts(n, spec.partition))

    order = np.argsort(omegas, kind="stable")
    omegas = np.ascontiguousarray(omegas[order])
    gammas = np.ascontiguousarray(gammas[order])
    labels = np.ascontiguousarray(labels[order])

    kappas = None
    if with_kappa:
        rng_kappa = np.random.Generator(np.random.PCG64(seq_kappa))
        draws = rng_kappa.random(n * (n - 1) // 2)
        if spec.internal_coupling_dist == UNIFORM:
            vals = spec.kappa_max * draws
        else:
            vals = np.full_like(draws, float(spec.kappa_max))
        kappas = np.zeros((n, n))
        iu = np.triu_indices(n, k=1)
        kappas[iu] = vals
        kappas += kappas.T
        if spec.n_baths > 1:
            # sub-baths are mutually uncoupled: zero the cross-bath entries
            same = labels[:, None] == labels[None, :]
            kappas *= same

    real = BathRealization(omegas=omegas, gammas=gammas, labels=labels, spec=spec, kappas=kappas)
    real.validate()
    return real


def gamma0_of(real: BathRealization) -> float:
    """Weak-coupling decay rate of the qubit into this bath.

    Uses the empirical second moment of the sampled couplings with the mode
    density nu0 = N / width: Gamma0 = 2 pi nu0 <gamma^2> = 2 pi sum(gamma^2)
    / width.
    """
    spec = real.spec
    if spec.frequency_dist == DEGENERATE or spec.width == 0:
        raise DegenerateBathError(
            "bath has no spectral width: there is no decay rate; the qubit "
            "oscillates as cos^2(Lambda0 t) with Lambda0 = lambda0_of(real)"
        )
    return 2.0 * math.pi * float(np.dot(real.gammas, real.gammas)) / spec.width


def lambda0_of(real: BathRealization) -> float:
    """Collective coupling frequency Lambda0 = sqrt(sum gamma_i^2)."""
    return math.sqrt(float(np.dot(real.gammas, real.gammas)))


def nu0_of(real: BathRealization) -> float:
    """Mode density nu0 = N / width."""
    spec = real.spec
    if spec.frequency_dist == DEGENERATE or spec.width == 0:
        raise DegenerateBathError("mode density undefined for a zero-width bath")
    return real.n / spec.width


def gamma_max_for_target_rate(gamma0_target: float, n: int, width: float, dist: str = UNIFORM) -> float:
    """Coupling scale that makes the sampled bath decay at gamma0_target.

    Inverts the rate formula for the coupling distribution's second moment:
    uniform couplings have <gamma^2> = gamma_max^2 / 3, fixed couplings
    gamma_max^2.
    """
    if gamma0_target < 0:
        raise ValueError(f"gamma0_target must be >= 0, got {gamma0_target}")
    if n <= 0 or width <= 0:
        raise ValueError(f"need n > 0 and width > 0, got n={n}, width={width}")
    if dist not in COUPLING_DISTS:
        raise ValueError(f"unknown coupling dist {dist!r}")
    moment_factor = 3.0 if dist == UNIFORM else 1.0
    return math.sqrt(moment_factor * gamma0_target * width / (2.0 * math.pi * n))


def couplings_from_circuit(circuit: CircuitParams, omega: float = 1.0, nu0: float = 1.0) -> float:
    """Mean-square qubit-mode coupling of a capacitively coupled resistor.

    <gamma^2> = (c_g / c_sigma)^2 (r / z_q) * omega / (2 pi nu0), with
    hbar = 1. Plugged into the rate formula this gives
    Gamma0 = (c_g/c_sigma)^2 (r/z_q) * omega.
    """
    circuit.validate()
    if circuit.c_sigma <= 0:
        raise ValueError("capacitive divider undefined: c_g + c_q must be > 0")
    if circuit.z_q <= 0:
        raise ValueError("qubit impedance z_q must be > 0")
    if nu0 <= 0:
        raise ValueError("mode density nu0 must be > 0")
    divider = circuit.c_g / circuit.c_sigma
    return divider**2 * (circuit.r / circuit.z_q) * omega / (2.0 * math.pi * nu0)


# ---------------------------------------------------------------------------
# columnar text serialization (for cross-implementation comparison)
#
# Main file: '#'-prefixed metadata lines carrying the generating spec, then a
# header line 'index omega gamma label', then one line per oscillator with
# %.17g floats. Internal couplings go to a companion file as upper-triangle
# triplets 'i j kappa' (nonzero entries only).
# ---------------------------------------------------------------------------

_SPEC_KEYS = (
    "n_oscillators", "center", "width", "gamma_max", "qubit_coupling_dist",
    "frequency_dist", "omega_fix", "internal_coupling_dist", "kappa_max",
    "seed", "kappa_n_limit",
)


def default_kappa_path(path: str | Path) -> Path:
    return Path(path).with_suffix(Path(path).suffix + ".kappa")


def save_realization(real: BathRealization, path: str | Path, kappa_path: str | Path | None = None) -> None:
    """Write a realization to the columnar text format (see module docs)."""
    path = Path(path)
    spec = real.spec
    lines = ["# oscillator bath realization v1"]
    kv = " ".join(f"{k}={getattr(spec, k)!r}" for k in _SPEC_KEYS)
    lines.append(f"# spec {kv}")
    lines.append(f"# partition {','.join(f'{f!r}' for f in spec.partition)}")
    lines.append("index omega gamma label")
    for i in range(real.n):
        lines.append(f"{i} {real.omegas[i]:.17g} {real.gammas[i]:.17g} {real.labels[i]}")
    path.write_text("\n".join(lines) + "\n")

    if real.kappas is not None:
        kp = Path(kappa_path) if kappa_path is not None else default_kappa_path(path)
        klines = ["# internal couplings, strict upper triangle, nonzero entries", "i j kappa"]
        iu, ju = np.nonzero(np.triu(real.kappas, k=1))
        for i, j in zip(iu, ju):
            klines.append(f"{i} {j} {real.kappas[i, j]:.17g}")
        kp.write_text("\n".join(klines) + "\n")


def load_realization(path: str | Path, kappa_path: str | Path | None = None) -> BathRealization:
    """Read a realization written by :func:`save_realization`."""
    path = Path(path)
    spec_kv: dict[str, str] = {}
    partition: tuple[float, ...] = (1.0,)
    rows = []
    for line in path.read_text().splitlines():
        if line.startswith("# spec "):
            for tok in line[len("# spec "):].split():
                k, v = tok.split("=", 1)
                spec_kv[k] = v
        elif line.startswith("# partition "):
            partition = tuple(float(ast.literal_eval(t)) for t in line[len("# partition "):].split(","))
        elif line.startswith("#") or line.startswith("index"):
            continue
        elif line.strip():
            rows.append(line.split())

    def _lit(key):
        return ast.literal_eval(spec_kv[key])  # values written with repr()

    spec = BathSpec(
        n_oscillators=_lit("n_oscillators"), center=_lit("center"), width=_lit("width"),
        gamma_max=_lit("gamma_max"), qubit_coupling_dist=_lit("qubit_coupling_dist"),
        frequency_dist=_lit("frequency_dist"), omega_fix=_lit("omega_fix"),
        internal_coupling_dist=_lit("internal_coupling_dist"), kappa_max=_lit("kappa_max"),
        seed=_lit("seed"), partition=partition, kappa_n_limit=_lit("kappa_n_limit"),
    )
    n = len(rows)
    omegas = np.array([float(r[1]) for r in rows])
    gammas = np.array([float(r[2]) for r in rows])
    labels = np.array([int(r[3]) for r in rows])

    kappas = None
    if spec.internal_coupling_dist != NONE:
        kp = Path(kappa_path) if kappa_path is not None else default_kappa_path(path)
        kappas = np.zeros((n, n))
        for line in kp.read_text().splitlines():
            if line.startswith("#") or line.startswith("i ") or not line.strip():
                continue
            i_s, j_s, v_s = line.split()
            kappas[int(i_s), int(j_s)] = kappas[int(j_s), int(i_s)] = float(v_s)

    real = BathRealization(omegas=omegas, gammas=gammas, labels=labels, spec=spec, kappas=kappas)
    real.validate()
    return real
