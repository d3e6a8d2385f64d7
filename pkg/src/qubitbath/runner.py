"""Experiment orchestration: resolve a config into concrete specs, run the
propagation, fit rates, check expectations and emit CSV + report files.

All file outputs go under the run's output directory: ``trajectory.csv``
(or ``hybrid_trajectory.csv``), optional ``overlay.csv`` and checkpoint
dumps, and a human-readable ``report.txt``. CSV numbers carry 17
significant digits, so two runs with identical config, seed and worker
count produce byte-identical CSVs. Partial outputs are removed if a run
aborts.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytics, bath, dynamics, hybrid
from .config import ExperimentConfig
from .errors import ConfigError, DegenerateBathError
from .presets import get_preset

_VARIANT_KEY_MAP = {
    "frequency_dist": "bath.frequency_dist",
    "omega_fix": "bath.omega_fix",
    "qubit_coupling_dist": "bath.coupling_dist",
    "internal_coupling_dist": "bath.kappa_dist",
    "width": "bath.width",
}


@dataclass(frozen=True)
class RunPlan:
    """Fully resolved description of one run."""

    preset: str
    mode: str                          # "bath" | "hybrid"
    bath_spec: bath.BathSpec
    grid: dynamics.TimeGrid
    hybrid_spec: hybrid.HybridSpec | None = None
    fit_window: tuple[float, float] | None = None
    expectation: dynamics.ExpectedBehavior | None = None
    emit_overlays: bool = False
    emit_checkpoints: tuple[float, ...] | None = None
    seed: int = 0


@dataclass
class RunReport:
    """Everything a run resolved, measured and wrote."""

    preset: str
    seed: int
    mode: str
    resolved: dict = field(default_factory=dict)
    derived: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    norm_error: float = math.nan
    norm_ok: bool = False
    wall_clock: float = math.nan
    outputs: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.norm_ok


def _require(merged: dict, key: str) -> object:
    if key not in merged or merged[key] is None:
        raise ConfigError(f"preset requires a value for {key!r}")
    return merged[key]


def resolve_plan(cfg: ExperimentConfig) -> RunPlan:
    """Materialize a config into concrete specs, re-validating every value."""
    merged = cfg.resolved()
    preset = get_preset(cfg.preset)
    seed = int(merged.get("seed", 0))

    mode = preset.mode
    if cfg.preset == "custom" and any(k.startswith("hybrid.") for k in cfg.overrides):
        mode = "hybrid"

    expectation = None
    if "bath.variant" in merged:
        internal = merged.get("bath.kappa_dist", "none") != "none"
        patch, expectation = dynamics.revival_variant_patch(
            str(merged["bath.variant"]),
            omega_fix=cfg.overrides.get("bath.omega_fix"),
            internal_couplings=internal,
        )
        for fieldname, value in patch.items():
            key = _VARIANT_KEY_MAP[fieldname]
            if key not in cfg.overrides:   # explicit overrides win over the variant patch
                merged[key] = value

    n = int(_require(merged, "bath.n"))
    width = float(_require(merged, "bath.width"))
    coupling_dist = str(merged.get("bath.coupling_dist", "uniform"))

    if "bath.gamma_max" in merged and merged["bath.gamma_max"] is not None:
        gamma_max = float(merged["bath.gamma_max"])
    elif mode == "hybrid":
        gamma_max = bath.gamma_max_for_target_rate(
            float(_require(merged, "hybrid.gamma0")), n, width, coupling_dist)
    else:
        gamma_max = bath.gamma_max_for_target_rate(
            float(_require(merged, "bath.gamma0")), n, width, coupling_dist)

    kappa_dist = str(merged.get("bath.kappa_dist", "none"))
    kappa_max = 0.0
    if kappa_dist != "none":
        if "bath.kappa_max" in merged and merged["bath.kappa_max"] is not None:
            kappa_max = float(merged["bath.kappa_max"])
        elif "bath.kappa_mean" in merged and merged["bath.kappa_mean"] is not None:
            mean = float(merged["bath.kappa_mean"])
            kappa_max = 2.0 * mean if kappa_dist == "uniform" else mean
        else:
            raise ConfigError("internal couplings enabled but neither bath.kappa_max "
                              "nor bath.kappa_mean given")
        if kappa_max == 0.0:
            kappa_dist = "none"

    bath_spec = bath.BathSpec(
        n_oscillators=n,
        center=float(merged.get("bath.center", 1.0)),
        width=width,
        gamma_max=gamma_max,
        qubit_coupling_dist=coupling_dist,
        frequency_dist=str(merged.get("bath.frequency_dist", "uniform")),
        omega_fix=float(merged.get("bath.omega_fix", 1.0)),
        internal_coupling_dist=kappa_dist,
        kappa_max=kappa_max,
        seed=seed,
        partition=tuple(merged.get("bath.partition", (1.0,))),
        kappa_n_limit=int(merged.get("bath.kappa_n_limit", bath.DEFAULT_KAPPA_N_LIMIT)),
    )
    bath_spec.validate()

    hybrid_spec = None
    if mode == "hybrid":
        if "hybrid.detuning" in merged and "hybrid.r" in merged:
            if abs(float(merged["hybrid.r"]) - 1.0 - float(merged["hybrid.detuning"])) > 1e-12:
                raise ConfigError("hybrid.r and hybrid.detuning are inconsistent; give one")
        if "hybrid.r" in merged and "hybrid.detuning" not in merged:
            r = float(merged["hybrid.r"])
        else:
            r = 1.0 + float(merged.get("hybrid.detuning", 0.0))
        hybrid_spec = hybrid.HybridSpec(r=r, g_bar=float(merged.get("hybrid.g_bar", 0.0)),
                                        bath=bath_spec)
        hybrid_spec.validate()

    grid = dynamics.TimeGrid(
        t_end=float(_require(merged, "grid.t_end")),
        dt=merged.get("grid.dt"),
        sample_stride=merged.get("grid.sample_stride"),
    )
    grid.validate()

    fit_window = None
    if merged.get("fit.window_lo") is not None and merged.get("fit.window_hi") is not None:
        fit_window = (float(merged["fit.window_lo"]), float(merged["fit.window_hi"]))

    checkpoints = merged.get("emit_checkpoints")
    return RunPlan(
        preset=cfg.preset,
        mode=mode,
        bath_spec=bath_spec,
        grid=grid,
        hybrid_spec=hybrid_spec,
        fit_window=fit_window,
        expectation=expectation,
        emit_overlays=bool(merged.get("emit_overlays", False)),
        emit_checkpoints=tuple(checkpoints) if checkpoints else None,
        seed=seed,
    )


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _write_trajectory_csv(path: Path, traj: dynamics.Trajectory) -> None:
    k = traj.n_baths
    header = "t,p_qubit,norm," + ",".join(f"E_bath_{i + 1}" for i in range(k))
    with path.open("w", encoding="utf-8", newline="\n") as f:
        f.write(header + "\n")
        for i in range(len(traj.times)):
            row = [traj.times[i], traj.p_qubit[i], traj.norm[i], *traj.energies[i]]
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _write_hybrid_csv(path: Path, traj: hybrid.HybridTrajectory,
                      eig: hybrid.HybridEigensystem | None, gamma0: float) -> None:
    header = "t,p_qubit,p_cavity,rho11_tilde,rho22_tilde,rho11_master,rho22_master,norm"
    if eig is not None:
        r11m, r22m, _ = hybrid.global_populations(eig, gamma0, traj.times)
    else:
        r11m = r22m = np.zeros_like(traj.times)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        f.write(header + "\n")
        for i in range(len(traj.times)):
            row = [traj.times[i], traj.p_qubit[i], traj.p_cavity[i],
                   traj.rho11_tilde[i], traj.rho22_tilde[i], r11m[i], r22m[i], traj.norm[i]]
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _write_overlay_csv(path: Path, times: np.ndarray, params: analytics.DecayLawParams) -> None:
    cols = analytics.overlay_laws(times, params)
    names = list(cols)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        f.write("t," + ",".join(names) + "\n")
        for i in range(len(times)):
            f.write(",".join([_fmt(times[i])] + [_fmt(cols[n][i]) for n in names]) + "\n")


def _write_checkpoints(out_dir: Path, states: list[dynamics.AmplitudeState]) -> list[Path]:
    paths = []
    for k, st in enumerate(states):
        p = out_dir / f"checkpoint_{k:03d}.csv"
        with p.open("w", encoding="utf-8", newline="\n") as f:
            f.write(f"# t = {_fmt(st.t)}\n")
            f.write("index,re,im\n")
            for i, amp in enumerate(st.amplitudes):
                f.write(f"{i},{_fmt(amp.real)},{_fmt(amp.imag)}\n")
        paths.append(p)
    return paths


def _report_lines(report: RunReport) -> list[str]:
    lines = [f"run report: preset {report.preset} (mode {report.mode}, seed {report.seed})", ""]
    lines.append("[resolved]")
    for k in sorted(report.resolved):
        lines.append(f"  {k} = {report.resolved[k]}")
    lines.append("")
    lines.append("[derived]")
    for k, v in report.derived.items():
        lines.append(f"  {k} = {v}")
    lines.append("")
    if report.fits:
        lines.append("[fits]")
        for name, f in report.fits.items():
            lines.append(f"  {name}: rate = {f.rate:.8g} over t in [{f.window[0]:g}, {f.window[1]:g}], "
                         f"residual = {f.residual:.3g}, samples = {f.n_samples}")
        lines.append("")
    if report.verdicts:
        lines.append("[verdicts]")
        for name, v in report.verdicts.items():
            lines.append(f"  {name}: {v}")
        lines.append("")
    lines.append("[diagnostics]")
    lines.append(f"  max |norm^2 - 1| = {report.norm_error:.3e} "
                 f"({'pass' if report.norm_ok else 'FAIL'})")
    lines.append(f"  wall clock = {report.wall_clock:.2f} s")
    lines.append("")
    lines.append("[outputs]")
    for p in report.outputs:
        lines.append(f"  {p}")
    return lines


def run(
    cfg: ExperimentConfig,
    out_dir: str | Path,
    *,
    seed: int | None = None,
    threads: int | None = None,
    norm_tol: float = dynamics.DEFAULT_NORM_TOL,
) -> RunReport:
    """Execute one configured run and write its outputs under ``out_dir``.

    Deterministic for fixed config + seed + thread count. Raises the
    underlying error after removing partial outputs if the run aborts.
    """
    if seed is not None:
        cfg = ExperimentConfig(cfg.preset, {**cfg.overrides, "seed": int(seed)})
    plan = resolve_plan(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    report = RunReport(preset=plan.preset, seed=plan.seed, mode=plan.mode,
                       resolved=cfg.resolved())
    created: list[Path] = []
    t_start = time.perf_counter()
    try:
        if plan.mode == "bath":
            _run_bath(plan, out, report, created, threads, norm_tol)
        else:
            _run_hybrid(plan, out, report, created, threads, norm_tol)
    except BaseException:
        for p in created:
            p.unlink(missing_ok=True)
        raise
    report.wall_clock = time.perf_counter() - t_start

    rpt = out / "report.txt"
    rpt.write_text("\n".join(_report_lines(report)) + "\n", encoding="utf-8")
    report.outputs.append(str(rpt))
    return report


def _derived_bath_params(real: bath.BathRealization) -> dict:
    derived = {"lambda0": bath.lambda0_of(real)}
    try:
        g0 = bath.gamma0_of(real)
        derived["gamma0_empirical"] = g0
        derived["nu0"] = bath.nu0_of(real)
        if real.spec.width > g0 > 0:
            derived["crossover_t0"] = analytics.crossover_time(g0, real.spec.width)
    except DegenerateBathError:
        derived["gamma0_empirical"] = None
    return derived


def _run_bath(plan: RunPlan, out: Path, report: RunReport, created: list[Path],
              threads: int | None, norm_tol: float) -> None:
    real = bath.sample_bath(plan.bath_spec)
    report.derived.update(_derived_bath_params(real))

    traj = dynamics.evolve(
        real, plan.grid,
        workers=threads, norm_tol=norm_tol,
        checkpoint_times=list(plan.emit_checkpoints) if plan.emit_checkpoints else None,
    )
    report.derived["dt"] = traj.meta["dt"]
    report.derived["n_steps"] = traj.meta["n_steps"]
    report.derived["workers"] = traj.meta["workers"]
    report.norm_error = dynamics.norm_error(traj)
    report.norm_ok = report.norm_error <= norm_tol

    csv_path = out / "trajectory.csv"
    _write_trajectory_csv(csv_path, traj)
    created.append(csv_path)
    report.outputs.append(str(csv_path))

    if plan.emit_overlays and report.derived.get("gamma0_empirical") is not None:
        params = analytics.DecayLawParams.from_realization(real)
        ov = out / "overlay.csv"
        _write_overlay_csv(ov, traj.times, params)
        created.append(ov)
        report.outputs.append(str(ov))

    if traj.checkpoints:
        for p in _write_checkpoints(out, traj.checkpoints):
            created.append(p)
            report.outputs.append(str(p))

    if plan.expectation is not None:
        ok, detail = dynamics.check_expectation(traj, real, plan.expectation)
        report.verdicts[f"expectation ({plan.expectation.behavior})"] = \
            f"{'pass' if ok else 'FAIL'} - {detail}"

    decaying = plan.expectation is None or plan.expectation.behavior == dynamics.DECAYS
    if plan.fit_window is not None and decaying:
        try:
            report.fits["p_qubit"] = analytics.fit_decay_rate(traj, plan.fit_window)
        except ValueError as exc:
            report.verdicts["rate fit"] = f"skipped ({exc})"

    if traj.n_baths > 1:
        e_final = traj.energies[-1]
        tot = float(e_final.sum())
        if tot > 0:
            report.derived["final_energy_fractions"] = [float(e / tot) for e in e_final]


def _run_hybrid(plan: RunPlan, out: Path, report: RunReport, created: list[Path],
                threads: int | None, norm_tol: float) -> None:
    spec = plan.hybrid_spec
    assert spec is not None
    real = bath.sample_bath(spec.bath)
    report.derived.update(_derived_bath_params(real))
    g0 = report.derived.get("gamma0_empirical") or 0.0

    eig = None
    if spec.g_bar or spec.detuning:
        eig = hybrid.hybrid_eigensystem(spec.g_bar, spec.detuning)
        report.derived["dressed_energies"] = (eig.eps1, eig.eps2)
        report.derived["dressed_weights_beta2_delta2"] = (eig.beta**2, eig.delta**2)
        rates = hybrid.global_rates(eig, g0)
        report.derived["global_rates"] = (rates.down_1, rates.down_2)
        if spec.detuning != 0.0:
            lr = hybrid.local_rate(spec.g_bar, spec.detuning, g0)
            report.derived["local_rate"] = lr.value
            report.derived["local_rate_valid"] = lr.valid

    traj = hybrid.evolve_hybrid(spec, plan.grid, realization=real,
                                workers=threads, norm_tol=norm_tol)
    report.derived["dt"] = traj.meta["dt"]
    report.derived["n_steps"] = traj.meta["n_steps"]
    report.derived["workers"] = traj.meta["workers"]
    report.norm_error = float(np.max(np.abs(traj.norm**2 - 1.0)))
    report.norm_ok = report.norm_error <= norm_tol

    csv_path = out / "hybrid_trajectory.csv"
    _write_hybrid_csv(csv_path, traj, eig, g0)
    created.append(csv_path)
    report.outputs.append(str(csv_path))

    if g0 == 0.0:
        drift11 = float(np.max(np.abs(traj.rho11_tilde - traj.rho11_tilde[0])))
        drift22 = float(np.max(np.abs(traj.rho22_tilde - traj.rho22_tilde[0])))
        ok = drift11 <= 1e-8 and drift22 <= 1e-8
        report.verdicts["isolated dressed populations constant"] = \
            f"{'pass' if ok else 'FAIL'} - max drift {max(drift11, drift22):.3e}"
    elif plan.fit_window is not None:
        for name in ("rho11_tilde", "rho22_tilde", "p_qubit"):
            try:
                report.fits[name] = analytics.fit_decay_rate(traj, plan.fit_window, name)
            except ValueError as exc:
                report.verdicts[f"rate fit {name}"] = f"skipped ({exc})"
