"""Experiment preset catalogue.

Each preset carries the parameters of one benchmark scenario in the flat
``key = value`` namespace of the config format, plus a per-parameter
provenance note. Presets keep the scenario's physics (target rate,
bandwidth, couplings, detuning) exact but default the bath size to a
desk-scale N that reproduces the same observables in minutes; the nominal
full-scale N stays available as an override and is listed in the
provenance.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Preset:
    name: str
    mode: str                      # "bath" | "hybrid"
    source: str                    # benchmark/figure tag
    description: str
    defaults: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    allowed_keys: frozenset = frozenset()
    kappa_sweep: tuple[float, ...] | None = None   # catalogue of kappa means
    expected_runtime: str = ""


_TOP_KEYS = frozenset({"preset", "seed", "output_dir", "emit_overlays", "emit_checkpoints"})
_GRID_KEYS = frozenset({"grid.t_end", "grid.dt", "grid.sample_stride"})
_FIT_KEYS = frozenset({"fit.window_lo", "fit.window_hi"})
_BATH_KEYS = frozenset({
    "bath.n", "bath.center", "bath.width", "bath.gamma0", "bath.gamma_max",
    "bath.coupling_dist", "bath.frequency_dist", "bath.omega_fix",
    "bath.kappa_dist", "bath.kappa_mean", "bath.kappa_max", "bath.partition",
    "bath.kappa_n_limit",
})
_HYBRID_KEYS = frozenset({"hybrid.g_bar", "hybrid.detuning", "hybrid.r", "hybrid.gamma0"})

_BATH_ALLOWED = _TOP_KEYS | _GRID_KEYS | _FIT_KEYS | _BATH_KEYS
_DECAYS_ALLOWED = _BATH_ALLOWED | {"bath.variant"}
_HYBRID_ALLOWED = _TOP_KEYS | _GRID_KEYS | _FIT_KEYS | _HYBRID_KEYS | frozenset(
    {"bath.n", "bath.width", "bath.kappa_n_limit"})


PRESETS: dict[str, Preset] = {}


def _register(p: Preset) -> None:
    PRESETS[p.name] = p


_register(Preset(
    name="fig2a",
    mode="bath",
    source="exponential-regime benchmark (figure 2a)",
    description="Qubit decay through Zeno, linear and exponential regimes; "
                "fitted rate matches the target 0.03 and the exponential overlay.",
    defaults={
        "bath.n": 100_000,
        "bath.center": 1.0,
        "bath.width": 1.0,
        "bath.gamma0": 0.03,
        "bath.coupling_dist": "uniform",
        "bath.kappa_dist": "none",
        "grid.t_end": 80.0,
        "grid.dt": 0.25,
        "grid.sample_stride": 2,
        "fit.window_lo": 10.0,
        "fit.window_hi": 60.0,
        "seed": 20,
        "emit_overlays": True,
    },
    provenance={
        "bath.gamma0": "target decay rate 0.03 (benchmark value)",
        "bath.width": "flat band of width 1 around the splitting",
        "bath.kappa_dist": "no internal couplings",
        "bath.n": "desk-scale default 1e5; nominal benchmark size 1e6",
        "fit.window": "rate fitted over t in [10, 60]",
    },
    allowed_keys=_BATH_ALLOWED,
    expected_runtime="seconds",
))

_register(Preset(
    name="fig2b",
    mode="bath",
    source="long-time tail benchmark (figure 2b)",
    description="Crossover from exponential decay to the oscillatory 1/t "
                "amplitude tail; envelope slope and crossover time checks.",
    defaults={
        "bath.n": 100_000,
        "bath.center": 1.0,
        "bath.width": 1.0,
        "bath.gamma0": 0.1,
        "bath.coupling_dist": "uniform",
        "bath.kappa_dist": "none",
        "grid.t_end": 3000.0,
        "grid.dt": 0.125,
        "grid.sample_stride": 8,
        "fit.window_lo": 5.0,
        "fit.window_hi": 50.0,
        "seed": 21,
        "emit_overlays": True,
    },
    provenance={
        "bath.gamma0": "target decay rate 0.1 (benchmark value)",
        "bath.width": "flat band of width 1",
        "grid.t_end": "3000 stays far below the recurrence time 2 pi nu0 ~ 6e5",
        "bath.n": "desk-scale default 1e5",
    },
    allowed_keys=_BATH_ALLOWED,
    expected_runtime="about a minute",
))

_register(Preset(
    name="fig3",
    mode="bath",
    source="internal-coupling benchmark (figure 3)",
    description="Decay slowdown from oscillator-oscillator couplings; one "
                "run per kappa value, sweep list in the catalogue.",
    defaults={
        "bath.n": 3000,
        "bath.center": 1.0,
        "bath.width": 2.0,
        "bath.gamma0": 0.03,
        "bath.coupling_dist": "uniform",
        "bath.kappa_dist": "uniform",
        "bath.kappa_mean": 0.0,
        "grid.t_end": 70.0,
        "grid.dt": None,
        "grid.sample_stride": None,
        "fit.window_lo": 10.0,
        "fit.window_hi": 60.0,
        "seed": 22,
        "emit_overlays": True,
    },
    provenance={
        "bath.gamma0": "uncoupled-bath rate 0.03",
        "bath.width": "flat band of width 2",
        "bath.n": "3000 oscillators (dense coupling matrix)",
        "bath.kappa_mean": "sweep values 0, 5e-5, 7.5e-5, 1.5e-4, 2.5e-4, 5e-4, 1.5e-3",
    },
    allowed_keys=_BATH_ALLOWED,
    kappa_sweep=(0.0, 5e-5, 7.5e-5, 1.5e-4, 2.5e-4, 5e-4, 1.5e-3),
    expected_runtime="seconds to ~2 min per kappa value",
))

_register(Preset(
    name="fig4_multibath",
    mode="bath",
    source="two-bath energy splitting benchmark (figure 4)",
    description="Single quantum splitting between two uncoupled baths in "
                "proportion to their mode counts, with exact energy bookkeeping.",
    defaults={
        "bath.n": 100_000,
        "bath.center": 1.0,
        "bath.width": 1.0,
        "bath.gamma0": 0.084,
        "bath.coupling_dist": "uniform",
        "bath.kappa_dist": "none",
        "bath.partition": (0.3, 0.7),
        "grid.t_end": 80.0,
        "grid.dt": 0.25,
        "grid.sample_stride": 2,
        "fit.window_lo": 10.0,
        "fit.window_hi": 50.0,
        "seed": 23,
        "emit_overlays": False,
    },
    provenance={
        "bath.gamma0": "total decay rate 0.084 into both baths",
        "bath.partition": "3e5 : 7e5 mode split at nominal size 1e6",
        "bath.n": "desk-scale default 1e5 keeping the 3:7 split",
    },
    allowed_keys=_BATH_ALLOWED,
    expected_runtime="seconds",
))

_register(Preset(
    name="fig_decays_a",
    mode="bath",
    source="randomness suite, uncoupled bath (decay-suite figure, panel a)",
    description="Significance of parameter randomness: fully random bath "
                "decays; degenerate or equal-coupling baths revive. Select "
                "lines with bath.variant.",
    defaults={
        "bath.n": 100_000,
        "bath.center": 1.0,
        "bath.width": 2.0,
        "bath.gamma_max": 1e-3,
        "bath.coupling_dist": "uniform",
        "bath.kappa_dist": "none",
        "bath.variant": "full-random",
        "grid.t_end": 100.0,
        "grid.dt": 0.1,
        "grid.sample_stride": 5,
        "seed": 24,
        "emit_overlays": False,
    },
    provenance={
        "bath.gamma_max": "coupling bound 1e-3, giving rate 0.1 for the random band",
        "bath.width": "flat band of width 2 (full-random variant)",
        "bath.variant": "one of full-random, degenerate-resonant, "
                        "degenerate-detuned, equal-couplings, narrow",
    },
    allowed_keys=_DECAYS_ALLOWED,
    expected_runtime="seconds",
))

_register(Preset(
    name="fig_decays_b",
    mode="bath",
    source="randomness suite with internal couplings (decay-suite figure, panel b)",
    description="Same randomness study with oscillator-oscillator couplings: "
                "internal couplings suppress revivals except for fully fixed couplings.",
    defaults={
        "bath.n": 1000,
        "bath.center": 1.0,
        "bath.width": 2.0,
        "bath.gamma_max": 4e-3,
        "bath.coupling_dist": "uniform",
        "bath.kappa_dist": "uniform",
        "bath.kappa_max": 0.01,
        "bath.variant": "full-random",
        "grid.t_end": 100.0,
        "grid.dt": None,
        "grid.sample_stride": None,
        "seed": 25,
        "emit_overlays": False,
    },
    provenance={
        "bath.gamma_max": "coupling bound 4e-3 at N = 1e3",
        "bath.kappa_max": "internal coupling bound 0.01",
        "bath.variant": "see fig_decays_a; detuned default moves to 0.7",
    },
    allowed_keys=_DECAYS_ALLOWED,
    expected_runtime="seconds",
))

_register(Preset(
    name="fig6",
    mode="hybrid",
    source="qubit-cavity-bath crossover benchmark (figure 6)",
    description="Dressed-state decay of the hybrid: isolated (gamma0 = 0), "
                "global (0.01) and local (1.0) regimes; default is the "
                "global regime at detuning -0.25.",
    defaults={
        "hybrid.g_bar": 0.1,
        "hybrid.detuning": -0.25,
        "hybrid.gamma0": 0.01,
        "bath.n": 10_000,
        "bath.width": 2.0,
        "grid.t_end": 300.0,
        "grid.dt": 0.2,
        "grid.sample_stride": 2,
        "fit.window_lo": 50.0,
        "fit.window_hi": 300.0,
        "seed": 26,
        "emit_overlays": False,
    },
    provenance={
        "hybrid.g_bar": "qubit-cavity coupling 0.1 in cavity units",
        "hybrid.detuning": "benchmark detunings -0.25 and -0.1",
        "hybrid.gamma0": "cavity-bath rate: 0 isolated, 0.01 global, 1.0 local",
        "bath.n": "1e4 oscillators over a width-2 band",
    },
    allowed_keys=_HYBRID_ALLOWED,
    expected_runtime="seconds",
))

_register(Preset(
    name="custom",
    mode="bath",
    source="user-defined",
    description="Empty skeleton: every bath/grid parameter must be given "
                "explicitly (or hybrid.* keys to run the hybrid system).",
    defaults={
        "bath.center": 1.0,
        "bath.coupling_dist": "uniform",
        "bath.frequency_dist": "uniform",
        "bath.kappa_dist": "none",
        "seed": 0,
        "emit_overlays": False,
    },
    provenance={},
    allowed_keys=_BATH_ALLOWED | _HYBRID_ALLOWED | {"bath.variant"},
    expected_runtime="depends on parameters",
))


def get_preset(name: str) -> Preset:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return PRESETS[name]


def format_catalogue() -> str:
    """Human-readable preset listing with parameter provenance."""
    lines = []
    for name, p in PRESETS.items():
        lines.append(f"{name} - {p.source}")
        lines.append(f"    {p.description}")
        for key in sorted(p.defaults):
            val = p.defaults[key]
            if val is None:
                continue
            lines.append(f"    {key} = {val}")
        for key, note in p.provenance.items():
            lines.append(f"      [{key}] {note}")
        if p.kappa_sweep is not None:
            lines.append(f"      sweep: bath.kappa_mean in {list(p.kappa_sweep)}")
        lines.append(f"      runtime: {p.expected_runtime}")
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"
