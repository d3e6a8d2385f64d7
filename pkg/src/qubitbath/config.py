"""Declarative experiment configuration.

Flat UTF-8 ``key = value`` lines with ``#`` comments; keys are
dot-namespaced (``bath.n``, ``grid.dt``, ``hybrid.g_bar``). Unknown keys
are errors. ``preset`` is mandatory and selects the parameter defaults;
every other line overrides one preset value and is re-validated against
the type table below and against the target preset's allowed keys at
resolution time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError
from .presets import get_preset


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_float_list(s: str) -> tuple[float, ...]:
    parts = [p.strip() for p in s.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


def _parse_optional_float(s: str) -> float | None:
    return None if s.strip().lower() in ("none", "auto") else float(s)


def _parse_optional_int(s: str) -> int | None:
    return None if s.strip().lower() in ("none", "auto") else int(s)


#: key -> (parser, value -> config text)
KEY_TYPES: dict[str, tuple] = {
    "preset": (str, str),
    "seed": (int, repr),
    "output_dir": (str, str),
    "emit_overlays": (_parse_bool, lambda v: "true" if v else "false"),
    "emit_checkpoints": (_parse_float_list, lambda v: ",".join(repr(x) for x in v)),
    "bath.n": (int, repr),
    "bath.center": (float, repr),
    "bath.width": (float, repr),
    "bath.gamma0": (float, repr),
    "bath.gamma_max": (float, repr),
    "bath.coupling_dist": (str, str),
    "bath.frequency_dist": (str, str),
    "bath.omega_fix": (float, repr),
    "bath.kappa_dist": (str, str),
    "bath.kappa_mean": (float, repr),
    "bath.kappa_max": (float, repr),
    "bath.partition": (_parse_float_list, lambda v: ",".join(repr(x) for x in v)),
    "bath.kappa_n_limit": (int, repr),
    "bath.variant": (str, str),
    "grid.t_end": (float, repr),
    "grid.dt": (_parse_optional_float, lambda v: "auto" if v is None else repr(v)),
    "grid.sample_stride": (_parse_optional_int, lambda v: "auto" if v is None else repr(v)),
    "hybrid.g_bar": (float, repr),
    "hybrid.detuning": (float, repr),
    "hybrid.r": (float, repr),
    "hybrid.gamma0": (float, repr),
    "fit.window_lo": (float, repr),
    "fit.window_hi": (float, repr),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """A preset name plus the user's typed overrides."""

    preset: str
    overrides: dict = field(default_factory=dict)

    def validate(self) -> None:
        preset = get_preset(self.preset)   # raises for unknown preset
        for key in self.overrides:
            if key not in KEY_TYPES:
                raise ConfigError(f"unknown key {key!r}")
            if key != "preset" and key not in preset.allowed_keys:
                raise ConfigError(f"key {key!r} is not valid for preset {self.preset!r}")

    def resolved(self) -> dict:
        """Preset defaults merged with the overrides (flat key space)."""
        self.validate()
        merged = dict(get_preset(self.preset).defaults)
        merged.update(self.overrides)
        return merged


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat config format into an :class:`ExperimentConfig`."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in KEY_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        parser, _ = KEY_TYPES[key]
        try:
            values[key] = parser(val)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc

    preset = values.pop("preset", None)
    if preset is None:
        raise ConfigError("missing preset")
    cfg = ExperimentConfig(preset=str(preset), overrides=values)
    cfg.validate()
    return cfg


def render_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config`: parse(render(cfg)) == cfg."""
    lines = [f"preset = {cfg.preset}"]
    for key in sorted(cfg.overrides):
        _, fmt = KEY_TYPES[key]
        lines.append(f"{key} = {fmt(cfg.overrides[key])}")
    return "\n".join(lines) + "\n"


def load_config(path) -> ExperimentConfig:
    from pathlib import Path

    return parse_config(Path(path).read_text(encoding="utf-8"))
