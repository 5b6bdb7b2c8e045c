"""Run configuration: a validated dataclass plus a line-oriented text format.

The on-disk format is `section.key = value`, one setting per line, with `#`
comments and blank lines ignored.  Lists are comma-separated.  Unknown keys
are rejected with a message naming the offending key.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    """Everything a run needs, with validated defaults.

    The `key` metadata ties each field to its `section.key` name in the
    text format.
    """

    preset: str = "quarter_circle"
    levels: int = 3
    mode: str = "uniform"  # uniform | predefined | adaptive
    output: str = "out"
    strip_kind: str = "thbox"  # fixed | hbox | thbox | removal
    variant: str = "thbox"  # hbox | thbox
    method: str = "auto"  # auto | schur | monolithic
    eta: float | None = None
    paper_literal_signs: bool = False
    smoothing_width: float = 3.0  # boundary-data ramp width, in finest h
    threshold_kind: str = "maxfrac"  # maxfrac | absolute | quantile
    threshold_value: float = 0.5
    interior_marking: bool = True  # skip boundary-touching cells when marking
    reference_levels: int | None = None  # default: levels + 2
    sample_levels: int = 2  # error-sampling grid density
    svg: bool = False
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.levels < 1:
            raise ConfigError("run.levels must be >= 1")
        if self.mode not in ("uniform", "predefined", "adaptive"):
            raise ConfigError(f"unknown run.mode: {self.mode}")
        if self.strip_kind not in ("fixed", "hbox", "thbox", "removal"):
            raise ConfigError(f"unknown strip.kind: {self.strip_kind}")
        if self.variant not in ("hbox", "thbox"):
            raise ConfigError(f"unknown basis.variant: {self.variant}")
        if self.method not in ("auto", "schur", "monolithic"):
            raise ConfigError(f"unknown solver.method: {self.method}")
        if self.threshold_kind not in ("maxfrac", "absolute", "quantile"):
            raise ConfigError(f"unknown adapt.threshold: {self.threshold_kind}")
        if self.smoothing_width <= 0:
            raise ConfigError("weakbc.smoothing_width must be > 0")
        if self.sample_levels < 0:
            raise ConfigError("run.sample_levels must be >= 0")
        if self.reference_levels is not None and self.reference_levels < 1:
            raise ConfigError("reference.levels must be >= 1")

    @property
    def threshold_rule(self):
        return (self.threshold_kind, self.threshold_value)

    def effective_reference_levels(self) -> int:
        if self.reference_levels is not None:
            return self.reference_levels
        return self.levels + 2


# text-format key <-> field name
_KEYS = {
    "run.preset": ("preset", str),
    "run.levels": ("levels", int),
    "run.mode": ("mode", str),
    "run.output": ("output", str),
    "run.sample_levels": ("sample_levels", int),
    "run.svg": ("svg", _bool),
    "run.seed": ("seed", int),
    "strip.kind": ("strip_kind", str),
    "basis.variant": ("variant", str),
    "solver.method": ("method", str),
    "weakbc.eta": ("eta", float),
    "weakbc.paper_literal_signs": ("paper_literal_signs", _bool),
    "weakbc.smoothing_width": ("smoothing_width", float),
    "adapt.threshold": ("threshold_kind", str),
    "adapt.threshold_value": ("threshold_value", float),
    "adapt.interior_only": ("interior_marking", _bool),
    "reference.levels": ("reference_levels", int),
}
_FIELD_TO_KEY = {f: k for k, (f, _) in _KEYS.items()}


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse the line-oriented text format into a RunConfig.

    `overrides` (field name -> value) take precedence; used for CLI flags.
    """
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key: {key}")
        fname, conv = _KEYS[key]
        try:
            values[fname] = conv(val)
        except ConfigError:
            raise
        except ValueError:
            raise ConfigError(
                f"line {lineno}: bad value for {key}: {val!r}"
            ) from None
    if overrides:
        for fname, val in overrides.items():
            if val is not None:
                values[fname] = val
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, overrides)


def serialize_config(cfg: RunConfig) -> str:
    """Render the effective configuration; parsing it back round-trips."""
    lines = []
    for f in fields(cfg):
        key = _FIELD_TO_KEY.get(f.name)
        if key is None:
            continue
        val = getattr(cfg, f.name)
        if val is None:
            continue
        if isinstance(val, bool):
            val = "true" if val else "false"
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{key} = {val}")
    return "\n".join(sorted(lines)) + "\n"
