"""Run configuration: `key = value` text with '#' comments.

Every key has a type, a default and a range. Unknown keys, bad types and
out-of-range values are hard errors that name the offending line.
"""

import hashlib
from dataclasses import asdict, dataclass, fields

from .errors import ConfigError, ConfigTypeError, RangeError, UnknownKey

COMMANDS = ("verify", "flow", "soliton", "taylor-check", "spin7-verify")


def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _one_of(*options):
    def check(x):
        return x in options

    check.options = options
    return check


_RULES = {
    "command": _one_of(*COMMANDS),
    "N": lambda n: n >= 8 and n % 2 == 0,
    "k": lambda k: 1 <= k <= 3,
    "scheme": _one_of("central-4th", "spectral"),
    "family": _one_of("flat", "frame"),
    "epsilon": _nonneg,
    "seed": _nonneg,
    "dt": _positive,
    "t_end": _nonneg,
    "integrator": _one_of("RK4", "Euler"),
    "monitor_stride": lambda n: n >= 1,
    "snapshot_stride": _nonneg,
    "lambda_abort": _positive,
    "tolerance": _positive,
    "lam": lambda x: True,
    "Y": lambda x: True,
    "potential_amplitude": lambda x: True,
    "samples": lambda n: n >= 1,
    "target": _one_of("g2", "psi", "spin7"),
}

_RANGE_TEXT = {
    "N": "an even integer >= 8",
    "k": "1, 2 or 3",
    "epsilon": ">= 0",
    "seed": ">= 0",
    "dt": "> 0",
    "t_end": ">= 0",
    "monitor_stride": ">= 1",
    "snapshot_stride": ">= 0",
    "lambda_abort": "> 0",
    "tolerance": "> 0",
    "samples": ">= 1",
}


@dataclass(frozen=True)
class RunConfig:
    command: str = "verify"
    N: int = 16
    k: int = 1
    scheme: str = "central-4th"
    family: str = "frame"
    epsilon: float = 0.05
    seed: int = 0
    dt: float = 1e-3
    t_end: float = 1e-2
    integrator: str = "RK4"
    monitor_stride: int = 1
    snapshot_stride: int = 0
    lambda_abort: float = 1e6
    residuals: str = ""
    tolerance: float = 1e-10
    lam: float = 0.0
    Y: str = ""
    potential_amplitude: float = 0.0
    samples: int = 200
    target: str = "g2"

    def residual_names(self):
        return tuple(r.strip() for r in self.residuals.split(",") if r.strip())

    def Y_vector(self):
        """Constant vector field from the comma list, padded with zeros."""
        vals = [float(v) for v in self.Y.split(",") if v.strip()]
        return tuple(vals)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key, raw, lineno):
    typ = _TYPES[key]
    try:
        if typ is int:
            if raw.strip().lower() in ("true", "false"):
                raise ValueError
            return int(raw)
        if typ is float:
            return float(raw)
    except ValueError:
        raise ConfigTypeError(f"line {lineno}: {key} expects {typ.__name__}, got {raw!r}") from None
    return raw


def _validate(key, value, lineno):
    rule = _RULES.get(key)
    if rule is not None and not rule(value):
        want = _RANGE_TEXT.get(key) or "one of " + ", ".join(getattr(rule, "options", ()))
        raise RangeError(f"line {lineno}: {key} = {value!r} out of range ({want})")
    if key == "Y" and value:
        try:
            vals = [float(v) for v in value.split(",")]
        except ValueError:
            raise ConfigTypeError(f"line {lineno}: Y expects comma-separated floats") from None
        if len(vals) > 7:
            raise RangeError(f"line {lineno}: Y has more than 7 components")


def parse_config(text: str) -> RunConfig:
    values = {}
    seen = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (p.strip() for p in body.split("=", 1))
        if key not in _TYPES:
            raise UnknownKey(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: {key} already set on line {seen[key]}")
        seen[key] = lineno
        value = _convert(key, raw, lineno)
        _validate(key, value, lineno)
        values[key] = value
    cfg = RunConfig(**values)
    if cfg.N**cfg.k > 2**20:
        raise RangeError(f"line {seen.get('N', 0)}: grid N^k exceeds 2^20 points")
    return cfg


def serialize(cfg: RunConfig) -> str:
    lines = []
    for key, value in asdict(cfg).items():
        lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(serialize(cfg).encode("utf-8")).hexdigest()[:16]
