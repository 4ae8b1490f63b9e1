"""Flat ``section.key = value`` experiment configuration."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

from .dispersion import critical_couplings
from .errors import ConfigurationError

SCENARIOS = ("dispersion", "quench", "lightcone", "patches", "phase", "bessel", "spectroscopy", "validate")
FORMATS = ("csv", "json")
PATTERN_ALIASES = {"nn": "nn", "nearest-neighbor": "nn", "nearest_neighbor": "nn", "range": "range", "block": "range"}

# key -> (type, default); a default of ... marks a required key
KEYS = {
    "lattice.dimension": (int, 2),
    "lattice.extent": (int, ...),
    "lattice.pattern": (str, "nn"),
    "lattice.range": (int, 1),
    "quench.U": (float, ...),
    "quench.J": (float, None),
    "quench.epsilon": (float, None),
    "time.t_max": (float, ...),
    "time.samples": (int, ...),
    "scenario": (str, None),
    "output.directory": (str, "out"),
    "output.format": (str, "csv"),
    "lightcone.threshold": (float, None),
    "patches.sides": (str, "2,4,8"),
    "phase.side": (int, 3),
    "phase.max_distance": (int, None),
    "spectroscopy.input": (str, None),
}


@dataclass(frozen=True)
class ExperimentConfig:
    dimension: int
    extent: int
    pattern: str
    range: int
    U: float
    J: float
    epsilon: float | None
    t_max: float
    samples: int
    scenario: str | None
    directory: str
    format: str
    options: dict = field(default_factory=dict)

    def semantic(self) -> dict:
        """Everything that changes results; the output directory does not."""
        d = asdict(self)
        d.pop("directory")
        d.pop("epsilon")  # folded into the resolved J
        d["options"] = {k: v for k, v in sorted(self.options.items()) if v is not None}
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def replace(self, **changes) -> "ExperimentConfig":
        d = asdict(self)
        d.update(changes)
        return ExperimentConfig(**d)


def _convert(key, raw, kind, violations):
    try:
        if kind is int:
            value = float(raw)
            if not value.is_integer():
                raise ValueError
            return int(value)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        violations.append(f"{key}: cannot parse {raw!r} as {kind.__name__}")
        return None


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate; every violation is reported together."""
    violations = []
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            violations.append(f"line {lineno}: expected 'key = value'")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        value = value.strip("'\"")
        if key not in KEYS:
            violations.append(f"unknown key {key!r}")
            continue
        if key in raw:
            violations.append(f"duplicate key {key!r}")
        raw[key] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = str(value)

    values = {}
    for key, (kind, default) in KEYS.items():
        if key in raw:
            values[key] = _convert(key, raw[key], kind, violations)
        elif default is ...:
            violations.append(f"missing required key {key!r}")
            values[key] = None
        else:
            values[key] = default

    J, eps = values["quench.J"], values["quench.epsilon"]
    if "quench.J" in raw and "quench.epsilon" in raw:
        violations.append("set exactly one of quench.J and quench.epsilon, not both")
    elif "quench.J" not in raw and "quench.epsilon" not in raw:
        violations.append("one of quench.J or quench.epsilon is required")

    U = values["quench.U"]
    if U is not None and not U > 0:
        violations.append(f"quench.U must be positive, got {U}")
    if J is not None and not J >= 0:
        violations.append(f"quench.J must be non-negative, got {J}")
    ext = values["lattice.extent"]
    if ext is not None and ext < 4:
        violations.append(f"lattice.extent must be >= 4, got {ext}")
    dim = values["lattice.dimension"]
    if dim is not None and dim < 1:
        violations.append(f"lattice.dimension must be >= 1, got {dim}")
    pattern = PATTERN_ALIASES.get(str(values["lattice.pattern"]))
    if pattern is None:
        violations.append(f"lattice.pattern must be one of {sorted(PATTERN_ALIASES)}")
    rng = values["lattice.range"]
    if pattern == "range" and rng is not None:
        if rng < 1:
            violations.append(f"lattice.range must be >= 1, got {rng}")
        elif ext is not None and 2 * rng >= ext:
            violations.append(f"lattice.range {rng} must be below extent/2")
    if pattern == "nn":
        rng = 1
    t_max, samples = values["time.t_max"], values["time.samples"]
    if t_max is not None and not t_max > 0:
        violations.append(f"time.t_max must be positive, got {t_max}")
    if samples is not None and samples < 8:
        violations.append(f"time.samples must be >= 8, got {samples}")
    scenario = values["scenario"]
    if scenario is not None and scenario not in SCENARIOS:
        violations.append(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    fmt = values["output.format"]
    if fmt not in FORMATS:
        violations.append(f"output.format must be one of {FORMATS}, got {fmt!r}")
    sides = values["patches.sides"]
    try:
        parsed_sides = tuple(int(s) for s in str(sides).split(",") if s.strip())
        if not parsed_sides or min(parsed_sides) < 1:
            raise ValueError
    except ValueError:
        violations.append(f"patches.sides must be a comma list of positive integers, got {sides!r}")
        parsed_sides = ()
    if values["phase.side"] is not None and values["phase.side"] < 1:
        violations.append("phase.side must be >= 1")

    if violations:
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(violations), violations)

    if eps is not None:
        J = critical_couplings(U)[0] * (1.0 + eps)
    options = {
        "lightcone.threshold": values["lightcone.threshold"],
        "patches.sides": ",".join(str(s) for s in parsed_sides),
        "phase.side": values["phase.side"],
        "phase.max_distance": values["phase.max_distance"],
        "spectroscopy.input": values["spectroscopy.input"],
    }
    return ExperimentConfig(
        dimension=dim,
        extent=ext,
        pattern=pattern,
        range=rng,
        U=U,
        J=J,
        epsilon=eps,
        t_max=t_max,
        samples=samples,
        scenario=scenario,
        directory=values["output.directory"],
        format=fmt,
        options=options,
    )
