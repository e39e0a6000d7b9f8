"""TOML experiment configs, command-line overrides and run manifests.

A config is a flat table. Every key maps onto an :class:`ExperimentConfig`
field, plus ``n_trials``, ``output_dir`` and (for ``compare``) ``arms``.
``M`` may be a list to sweep population sizes. Unknown keys are rejected.
"""

from __future__ import annotations

import datetime as _dt
import os
import re
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import tomli

from evobandit.core import PriorSpec
from evobandit.drivers import ALGORITHMS, INITS, SCHEDULES, ExperimentConfig, MutationSchedule

SEED_ENV = "EVOBANDIT_SEED"

_INT_KEYS = {"d", "T", "seed", "snapshot_every", "n_trials"}
_FLOAT_KEYS = {"mu", "lambda", "sigma", "c"}
_STR_KEYS = {"algorithm", "schedule", "init", "output_dir"}
KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | {"M", "arms"}


class ConfigError(ValueError):
    """Bad configuration; ``str()`` carries a ``path:line:`` prefix when known."""


@dataclass
class Arm:
    """One contender in a comparison."""

    label: str
    algorithm: str
    mu: float | None = None
    schedule: MutationSchedule | None = None
    init: str = "zeros"

    def apply(self, base: ExperimentConfig) -> ExperimentConfig:
        changes: dict = {"algorithm": self.algorithm, "init": self.init}
        if self.mu is not None:
            changes["mu"] = self.mu
        if self.schedule is not None:
            changes["schedule"] = self.schedule
        return replace(base, **changes)


def parse_arm(spec: str) -> Arm:
    """Parse ``tsde[:MU]`` or ``basic-de:SCHEDULE:C[:uniform]``."""
    parts = spec.strip().split(":")
    try:
        if parts[0] == "tsde" and len(parts) <= 2:
            mu = float(parts[1]) if len(parts) == 2 else None
            return Arm(label=spec, algorithm="tsde", mu=mu)
        if parts[0] == "basic-de" and len(parts) in (3, 4):
            init = parts[3] if len(parts) == 4 else "zeros"
            if init not in INITS:
                raise ValueError(f"init must be one of {INITS}")
            return Arm(
                label=spec,
                algorithm="basic-de",
                schedule=MutationSchedule(parts[1], float(parts[2])),
                init=init,
            )
    except ValueError as exc:
        raise ConfigError(f"bad arm {spec!r}: {exc}") from None
    raise ConfigError(f"bad arm {spec!r}: expected 'tsde[:MU]' or 'basic-de:SCHEDULE:C[:uniform]'")


@dataclass
class RunSettings:
    """Everything a CLI invocation resolves to before running."""

    base: ExperimentConfig
    M_values: list[int]
    n_trials: int = 100
    output_dir: str = "out"
    arms: list[Arm] = field(default_factory=list)

    def configs(self) -> list[ExperimentConfig]:
        return [replace(self.base, M=m) for m in self.M_values]

    def to_dict(self) -> dict:
        base = asdict(self.base)
        base.pop("M")
        return {
            **base,
            "M": self.M_values,
            "n_trials": self.n_trials,
            "output_dir": self.output_dir,
            "arms": [a.label for a in self.arms],
        }


def _line_of(text: str, key: str) -> int | None:
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for n, line in enumerate(text.splitlines(), start=1):
        if pattern.match(line):
            return n
    return None


def _fail(path: str, text: str, key: str | None, msg: str) -> ConfigError:
    line = _line_of(text, key) if key else None
    where = f"{path}:{line}" if line else path
    return ConfigError(f"{where}: {msg}")


def _coerce(key: str, value):
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError("expected an integer")
        return value
    if key in _FLOAT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError("expected a number")
        return float(value)
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise TypeError("expected a string")
        return value
    if key == "M":
        values = value if isinstance(value, list) else [value]
        if not values or any(isinstance(v, bool) or not isinstance(v, int) for v in values):
            raise TypeError("expected an integer or a list of integers")
        return values
    if key == "arms":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise TypeError("expected a list of strings")
        return [parse_arm(v) for v in value]
    raise KeyError(key)


def load_config_file(path: str | os.PathLike) -> tuple[dict, str]:
    """Read and type-check a config file; returns ``(raw values, text)``."""
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        lineno = getattr(exc, "lineno", None)
        prefix = f"{path}:{lineno}" if lineno else path
        raise ConfigError(f"{prefix}: {exc}") from None
    values = {}
    for key, value in data.items():
        if key not in KNOWN_KEYS:
            raise _fail(path, text, key, f"unknown key {key!r}")
        try:
            values[key] = _coerce(key, value)
        except ConfigError as exc:
            raise _fail(path, text, key, str(exc)) from None
        except TypeError as exc:
            raise _fail(path, text, key, f"{key}: {exc}") from None
    return values, text


def resolve_settings(
    config_path: str | None = None,
    overrides: dict | None = None,
) -> RunSettings:
    """Merge defaults, the config file, ``EVOBANDIT_SEED`` and CLI overrides.

    Precedence, highest first: command line, config file, environment,
    built-in defaults.
    """
    values: dict = {}
    text = ""
    path = config_path or "<defaults>"
    if config_path:
        values, text = load_config_file(config_path)
    if "seed" not in values and os.environ.get(SEED_ENV):
        try:
            values["seed"] = int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV}: expected an integer, got {os.environ[SEED_ENV]!r}") from None
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    def field_error(key: str, msg: str) -> ConfigError:
        return _fail(path, text, key, msg)

    if values.get("algorithm", "tsde") not in ALGORITHMS:
        raise field_error("algorithm", f"algorithm must be one of {ALGORITHMS}")
    if values.get("schedule", "constant") not in SCHEDULES:
        raise field_error("schedule", f"schedule must be one of {SCHEDULES}")
    if values.get("init", "zeros") not in INITS:
        raise field_error("init", f"init must be one of {INITS}")

    try:
        prior = PriorSpec(lam=values.get("lambda", 1.0), sigma=values.get("sigma", 1.0))
    except ValueError as exc:
        raise field_error("lambda" if "precision" in str(exc) else "sigma", str(exc)) from None
    try:
        schedule = MutationSchedule(values.get("schedule", "constant"), values.get("c", 0.8))
    except ValueError as exc:
        raise field_error("c", str(exc)) from None

    M_values = values.get("M", [20])
    try:
        base = ExperimentConfig(
            d=values.get("d", 10),
            M=M_values[0],
            T=values.get("T", 100),
            mu=values.get("mu", 0.8),
            prior=prior,
            seed=values.get("seed", 0),
            algorithm=values.get("algorithm", "tsde"),
            schedule=schedule,
            snapshot_every=values.get("snapshot_every", 0),
            init=values.get("init", "zeros"),
        )
        for m in M_values[1:]:
            replace(base, M=m)
    except ValueError as exc:
        bad = str(exc).split(" ", 1)[0]
        raise field_error(bad if bad in KNOWN_KEYS else "", str(exc)) from None

    n_trials = values.get("n_trials", 100)
    if n_trials < 1:
        raise field_error("n_trials", f"n_trials must be >= 1, got {n_trials}")
    return RunSettings(
        base=base,
        M_values=list(M_values),
        n_trials=n_trials,
        output_dir=values.get("output_dir", "out"),
        arms=values.get("arms", []),
    )


def write_manifest(path: Path, settings: RunSettings, command: str, outputs: list[str], version: str) -> None:
    import json

    manifest = {
        "tool": "evobandit",
        "version": version,
        "command": command,
        "master_seed": settings.base.seed,
        "n_trials": settings.n_trials,
        "config": settings.to_dict(),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "outputs": outputs,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def settings_from_manifest(path: str | os.PathLike) -> RunSettings:
    """Rebuild run settings from a written ``manifest.json``."""
    import json

    cfg = json.loads(Path(path).read_text())["config"]
    overrides = {
        "d": cfg["d"],
        "M": cfg["M"],
        "T": cfg["T"],
        "mu": cfg["mu"],
        "lambda": cfg["prior"]["lam"],
        "sigma": cfg["prior"]["sigma"],
        "seed": cfg["seed"],
        "algorithm": cfg["algorithm"],
        "schedule": cfg["schedule"]["kind"],
        "c": cfg["schedule"]["c"],
        "snapshot_every": cfg["snapshot_every"],
        "init": cfg["init"],
        "n_trials": cfg["n_trials"],
        "output_dir": cfg["output_dir"],
        "arms": [parse_arm(a) for a in cfg["arms"]],
    }
    return resolve_settings(None, overrides)
