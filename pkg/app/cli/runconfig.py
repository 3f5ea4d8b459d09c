"""
Run configuration: defaults, an optional JSON file and command-line flags,
resolved in that order. File errors carry the offending line.

Example file for ``restore``::

    {
      "task": "deblur",
      "phantom": "checkerboard",
      "size": 64,
      "kernel": "binomial:3",
      "noise": 12.75,
      "denoiser": "dct-shrink:t=0.15",
      "solver": "pnpi-hqs",
      "iters": 300,
      "beta_growth": 1.01
    }
"""
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from app.config import VERSION
from app.core.io import to_json
from app.errors import ConfigError

COMMANDS = ("restore", "certify", "verify", "bench")

# key -> (type, default); "list" values accept a JSON list or a comma separated string
SCHEMA = {
    "restore": {
        "task": (str, "deblur"),
        "input": (str, None),
        "clean": (str, None),
        "phantom": (str, "checkerboard"),
        "size": (int, 64),
        "kernel": (str, "binomial:3"),
        "noise": (float, 12.75),
        "mu": (float, None),
        "scale": (int, 2),
        "peak": (float, 20.0),
        "denoiser": (str, "dct-shrink:t=0.15"),
        "solver": (str, "pnpi-hqs"),
        "a": (float, None),
        "b": (float, None),
        "index_shift": (int, 2),
        "iters": (int, None),
        "tol": (float, 1e-6),
        "beta": (float, None),
        "beta_growth": (float, 1.0),
        "lambda": (float, None),
        "relaxation": (float, 1.0),
        "project_box": (bool, False),
        "format": (str, "pgm"),
        "certify": (bool, False),
    },
    "certify": {
        "denoiser": (str, "gauss:3x3"),
        "assumptions": (str, "ne,pc"),
        "size": (int, 16),
        "sigmas": ("list", [15.0, 25.0, 40.0]),
        "images": ("list", []),
        "n_power": (int, 10),
        "k_inner": (int, 10),
        "dt": (float, 0.1),
        "eps": (float, 0.1),
        "tol": (float, 1e-6),
        "rtol": (float, 1e-9),
        "max_power": (int, 2000),
        "warm_start": (str, "rayleigh"),
        "workers": (int, 1),
        "strict": (bool, False),
    },
    "verify": {
        "suite": (str, "all"),
        "trials": (int, 1000),
        "json": (bool, False),
    },
    "bench": {
        "families": ("list", ["rotation", "contraction", "antisym", "spc"]),
        "solvers": ("list", ["picard", "mann", "ishikawa"]),
        "grid": (str, "0.3,0.15;0.8,0.15"),
        "iters": (int, 1000),
        "size": (int, 8),
        "relaxation": (float, 0.5),
        "workers": (int, 1),
    },
}

# accepted at the top level of any file
COMMON = {"command": (str, None), "seed": (int, 0)}


def key_line(text, key):
    """1-based line of the first ``"key":`` in a JSON document."""
    pattern = re.compile(r'"' + re.escape(key) + r'"\s*:')
    for i, line in enumerate(text.splitlines(), start=1):
        if pattern.search(line):
            return i
    return None


def _coerce(key, kind, value):
    """Value converted to the schema type, or None when it does not fit."""
    if value is None:
        return None, True
    if kind == "list":
        if isinstance(value, str):
            return [v.strip() for v in value.split(",") if v.strip()], True
        if isinstance(value, list):
            return value, True
        return None, False
    if kind is bool:
        return value, isinstance(value, bool)
    if kind is int:
        return value, isinstance(value, int) and not isinstance(value, bool)
    if kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        return (float(value) if ok else None), ok
    return value, isinstance(value, kind)


def load_config_file(path, command):
    """Parse a JSON config file and validate its keys against ``command``."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, line=exc.lineno, source=str(path)) from exc
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object", line=1, source=str(path))

    schema = {**COMMON, **SCHEMA[command]}
    values = {}
    for key, value in data.items():
        if key not in schema:
            raise ConfigError(f"unknown key '{key}' for command '{command}'", line=key_line(text, key), source=str(path))
        kind, _ = schema[key]
        coerced, ok = _coerce(key, kind, value)
        if not ok:
            expected = kind if isinstance(kind, str) else kind.__name__
            raise ConfigError(f"'{key}' must be {expected}, got {value!r}", line=key_line(text, key), source=str(path))
        values[key] = coerced
    if values.get("command") not in (None, command):
        raise ConfigError(f"file is for command '{values['command']}', not '{command}'",
                          line=key_line(text, "command"), source=str(path))
    values.pop("command", None)
    return values


@dataclass
class RunConfig:
    command: str
    params: dict
    seed: int = 0
    out: Path = Path("out")
    source: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]

    def get(self, key, default=None):
        value = self.params.get(key)
        return default if value is None else value

    def canonical(self):
        return {"command": self.command, "seed": self.seed, "params": self.params, "version": VERSION}

    @property
    def config_hash(self):
        payload = json.dumps(json.loads(to_json(self.canonical())), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def meta(self):
        """Stamp written into every artifact."""
        return {"config_hash": self.config_hash, "seed": self.seed, "version": VERSION, "command": self.command}

    def to_dict(self):
        return {**self.canonical(), "config_hash": self.config_hash, "source": self.source}


def resolve(command, flags=None, config_path=None, seed=None, out=None):
    """Defaults, then the config file, then explicitly given flags."""
    if command not in SCHEMA:
        raise ConfigError(f"unknown command '{command}', choose from {', '.join(COMMANDS)}")
    schema = SCHEMA[command]
    params = {key: default for key, (_, default) in schema.items()}
    file_seed = None
    if config_path is not None:
        file_values = load_config_file(config_path, command)
        file_seed = file_values.pop("seed", None)
        params.update(file_values)
    for key, value in (flags or {}).items():
        if key not in schema:
            raise ConfigError(f"unknown option '{key}' for command '{command}'")
        coerced, ok = _coerce(key, schema[key][0], value)
        if not ok:
            raise ConfigError(f"option '{key}' has the wrong type: {value!r}")
        params[key] = coerced
    final_seed = seed if seed is not None else (file_seed if file_seed is not None else 0)
    rc = RunConfig(
        command=command,
        params=params,
        seed=int(final_seed),
        out=Path(out) if out is not None else Path("out") / command,
        source=None if config_path is None else str(config_path),
    )
    validate(rc)
    return rc


def validate(rc: RunConfig):
    """Referenced files must exist; numeric options must lie in range."""
    p = rc.params
    for key in ("input", "clean"):
        if p.get(key) is not None and not Path(p[key]).exists():
            raise ConfigError(f"{key} file not found: {p[key]}")
    for image in p.get("images") or []:
        if not Path(image).exists():
            raise ConfigError(f"probe image not found: {image}")
    for key in ("size", "trials", "workers", "n_power", "k_inner", "max_power"):
        if key in p and p[key] is not None and p[key] < 1:
            raise ConfigError(f"'{key}' must be >= 1, got {p[key]}")
    if p.get("iters") is not None and p["iters"] < 0:
        raise ConfigError(f"'iters' must be >= 0, got {p['iters']}")
    if rc.command == "restore" and p["task"] not in ("deblur", "sisr", "poisson", "denoise"):
        raise ConfigError(f"unknown task '{p['task']}', choose from deblur, sisr, poisson, denoise")
    if rc.command == "restore" and p["format"] not in ("pgm", "txt"):
        raise ConfigError(f"format must be pgm or txt, got '{p['format']}'")
    if rc.command == "certify":
        try:
            p["sigmas"] = [float(s) for s in p["sigmas"]]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"sigmas must be numbers, got {p['sigmas']!r}") from exc
    return rc
