"""
Run Configuration
Defaults, optional JSON config file, environment overrides.
"""

import json
import logging
import numbers
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, List, Optional

from dotenv import load_dotenv

from app.errors import ParameterError

load_dotenv()
logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = "config/run_config.json"


def _default_threads() -> int:
    return os.cpu_count() or 1


def _as_int(name: str, value) -> int:
    """Accept ints and integral floats; anything else is a ParameterError."""
    if isinstance(value, bool) or not isinstance(value, (numbers.Integral, float)):
        raise ParameterError(f"{name} must hold integers, got {value!r}")
    if isinstance(value, float) and not value.is_integer():
        raise ParameterError(f"{name} must hold integers, got {value}")
    return int(value)


@dataclass(frozen=True)
class RunConfig:
    """Extraction and evaluation parameters."""

    radii: List[int] = field(default_factory=lambda: [2, 9])
    qs: List[int] = field(default_factory=lambda: [4, 19, 29])
    lam: float = 1e-3
    label_normalization: bool = True
    lda_gamma: float = 1e-4
    threads: int = field(default_factory=_default_threads)
    theta_q: int = 4
    loo_downdate: bool = False
    progress: bool = True

    def __post_init__(self):
        object.__setattr__(self, "radii", [_as_int("radii", r) for r in self.radii])
        object.__setattr__(self, "qs", [_as_int("qs", q) for q in self.qs])
        self.validate()

    def validate(self):
        for name in ("radii", "qs"):
            values = getattr(self, name)
            if not values:
                raise ParameterError(f"{name} must not be empty")
            if any(v < 1 for v in values):
                raise ParameterError(f"{name} must be positive, got {values}")
            if any(a >= b for a, b in zip(values, values[1:])):
                raise ParameterError(f"{name} must be strictly increasing, got {values}")
        if not self.lam > 0:
            raise ParameterError(f"lambda must be > 0, got {self.lam}")
        if self.lda_gamma < 0:
            raise ParameterError(f"LDA gamma must be >= 0, got {self.lda_gamma}")
        if self.threads < 1:
            raise ParameterError(f"threads must be >= 1, got {self.threads}")
        if self.theta_q < 1:
            raise ParameterError(f"theta_q must be >= 1, got {self.theta_q}")

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: Dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            logger.warning(f"Ignoring unknown config keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in values.items() if k in known})

    def extraction_params(self) -> Dict:
        """The subset that determines feature values."""
        return {
            "radii": list(self.radii),
            "qs": list(self.qs),
            "lam": self.lam,
            "label_normalization": self.label_normalization,
        }


def parse_int_list(text: str) -> List[int]:
    """'2,9' -> [2, 9]; '2..10' -> [2, ..., 10]."""
    text = text.strip()
    try:
        if ".." in text:
            start, stop = text.split("..", 1)
            return list(range(int(start), int(stop) + 1))
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ParameterError(f"expected a list like '2,9' or '2..10', got '{text}'") from e


def _parse_bool(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


ENV_OVERRIDES = {
    "CNRNN_RADII": ("radii", parse_int_list),
    "CNRNN_QS": ("qs", parse_int_list),
    "CNRNN_LAMBDA": ("lam", float),
    "CNRNN_GAMMA": ("lda_gamma", float),
    "CNRNN_THREADS": ("threads", int),
    "CNRNN_LABEL_NORM": ("label_normalization", _parse_bool),
}


def load_run_config(config_file: Optional[str] = None, environ: Optional[Dict[str, str]] = None) -> RunConfig:
    """
    Build a RunConfig from defaults, a JSON file and CNRNN_* environment variables.

    A missing config file is not an error; an unreadable one is logged and skipped.
    """
    values: Dict = {}
    path = config_file or DEFAULT_CONFIG_FILE

    if os.path.exists(path):
        try:
            with open(path, 'r') as f:
                loaded = json.load(f)
            if 'run' in loaded:
                loaded = loaded['run']
            values.update(loaded)
            logger.info(f"Loaded run configuration from {path}")
        except Exception as e:
            logger.warning(f"Could not load config from {path}: {e}; using defaults")
    elif config_file:
        logger.warning(f"Config file {config_file} not found; using defaults")

    environ = os.environ if environ is None else environ
    for key, (name, parse) in ENV_OVERRIDES.items():
        if environ.get(key):
            try:
                values[name] = parse(environ[key])
            except ValueError as e:
                raise ParameterError(f"{key}={environ[key]!r}: {e}") from e

    return RunConfig.from_dict(values)


def with_overrides(config: RunConfig, **overrides) -> RunConfig:
    """Apply non-None overrides, e.g. from command-line flags."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    return replace(config, **changes) if changes else config


def save_run_config(config: RunConfig, config_file: str = DEFAULT_CONFIG_FILE):
    """Save run configuration to JSON file."""
    directory = os.path.dirname(config_file)
    if directory:
        os.makedirs(directory, exist_ok=True)

    with open(config_file, 'w') as f:
        json.dump({"run": config.to_dict()}, f, indent=2)

    logger.info(f"Saved run configuration to {config_file}")
