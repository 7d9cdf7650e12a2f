"""Run configuration: flat ``key = value`` files plus command-line overrides."""

import math
from dataclasses import dataclass, field

from .exceptions import ConfigError, DomainError
from .model import SystemParams


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(text):
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def _floats(text):
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _nonneg(x):
    return x >= 0


def _positive(x):
    return x > 0


def _nonneg_list(xs):
    return len(xs) > 0 and all(math.isfinite(x) and x >= 0 for x in xs)


def _positive_list(xs):
    return len(xs) > 0 and all(math.isfinite(x) and x > 0 for x in xs)


# key: (parser, default, range check, range description)
SCHEMA = {
    "omega0": (float, 1.0, _positive, "> 0"),
    "beta": (float, 2.0, _nonneg, ">= 0"),
    "gamma_down": (float, 0.01, _nonneg, ">= 0"),
    "lambda0": (float, 0.05, _nonneg, ">= 0"),
    "drive_omega": (float, 1.0, _positive, "> 0"),
    "cycles": (float, 10.0, _positive, "> 0"),
    "steps": (_int, 10_000, lambda n: n >= 2, ">= 2"),
    "offgrid_tau": (_bool, False, None, ""),
    "n_traj": (_int, 1_000_000, lambda n: n >= 1, ">= 1"),
    "master_seed": (_int, 0, lambda n: 0 <= n < 2**63, "in [0, 2**63)"),
    "dump_records": (_bool, False, None, ""),
    "compare_gammas": (_floats, (0.0, 0.001, 0.01), _nonneg_list, "nonnegative list"),
    "tolerance": (float, 0.0032, _positive, "> 0"),
    "series_gammas": (_floats, (0.001, 0.01), _nonneg_list, "nonnegative list"),
    "series_stride": (_int, 20, lambda n: n >= 1, ">= 1"),
    "n_modes": (_int, 1, lambda n: 1 <= n <= 3, "1..3"),
    "n_max": (_int, 3, lambda n: 1 <= n <= 63, "1..63"),
    "mode_freqs": (_floats, (1.0,), _positive_list, "positive list"),
    "couplings": (_floats, (0.02,), lambda xs: len(xs) > 0 and all(math.isfinite(x) for x in xs), "finite list"),
    "coupling_form": (str, "full", lambda s: s in ("full", "rwa"), "full or rwa"),
    "measurement": (str, "total", lambda s: s in ("total", "bare"), "total or bare"),
    "oracle_steps": (_int, 4000, lambda n: n >= 2, ">= 2"),
    "fd_step": (float, 0.02, lambda h: 1e-4 <= h <= 1e-1, "in [1e-4, 1e-1]"),
    "fdt_lambda_min": (float, 0.001, _positive, "> 0"),
    "fdt_lambda_max": (float, 0.1, _positive, "> 0"),
    "fdt_lambda_count": (_int, 20, lambda n: n >= 1, ">= 1"),
    "fdt_gamma_max": (float, 0.05, _nonneg, ">= 0"),
    "fdt_gamma_count": (_int, 11, lambda n: n >= 1, ">= 1"),
    "out": (str, "out", lambda s: len(s) > 0, "non-empty path"),
}

SYSTEM_KEYS = tuple(SystemParams.field_names())


@dataclass(frozen=True)
class RunConfig:
    """Validated key/value settings; ``values`` holds every key in ``SCHEMA``."""

    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def system(self, **changes):
        kw = {k: self.values[k] for k in SYSTEM_KEYS}
        kw.update(changes)
        try:
            return SystemParams(**kw)
        except DomainError as exc:
            key = next((k for k in SYSTEM_KEYS if str(exc).startswith(k)), "cycles")
            raise ConfigError(key, str(exc)) from exc


def normalize_key(key):
    return key.strip().lstrip("-").replace("-", "_")


def parse_value(key, text):
    if key not in SCHEMA:
        raise ConfigError(key, "unknown key")
    parser, _, check, allowed = SCHEMA[key]
    try:
        value = parser(text.strip())
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"cannot parse {text.strip()!r}: {exc}") from None
    if isinstance(value, float) and not math.isfinite(value) and key != "beta":
        raise ConfigError(key, f"value {value} must be finite")
    if check is not None and not check(value):
        raise ConfigError(key, f"value {value!r} out of range (expected {allowed})")
    return value


def read_config_text(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        raw[normalize_key(key)] = value
    return raw


def parse_config(path=None, overrides=None):
    """Build a :class:`RunConfig` from an optional file and flag overrides.

    ``overrides`` maps keys to strings and takes precedence over the file.
    """
    raw = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            raw.update(read_config_text(fh.read()))
    for key, value in (overrides or {}).items():
        raw[normalize_key(key)] = str(value)
    values = {k: spec[1] for k, spec in SCHEMA.items()}
    for key, text in raw.items():
        values[key] = parse_value(key, text)
    if values["fdt_lambda_min"] > values["fdt_lambda_max"]:
        raise ConfigError("fdt_lambda_min", "must not exceed fdt_lambda_max")
    cfg = RunConfig(values)
    cfg.system()
    return cfg
