"""Run configuration: key registry, config-file parsing and validation.

Config files are line-based ``key = value`` with ``#`` comments.  Keys are
case-sensitive and may appear once; unknown keys are rejected with the full
list of valid keys for the command.  Every physical rate key carries an
explicit ``_hz`` suffix and is multiplied by 2 pi on ingestion, so internal
values are angular (rad/s) throughout.  Grids are written
``start:stop:count:scale`` with scale ``lin`` or ``log``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ConfigError",
    "GridSpec",
    "RunConfig",
    "COMMANDS",
    "command_keys",
    "parse_config_text",
    "validate_params",
]

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    """Malformed configuration (bad key, value, range, or duplicate)."""


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    count: int
    scale: str

    def values(self) -> list[float]:
        if self.count == 1:
            return [self.start]
        if self.scale == "lin":
            step = (self.stop - self.start) / (self.count - 1)
            return [self.start + i * step for i in range(self.count)]
        ratio = (self.stop / self.start) ** (1.0 / (self.count - 1))
        return [self.start * ratio ** i for i in range(self.count)]

    @staticmethod
    def parse(text: str, key: str) -> "GridSpec":
        parts = text.split(":")
        if len(parts) != 4:
            raise ConfigError(
                f"grid key '{key}' needs the form start:stop:count:scale, got {text!r}"
            )
        try:
            start, stop = float(parts[0]), float(parts[1])
            count = int(parts[2])
        except ValueError as err:
            raise ConfigError(f"grid key '{key}': bad number in {text!r}") from err
        scale = parts[3].strip()
        if scale not in ("lin", "log"):
            raise ConfigError(f"grid key '{key}': scale must be lin or log, got {scale!r}")
        if count < 1:
            raise ConfigError(f"grid key '{key}': count must be >= 1")
        if scale == "log" and (start <= 0 or stop <= 0):
            raise ConfigError(f"grid key '{key}': log grids need positive endpoints")
        return GridSpec(start=start, stop=stop, count=count, scale=scale)


@dataclass(frozen=True)
class RunConfig:
    command: str
    parameters: dict
    output_path: str | None = None


# key kinds: rate_hz (float > 0 unless zero_ok, scaled by 2 pi), float, grid_hz
# (grid scaled by 2 pi), grid, str, bool
_K = {
    "gamma_s0_hz": ("rate_hz", "spin intrinsic linewidth, Hz"),
    "n_bar_s": ("nonneg", "spin thermal occupancy"),
    "gamma_m0_hz": ("rate_hz", "mechanical intrinsic linewidth, Hz"),
    "n_bar_m": ("nonneg", "mechanical thermal occupancy"),
    "epsilon": ("fraction", "transmission power loss in [0, 1]"),
    "c_s": ("nonneg", "spin quantum cooperativity"),
    "c_m": ("nonneg", "mechanical quantum cooperativity"),
    "theta_s_rad": ("angle", "spin coupling angle in [0, pi/2], radians"),
    "theta_m_rad": ("angle", "mechanical coupling angle in [0, pi/2], radians"),
    "cs_grid": ("grid", "C_S grid, start:stop:count:{lin|log}"),
    "cm_grid": ("grid", "C_M grid, start:stop:count:{lin|log}"),
    "modes": ("modes", "comma list of optimization modes: free,symmetric"),
    "mode": ("mode", "single optimization mode: free, symmetric or cond_qnd"),
    "conditional": ("bool", "also evaluate the conditional steady state"),
    "omega_m_hz": ("rate_hz", "mechanical resonance (band center), Hz"),
    "gamma_sig_hz": ("rate_hz", "signal bandwidth, Hz"),
    "omega_grid_hz": ("grid_hz", "spectrum frequency grid, Hz"),
    "spectrum_kind": ("spectrum_kind", "which spectrum: mech or hybrid"),
    "kappa_hz": ("rate_hz", "cavity decay rate (FWHM), Hz"),
    "delta_hz": ("signed_hz", "drive detuning omega_c - omega_L, Hz (signed)"),
    "g_om_hz": ("rate_hz", "drive-enhanced optomechanical coupling, Hz"),
    "omega_m_bare_hz": ("rate_hz", "bare mechanical resonance, Hz"),
}

_PHYS = ["gamma_s0_hz", "n_bar_s", "gamma_m0_hz", "n_bar_m", "epsilon"]

COMMANDS = {
    "steady": {
        "required": _PHYS + ["c_s", "c_m", "theta_s_rad", "theta_m_rad"],
        "optional": [],
    },
    "sweep": {
        "required": _PHYS + ["cs_grid"],
        "optional": ["modes", "conditional"],
    },
    "heatmap": {
        "required": _PHYS + ["cs_grid", "cm_grid"],
        "optional": [],
    },
    "optimize": {
        "required": _PHYS + ["c_s"],
        "optional": ["mode", "conditional"],
    },
    "spectrum": {
        "required": _PHYS + ["c_s", "c_m", "theta_s_rad", "theta_m_rad",
                             "omega_grid_hz", "spectrum_kind"],
        "optional": ["omega_m_hz"],
    },
    "sense": {
        "required": _PHYS + ["cs_grid", "gamma_sig_hz"],
        "optional": ["omega_m_hz"],
    },
    "physmap": {
        "required": ["kappa_hz", "delta_hz", "g_om_hz", "omega_m_bare_hz"],
        "optional": [],
    },
}

# defaults applied when an optional key is absent
_DEFAULTS = {
    "modes": ("free", "symmetric"),
    "mode": "free",
    "conditional": False,
    "omega_m_hz": 1.0e6,   # scaled to 2 pi x 1 MHz on ingestion
}


def command_keys(command: str) -> list[str]:
    spec = COMMANDS[command]
    return sorted(spec["required"] + spec["optional"] + ["command"])


def _convert(key: str, raw, line_no=None):
    kind = _K[key][0]

    def err(msg):
        where = f" (line {line_no})" if line_no is not None else ""
        return ConfigError(f"key '{key}'{where}: {msg}")

    if kind in ("rate_hz", "signed_hz", "nonneg", "fraction", "angle"):
        try:
            val = float(raw)
        except (TypeError, ValueError):
            raise err(f"bad number {raw!r}")
        if kind == "rate_hz":
            if val < 0:
                raise err("must be >= 0 (Hz)")
            return TWO_PI * val
        if kind == "signed_hz":
            return TWO_PI * val
        if kind == "nonneg":
            if val < 0:
                raise err("must be >= 0")
            return val
        if kind == "fraction":
            if not 0.0 <= val <= 1.0:
                raise err(f"must lie in [0, 1], got {val}")
            return val
        if not 0.0 <= val <= math.pi / 2:
            raise err(f"must lie in [0, pi/2] radians, got {val}")
        return val
    if kind in ("grid", "grid_hz"):
        if isinstance(raw, GridSpec):
            g = raw
        else:
            g = GridSpec.parse(str(raw), key)
        if kind == "grid_hz":
            g = GridSpec(start=TWO_PI * g.start, stop=TWO_PI * g.stop,
                         count=g.count, scale=g.scale)
        return g
    if kind == "modes":
        if isinstance(raw, (list, tuple)):
            vals = tuple(raw)
        else:
            vals = tuple(v.strip() for v in str(raw).split(",") if v.strip())
        bad = [v for v in vals if v not in ("free", "symmetric")]
        if bad or not vals:
            raise err(f"modes must be drawn from free,symmetric; got {raw!r}")
        return vals
    if kind == "mode":
        v = str(raw).strip()
        if v not in ("free", "symmetric", "cond_qnd"):
            raise err(f"mode must be free, symmetric or cond_qnd; got {raw!r}")
        return v
    if kind == "bool":
        if isinstance(raw, bool):
            return raw
        v = str(raw).strip().lower()
        if v in ("true", "1", "yes", "on"):
            return True
        if v in ("false", "0", "no", "off"):
            return False
        raise err(f"bad boolean {raw!r}")
    if kind == "spectrum_kind":
        v = str(raw).strip()
        if v not in ("mech", "hybrid"):
            raise err(f"spectrum_kind must be mech or hybrid; got {raw!r}")
        return v
    raise AssertionError(f"unhandled kind {kind}")


def validate_params(command: str, raw: dict, line_numbers: dict | None = None) -> dict:
    """Convert and range-check raw key/value pairs for one command.

    ``raw`` values may be strings (config file, CLI) or already-typed values
    (service layer); unit scaling happens exactly once here.
    """
    if command not in COMMANDS:
        raise ConfigError(
            f"unknown command {command!r}; valid commands: {', '.join(sorted(COMMANDS))}"
        )
    spec = COMMANDS[command]
    allowed = set(spec["required"]) | set(spec["optional"])
    line_numbers = line_numbers or {}
    params = {}
    for key, raw_val in raw.items():
        if key == "command":
            continue
        if key not in allowed:
            raise ConfigError(
                f"unknown key '{key}' for command '{command}'"
                + (f" (line {line_numbers[key]})" if key in line_numbers else "")
                + f"; valid keys: {', '.join(command_keys(command))}"
            )
        params[key] = _convert(key, raw_val, line_numbers.get(key))
    missing = [k for k in spec["required"] if k not in params]
    if missing:
        raise ConfigError(
            f"command '{command}' is missing required keys: {', '.join(missing)}"
        )
    for key in spec["optional"]:
        if key not in params and key in _DEFAULTS:
            params[key] = _convert(key, _DEFAULTS[key]) if key == "omega_m_hz" else _DEFAULTS[key]
    return params


def parse_config_text(text: str, command_override: str | None = None) -> RunConfig:
    """Parse a config file into a validated RunConfig.

    Duplicate keys, malformed lines, unknown keys and bad numbers are rejected
    with the offending line number.
    """
    raw: dict = {}
    lines_of: dict = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"malformed line {line_no}: {line.rstrip()!r} (expected key = value)")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"malformed line {line_no}: {line.rstrip()!r} (empty key or value)")
        if key in raw:
            raise ConfigError(f"duplicate key '{key}' at line {line_no}")
        raw[key] = value
        lines_of[key] = line_no

    command = command_override or raw.get("command")
    if command is None:
        raise ConfigError("no command given (set 'command = ...' or pass --command)")
    command = str(command).strip()
    params = validate_params(command, raw, lines_of)
    return RunConfig(command=command, parameters=params)
