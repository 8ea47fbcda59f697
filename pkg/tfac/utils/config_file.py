from pathlib import Path
from typing import Any

from tfac.constants import CONFIG_LINE_REGEX, CONFIG_LIST_SPLIT_REGEX
from tfac.exceptions import ConfigurationError


# Config keys are the CLI flag names; values map onto ExperimentConfig fields
KEY_ALIASES = {
    "alpha": "alphas",
    "gamma": "gammas",
    "tau": "taus",
    "kappa": "kappas",
    "eps_int": "epsilon",
    "no_energy_monitor": "monitor_energy",
}

LIST_KEYS = {"alphas", "gammas", "n_steps", "taus", "kappas", "snapshot_times"}

SCALAR_KEYS = {
    "sigma",
    "m1",
    "length",
    "epsilon",
    "T",
    "t0",
    "n0",
    "grading",
    "tau_min",
    "tau_max",
    "enforce_restriction",
    "amplitude",
    "seed",
    "mode",
    "eigenvalue",
    "meshes",
    "snapshot_format",
    "monitor_energy",
    "soe_tol",
    "soe_cutoff",
    "newton_tol",
    "workers",
    "out",
    "log_level",
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def normalize_key(raw: str) -> str:
    key = raw.strip().replace("-", "_")
    if key.lower() == "t":
        return "T"
    return KEY_ALIASES.get(key, key)


def _parse_flag(key: str, value: str) -> bool:
    lowered = value.lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ConfigurationError(f"'{key}' expects a boolean, got '{value}'")


def parse_config_text(text: str, source: str = "<config>") -> dict[str, Any]:
    """
    Parse flat ``key = value`` lines into ExperimentConfig field values.

    ``#`` starts a comment; list values are comma- or whitespace-separated.
    Values stay strings (pydantic coerces them); ``no-energy-monitor`` is
    inverted into ``monitor_energy``.

    Raises:
        ConfigurationError: On malformed lines, unknown or repeated keys
    """
    values: dict[str, Any] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0]
        if not line.strip():
            continue

        match = CONFIG_LINE_REGEX.match(line)
        if match is None:
            raise ConfigurationError(f"{source}:{number}: expected 'key = value'")

        raw_key = match.group("key")
        key = normalize_key(raw_key)
        value = match.group("value")
        if key in values:
            raise ConfigurationError(f"{source}:{number}: '{raw_key}' given twice")

        if key in LIST_KEYS:
            items = [item for item in CONFIG_LIST_SPLIT_REGEX.split(value) if item]
            if not items:
                raise ConfigurationError(f"{source}:{number}: '{raw_key}' is empty")
            values[key] = items
        elif key == "monitor_energy":
            flag = _parse_flag(raw_key, value)
            values[key] = not flag if raw_key.replace("-", "_") == "no_energy_monitor" else flag
        elif key == "enforce_restriction":
            values[key] = _parse_flag(raw_key, value)
        elif key in SCALAR_KEYS:
            values[key] = value
        else:
            raise ConfigurationError(f"{source}:{number}: unknown key '{raw_key}'")

    return values


def load_config_file(path: Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Cannot read config file {path}: {e}") from e
    return parse_config_text(text, str(path))


def merge_config(file_values: dict[str, Any], flag_values: dict[str, Any]) -> dict[str, Any]:
    """Flags win over file values; both win over schema defaults."""
    return {**file_values, **flag_values}
