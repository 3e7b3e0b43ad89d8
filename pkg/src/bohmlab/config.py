"""INI configuration files for scenario runs.

Grammar (standard ``configparser`` INI, keys are case sensitive)::

    [run]          scenario
    [units]        hbar, mass_m, mass_M, L
    [grid]         n_points, n_points_X, dt, t_final, traj_every, release_domain,
                   X_half_width, sigma_delta
    [system]       n, x0
    [coupling]     epsilon, T, T_list
    [pointer]      sigma_X, X0, P0, branch_values, branch_weights, cross_check
    [ensemble]     n_traj, seed
    [output]       snapshots

Every key is optional except ``run.scenario`` (which the command line may
supply instead).  Lists are comma separated, booleans are true/false.
Unknown sections and keys are rejected with their ``section.key`` path.
A negative ``epsilon`` is valid and flips the direction of the pointer kick.
"""

from __future__ import annotations

import configparser
from dataclasses import fields
from pathlib import Path

from .errors import InvalidConfigError
from .scenarios import ScenarioConfig

SECTIONS = {
    "run": ("scenario",),
    "units": ("hbar", "mass_m", "mass_M", "L"),
    "grid": ("n_points", "n_points_X", "dt", "t_final", "traj_every", "release_domain",
             "X_half_width", "sigma_delta"),
    "system": ("n", "x0"),
    "coupling": ("epsilon", "T", "T_list"),
    "pointer": ("sigma_X", "X0", "P0", "branch_values", "branch_weights", "cross_check"),
    "ensemble": ("n_traj", "seed"),
    "output": ("snapshots",),
}
KEY_PATH = {key: f"{section}.{key}" for section, keys in SECTIONS.items() for key in keys}

_INTS = {"n_points", "n_points_X", "traj_every", "n", "n_traj", "seed", "snapshots"}
_LISTS = {"T_list", "branch_values", "branch_weights"}
_BOOLS = {"cross_check"}

assert set(KEY_PATH) == {f.name for f in fields(ScenarioConfig)}


def _convert(key: str, text: str):
    path = KEY_PATH[key]
    text = text.strip()
    try:
        if key == "scenario":
            return text
        if key in _BOOLS:
            low = text.lower()
            if low not in ("true", "false"):
                raise ValueError
            return low == "true"
        if key in _LISTS:
            return tuple(float(part) for part in text.split(",") if part.strip())
        if key in _INTS:
            return int(text)
        return float(text)
    except ValueError:
        raise InvalidConfigError(f"{path}: cannot parse {text!r}") from None


def _with_key_path(err: InvalidConfigError) -> InvalidConfigError:
    key, sep, rest = str(err).partition(":")
    if sep and key in KEY_PATH:
        return InvalidConfigError(f"{KEY_PATH[key]}:{rest}")
    return err


def config_from_text(text: str, scenario: str | None = None) -> ScenarioConfig:
    """Parse INI ``text``; ``scenario`` fills (or must agree with) ``run.scenario``."""
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise InvalidConfigError(f"syntax: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise InvalidConfigError(f"{section}: unknown section")
        for key, raw in parser.items(section):
            if key not in SECTIONS[section]:
                raise InvalidConfigError(f"{section}.{key}: unknown key")
            values[key] = _convert(key, raw)
    if scenario is not None:
        if values.setdefault("scenario", scenario) != scenario:
            raise InvalidConfigError(
                f"run.scenario: file says {values['scenario']!r} but {scenario!r} was requested")
    if "scenario" not in values:
        raise InvalidConfigError("run.scenario: missing required key")
    try:
        return ScenarioConfig(**values)
    except InvalidConfigError as err:
        raise _with_key_path(err) from None


def parse_config(path, scenario: str | None = None) -> ScenarioConfig:
    """Read and validate a configuration file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    return config_from_text(text, scenario)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_to_text(cfg: ScenarioConfig) -> str:
    """Canonical INI text; unset (None) keys are omitted, floats use repr."""
    lines = []
    for section, keys in SECTIONS.items():
        present = [(k, getattr(cfg, k)) for k in keys if getattr(cfg, k) is not None]
        if not present:
            continue
        lines.append(f"[{section}]")
        lines += [f"{k} = {_format(v)}" for k, v in present]
        lines.append("")
    return "\n".join(lines)


def write_config(cfg: ScenarioConfig, path) -> Path:
    path = Path(path)
    path.write_text(config_to_text(cfg))
    return path
