"""Run configuration: a line-oriented ``[section]`` / ``key = value`` format.

Example::

    [chain]
    n = 3
    k = 3
    gamma = 1
    potentials = cosine, cosine

    [experiment]
    L_list = 10, 20, 40, 80

Every key has a default; unknown sections or keys, duplicates and values of
the wrong type are errors that name the line.  ``#`` starts a comment.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

from ..chain import AssumptionViolation, ChainSpec, parse_potential
from ..experiments.runs import TRANSIENT_POLICIES, ExperimentConfig
from ..integrator import SCHEMES, IntegratorConfig

SUBCOMMANDS = ("simulate", "normal-form", "scaling", "dissipation", "decompose",
               "asymptotics", "degenerate", "stability", "verify", "bounds")
FIT_SUBCOMMANDS = ("scaling", "dissipation", "decompose", "degenerate")
FORMATS = ("csv", "json")
SEED_ENV = "ROTORFORGE_SEED"


class ConfigError(ValueError):
    """Invalid configuration text or values."""


# -- value parsers -------------------------------------------------------------------


def _int(s: str) -> int:
    if not re.fullmatch(r"[-+]?\d+", s):
        raise ValueError("expects an integer")
    return int(s)


def _float(s: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise ValueError("expects a number") from None


def _bool(s: str) -> bool:
    v = s.lower()
    if v in ("true", "yes", "on", "1"):
        return True
    if v in ("false", "no", "off", "0"):
        return False
    raise ValueError("expects true or false")


def _str(s: str) -> str:
    return s


def _list(item: Callable[[str], Any]) -> Callable[[str], tuple]:
    def parse(s: str) -> tuple:
        parts = [p.strip() for p in s.split(",")]
        if not s.strip() or any(not p for p in parts):
            raise ValueError("expects a comma-separated list")
        return tuple(item(p) for p in parts)
    return parse


def _choice(options) -> Callable[[str], str]:
    def parse(s: str) -> str:
        if s not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return s
    return parse


def _float_or_auto(s: str):
    return "auto" if s == "auto" else _float(s)


def _optional_int(s: str):
    return None if s in ("none", "auto") else _int(s)


def split_potentials(s: str) -> Tuple[str, ...]:
    """Bond potentials are separated by ``;``; without ``;`` and ``:`` a ``,`` also separates."""
    if ";" in s:
        parts = s.split(";")
    elif ":" in s:
        parts = [s]
    else:
        parts = s.split(",")
    parts = [p.strip() for p in parts]
    if any(not p for p in parts):
        raise ValueError("empty potential entry")
    for p in parts:
        parse_potential(p)
    return tuple(parts)


# (parser, default) per key; defaults are given as values, not text
SCHEMA: Dict[str, Dict[str, Tuple[Callable, Any]]] = {
    "chain": {
        "n": (_int, 3),
        "k": (_int, None),  # defaults to n
        "gamma": (_float, 1.0),
        "potentials": (split_potentials, ("cosine",)),
        "degenerate_allowed": (_bool, False),
    },
    "integrator": {
        "scheme": (_choice(tuple(SCHEMES)), "yoshida4"),
        "steps_per_fast_period": (_int, 64),
        "t_final": (_float, 100.0),
        "sample_stride": (_optional_int, None),
        "compensated_sums": (_bool, True),
    },
    "experiment": {
        "kind": (_choice(SUBCOMMANDS), None),
        "L_list": (_list(_float), (10.0, 20.0, 40.0, 80.0)),
        "alpha": (_float, 1.0),
        "rho": (_float, 0.0),
        "seeds": (_list(_int), (0,)),
        "transient": (_choice(TRANSIENT_POLICIES), "auto"),
        "ramp_time": (_float, 200.0),
        "min_windows": (_int, 8000),
        "max_time": (_float_or_auto, "auto"),
        "plateau_tol": (_float, 0.05),
        "points": (_int, 64),
        "T_cap": (_float, 2.0e4),
        "rho_max": (_float, 5.0),
        "bound_functions": (_int, 100),
        "bound_L": (_list(_float), (100.0, 1000.0)),
        "jobs": (_int, 1),
    },
    "output": {
        "dir": (_str, "out"),
        "formats": (_list(_choice(FORMATS)), ("csv", "json")),
    },
}

# keys that only choose where results go; excluded from the config hash
UNHASHED = {("output", "dir"), ("experiment", "jobs")}


@dataclass
class RunConfig:
    values: Dict[str, Dict[str, Any]]
    lines: Dict[Tuple[str, str], int] = field(default_factory=dict)

    def __getitem__(self, section: str) -> Dict[str, Any]:
        return self.values[section]

    def canonical(self) -> str:
        """Sorted-key JSON of every value that affects results."""
        data = {s: {k: _jsonable(v) for k, v in sorted(vals.items())
                    if (s, k) not in UNHASHED}
                for s, vals in sorted(self.values.items())}
        return json.dumps(data, sort_keys=True, separators=(",", ":"))

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def echo(self) -> dict:
        return {s: {k: _jsonable(v) for k, v in sorted(vals.items())}
                for s, vals in sorted(self.values.items())}

    # builders

    def chain(self) -> ChainSpec:
        c = self.values["chain"]
        pots = c["potentials"]
        if len(pots) == 1:
            pots = pots * (c["n"] - 1)
        return ChainSpec.build(c["n"], c["k"], c["gamma"], list(pots),
                               c["degenerate_allowed"])

    def integrator(self) -> IntegratorConfig:
        i = self.values["integrator"]
        return IntegratorConfig(i["scheme"], i["steps_per_fast_period"], i["t_final"],
                                sample_stride=i["sample_stride"],
                                compensated_sums=i["compensated_sums"])

    def experiment(self, kind: str) -> ExperimentConfig:
        e, i = self.values["experiment"], self.values["integrator"]
        max_time = e["max_time"]
        if max_time == "auto":
            max_time = 1.2e6 if kind == "degenerate" else 2.0e5
        return ExperimentConfig(
            chain=self.chain(), L_list=e["L_list"], rho=e["rho"], alpha=e["alpha"],
            transient=e["transient"], ramp_time=e["ramp_time"], seeds=e["seeds"],
            scheme=i["scheme"], steps_per_fast_period=i["steps_per_fast_period"],
            min_windows=e["min_windows"], max_time=max_time,
            plateau_tol=e["plateau_tol"], jobs=e["jobs"])


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


_SECTION = re.compile(r"^\[\s*([A-Za-z_][\w-]*)\s*\]$")
_KV = re.compile(r"^([A-Za-z_][\w]*)\s*=\s*(.*)$")


def parse_config(text: str, env: Optional[Dict[str, str]] = None) -> RunConfig:
    """Parse and validate a run configuration.

    ``env`` defaults to ``os.environ``; ``ROTORFORGE_SEED`` (a comma list of
    integers) replaces ``experiment.seeds``.

    Raises
    ------
    ConfigError
        Syntax, unknown or duplicate keys, type errors and violated
        cross-field invariants.
    """
    env = os.environ if env is None else env
    raw: Dict[str, Dict[str, Any]] = {s: {} for s in SCHEMA}
    lines: Dict[Tuple[str, str], int] = {}
    section: Optional[str] = None
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        m = _SECTION.match(s)
        if m:
            section = m.group(1)
            if section not in SCHEMA:
                raise ConfigError(f"line {no}: unknown section [{section}]")
            continue
        m = _KV.match(s)
        if not m:
            raise ConfigError(f"line {no}: expected 'key = value' or '[section]'")
        if section is None:
            raise ConfigError(f"line {no}: key outside of any section")
        key, value = m.group(1), m.group(2).strip()
        if key not in SCHEMA[section]:
            raise ConfigError(f"line {no}: unknown key '{key}' in section [{section}]")
        if (section, key) in lines:
            raise ConfigError(f"line {no}: duplicate key '{section}.{key}' "
                              f"(first set on line {lines[(section, key)]})")
        parser = SCHEMA[section][key][0]
        try:
            raw[section][key] = parser(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"line {no}: {section}.{key} {exc} (got '{value}')") from None
        lines[(section, key)] = no
    values = {s: {k: raw[s].get(k, default) for k, (_, default) in keys.items()}
              for s, keys in SCHEMA.items()}
    seed_env = env.get(SEED_ENV)
    if seed_env:
        try:
            values["experiment"]["seeds"] = _list(_int)(seed_env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be a comma-separated list of integers") from None
    cfg = RunConfig(values, lines)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    c, i, e = cfg["chain"], cfg["integrator"], cfg["experiment"]
    if c["n"] < 2:
        raise ConfigError(f"chain.n = {c['n']} must be at least 2")
    if c["k"] is None:
        c["k"] = c["n"]
    if c["k"] > c["n"]:
        raise ConfigError(f"chain.k = {c['k']} must not exceed chain.n = {c['n']}")
    if c["k"] < 2:
        raise ConfigError(f"chain.k = {c['k']} must be at least 2 (chain.n = {c['n']})")
    if c["gamma"] < 0:
        raise ConfigError("chain.gamma must be non-negative")
    if len(c["potentials"]) not in (1, c["n"] - 1):
        raise ConfigError(f"chain.potentials lists {len(c['potentials'])} entries; "
                          f"need 1 or chain.n - 1 = {c['n'] - 1}")
    if i["steps_per_fast_period"] < 16:
        raise ConfigError("integrator.steps_per_fast_period must be at least 16")
    if i["t_final"] < 0:
        raise ConfigError("integrator.t_final must be non-negative")
    if i["sample_stride"] is not None and i["sample_stride"] < 0:
        raise ConfigError("integrator.sample_stride must be non-negative")
    Ls = e["L_list"]
    if any(b <= a for a, b in zip(Ls, Ls[1:])):
        raise ConfigError("experiment.L_list must be strictly increasing")
    if Ls[0] <= 0:
        raise ConfigError("experiment.L_list values must be positive")
    if e["rho"] < 0:
        raise ConfigError("experiment.rho must be non-negative")
    if e["jobs"] < 1:
        raise ConfigError("experiment.jobs must be at least 1")
    if e["bound_functions"] < 1:
        raise ConfigError("experiment.bound_functions must be at least 1")
    if e["max_time"] != "auto" and e["max_time"] <= 0:
        raise ConfigError("experiment.max_time must be positive or 'auto'")
    try:
        cfg.chain()
    except AssumptionViolation as exc:
        raise ConfigError(f"chain: {exc}; set chain.degenerate_allowed = true to "
                          "override the assumption check") from None
    except ValueError as exc:
        raise ConfigError(f"chain: {exc}") from None


def check_for_subcommand(cfg: RunConfig, kind: str) -> None:
    """Per-subcommand requirements that the generic validation cannot know."""
    e = cfg["experiment"]
    if e["kind"] is not None and e["kind"] != kind:
        raise ConfigError(f"experiment.kind = {e['kind']} does not match subcommand {kind}")
    if kind in FIT_SUBCOMMANDS and len(e["L_list"]) < 3:
        raise ConfigError(f"{kind} fits need at least 3 values in experiment.L_list, "
                          f"got {len(e['L_list'])}")


__all__ = ["ConfigError", "RunConfig", "parse_config", "check_for_subcommand", "SCHEMA",
           "SUBCOMMANDS", "SEED_ENV", "split_potentials"]
