"""Run configuration: YAML file with nested keys, validated as a whole."""
import copy
import hashlib
import json
import warnings
from dataclasses import dataclass

import yaml

from .channel import SystemParams, derive_constants
from .errors import ConfigError
from .jammer import STRATEGY_NAMES, make_jammer

EXPERIMENTS = ("simulate", "sweep", "verify-lemma1", "verify-lemma2", "verify-lemma3",
               "verify-lemma4", "verify-lemma5", "verify-fvw", "discrete", "constants")
MODES = ("auto", "explicit", "ensemble")

DEFAULTS = {
    "experiment": "simulate",
    "params": {"P": 1.0, "Lam": 1.0, "noise_var": 1.0, "state_var": 1.0, "n": 100},
    "code": {
        "R": None,              # bits/use; overrides R_over_C
        "R_over_C": 0.5,
        "R_tilde": None,        # None: C_tilde + |C - R| / 2
        "delta0": 0.05,
        "mode": "auto",
        "messages": 8,          # None: every message
        "codebook_every": 100,
        "max_codewords": 2 ** 22,
        "max_bytes": 2 ** 30,   # memory cap for one explicit codebook
    },
    "jammers": [{"name": "sphere_uniform"}],
    "trials": 1000,
    "master_seed": 0,
    "workers": None,        # None: os.cpu_count()
    "sweep": {"R_over_C": [0.5, 0.8], "rates": None, "n_list": [50, 100, 200]},
    "verify": {
        "n_list": [100, 400],
        "delta": 0.05,
        "lemma4_delta0": 0.01,
        "R_tilde_offsets": [0.1],
        "lemma3_pairs": [[50, 0.2], [100, 0.3], [100, 0.5]],
        "draws": 1_000_000,
        "grid_resolution": 1000,
        "param_draws": 100,
        "a_pairs": [[0.2, 0.1], [0.1, 0.2]],
        "n_max": 200,
    },
    "discrete": {"spec": None, "outer_grid": 6, "inner_grid": 6, "refine": True},
    "output": {"dir": "results", "csv": "results.csv", "json": "report.json",
               "manifest": "manifest.json"},
}


def _merge(base, over, path, problems):
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if k not in base:
            problems.append(f"unknown key {'.'.join(path + [k])}")
        elif isinstance(base[k], dict) and base[k] and k != "params":
            if not isinstance(v, dict):
                problems.append(f"{'.'.join(path + [k])} must be a mapping")
            else:
                out[k] = _merge(base[k], v, path + [k], problems)
        elif k == "params":
            if not isinstance(v, dict):
                problems.append("params must be a mapping")
            else:
                out[k] = _merge(base[k], v, ["params"], problems)
        else:
            out[k] = v
    return out


@dataclass
class RunConfig:
    params: SystemParams
    code: dict
    jammers: list
    experiment: str
    trials: int
    master_seed: int
    workers: int | None
    sweep: dict
    verify: dict
    discrete: dict
    output: dict

    def to_dict(self):
        p = self.params
        return {
            "experiment": self.experiment,
            "params": {"P": p.P, "Lam": p.Lam, "noise_var": p.noise_var,
                       "state_var": p.state_var, "n": p.n},
            "code": copy.deepcopy(self.code),
            "jammers": copy.deepcopy(self.jammers),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "workers": self.workers,
            "sweep": copy.deepcopy(self.sweep),
            "verify": copy.deepcopy(self.verify),
            "discrete": copy.deepcopy(self.discrete),
            "output": copy.deepcopy(self.output),
        }

    def to_yaml(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def strategies(self):
        return [make_jammer(j["name"], **{k: v for k, v in j.items() if k != "name"})
                for j in self.jammers]

    def message_rate(self, params=None):
        p = params or self.params
        if self.code["R"] is not None:
            return float(self.code["R"])
        return float(self.code["R_over_C"]) * derive_constants(p).C


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def build_config(data):
    """Validate a nested mapping and return a :class:`RunConfig`.

    All violations are collected and raised together as :class:`ConfigError`.
    """
    problems = []
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(["top level must be a mapping"])
    d = _merge(DEFAULTS, data, [], problems)

    params = None
    pd = d["params"]
    for k in ("P", "Lam", "noise_var", "state_var"):
        if not _is_num(pd[k]):
            problems.append(f"params.{k} must be a number (got {pd[k]!r})")
    if not problems or all(not p.startswith("params.") for p in problems):
        try:
            params = SystemParams(float(pd["P"]), float(pd["Lam"]), float(pd["noise_var"]),
                                  float(pd["state_var"]), pd["n"])
        except ValueError as exc:
            problems.extend(f"params.{msg.strip()}" for msg in str(exc).split(";"))

    if d["experiment"] not in EXPERIMENTS:
        problems.append(f"experiment must be one of {EXPERIMENTS} (got {d['experiment']!r})")
    if not _is_int(d["trials"]) or d["trials"] < 1:
        problems.append(f"trials must be a positive integer (got {d['trials']!r})")
    if not _is_int(d["master_seed"]) or d["master_seed"] < 0:
        problems.append(f"master_seed must be a non-negative integer (got {d['master_seed']!r})")
    if d["workers"] is not None and (not _is_int(d["workers"]) or d["workers"] < 1):
        problems.append(f"workers must be a positive integer or null (got {d['workers']!r})")

    code = d["code"]
    for k in ("R", "R_tilde"):
        if code[k] is not None and (not _is_num(code[k]) or code[k] < 0):
            problems.append(f"code.{k} must be a non-negative number or null")
    if not _is_num(code["R_over_C"]) or code["R_over_C"] < 0:
        problems.append("code.R_over_C must be a non-negative number")
    if not _is_num(code["delta0"]) or not code["delta0"] > 0:
        problems.append("code.delta0 must be positive")
    if code["mode"] not in MODES:
        problems.append(f"code.mode must be one of {MODES}")
    if code["messages"] is not None and (not _is_int(code["messages"]) or code["messages"] < 1):
        problems.append("code.messages must be a positive integer or null")
    for k in ("codebook_every", "max_codewords", "max_bytes"):
        if not _is_int(code[k]) or code[k] < 1:
            problems.append(f"code.{k} must be a positive integer")

    jammers = d["jammers"]
    if not isinstance(jammers, list) or not jammers:
        problems.append("jammers must be a nonempty list")
    else:
        for i, j in enumerate(jammers):
            if not isinstance(j, dict) or "name" not in j:
                problems.append(f"jammers[{i}] needs a name")
                continue
            if j["name"] not in STRATEGY_NAMES:
                problems.append(f"jammers[{i}]: unknown jammer {j['name']!r}; "
                                f"choose from {STRATEGY_NAMES}")
                continue
            try:
                make_jammer(j["name"], **{k: v for k, v in j.items() if k != "name"})
            except (ValueError, TypeError) as exc:
                problems.append(f"jammers[{i}]: {exc}")

    sw = d["sweep"]
    if sw["rates"] is None and not sw["R_over_C"]:
        problems.append("sweep needs rates or R_over_C")
    if not sw["n_list"] or not all(_is_int(n) and n >= 1 for n in sw["n_list"]):
        problems.append("sweep.n_list must be a nonempty list of positive integers")

    if problems:
        raise ConfigError(problems)

    cfg = RunConfig(params=params, code=code, jammers=jammers, experiment=d["experiment"],
                    trials=d["trials"], master_seed=d["master_seed"], workers=d["workers"],
                    sweep=sw, verify=d["verify"], discrete=d["discrete"], output=d["output"])
    if code["R_tilde"] is not None:
        Ct = derive_constants(params).C_tilde
        if code["R_tilde"] <= Ct:
            warnings.warn(
                f"code.R_tilde={code['R_tilde']:.6g} is not above the binning threshold "
                f"C_tilde={Ct:.6g}; encoding success will not approach 1 as n grows",
                UserWarning, stacklevel=2)
    return cfg


def parse_config(path):
    with open(path) as fh:
        return build_config(yaml.safe_load(fh))


def set_key(data, dotted, value):
    """Apply one ``a.b.c=value`` override to a nested mapping in place."""
    keys = dotted.split(".")
    node = data
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value
