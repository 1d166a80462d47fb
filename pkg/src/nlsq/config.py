"""Run configuration: sectioned key = value text (INI dialect of configparser).

Every key is typed and validated; unknown sections or keys are errors that
name the offending line.  See README for the grammar.
"""
from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    def __init__(self, msg, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(key)
        super().__init__(f"{': '.join([', '.join(where), msg]) if where else msg}")
        self.line = line
        self.key = key


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s):
    return [float(x) for x in re.split(r"[,\s]+", s.strip()) if x]


def _axes(s):
    """'x1:8:32, x2:64:256'  ->  [(name, L, m), ...]"""
    out = []
    for item in s.split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) != 3:
            raise ValueError(f"axis {item!r} is not name:L:m")
        out.append((parts[0].strip(), float(parts[1]), int(parts[2])))
    if not out:
        raise ValueError("no axes given")
    return out


def _opt_float(s):
    return None if s.strip().lower() in ("", "none") else float(s)


def _choice(*opts):
    def f(s):
        s = s.strip()
        if s not in opts:
            raise ValueError(f"{s!r} not in {', '.join(opts)}")
        return s
    return f


# section -> key -> (parser, default)
SCHEMA = {
    "model": {
        "n": (int, 2),
        "kappa": (float, 1.0),
        "potential": (_choice("none", "V1", "V2"), "V2"),
        "potential_scale": (float, 1.0),
        "interaction": (_bool, True),
    },
    "grid": {
        "geometry": (_choice("cartesian", "cylindrical", "radial"), "cartesian"),
        "axes": (_axes, [("x1", 8.0, 32), ("x2", 64.0, 256)]),
        "rdim": (int, 0),
    },
    "constraint": {
        "kind": (_choice("product", "ellipse", "sphere_weighted", "free"), "product"),
        "mu1": (float, 0.1),
        "mu2": (float, 0.1),
        "w": (float, 1.0),
        "mu": (float, 0.1),
        "N2": (float, 1.0),
        "ball_cap": (_opt_float, None),
        "system": (_choice("systemq", "systemq2"), "systemq2"),
    },
    "solver": {
        "dt": (float, 1.0),
        "grad_tol": (float, 1e-8),
        "max_iter": (int, 5000),
        "initializer": (_choice("eigenmode_product", "gaussian"), "eigenmode_product"),
        "init_width": (float, 2.0),
        "noise": (float, 0.0),
    },
    "evolve": {
        "dt": (float, 1e-3),
        "T": (float, 1.0),
        "substeps": (int, 1),
        "adaptive": (_bool, True),
        "dt_floor": (_opt_float, None),
        "gmax_factor": (float, 1e3),
        "stride": (int, 10),
        "initial": (_choice("groundstate", "soliton_scaled", "gaussian", "snapshot"), "gaussian"),
        "amplitude": (float, 1.0),
        "lambda": (float, 1.0),
        "snapshot": (str, ""),
    },
    "reduce": {
        "coefficients": (_choice("overlap", "printed_inf", "printed_sn"), "overlap"),
        "c1": (_opt_float, None),
        "c2": (_opt_float, None),
    },
    "eigs": {
        "count": (int, 4),
    },
    "curve": {
        "t": (_floats, [100.0, 1000.0, 10000.0]),
        "printed_coefficient": (_bool, False),
    },
    "sweep": {
        "command": (_choice("groundstate", "compare", "curve", "reduce1d"), "groundstate"),
        "parameter": (_choice("mu", "kappa", "t", "N"), "mu"),
        "values": (_floats, []),
        "axial_L": (_floats, []),
        "axial_m": (_floats, []),
        "workers": (int, 1),
    },
    "output": {
        "directory": (str, "out"),
        "formats": (str, "json,csv,nlsq"),
        "snapshot_stride": (int, 0),
    },
    "run": {
        "seed": (int, 0),
    },
}


# worker count changes scheduling only, never results
_NOT_IN_ID = {("sweep", "workers")}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)   # section -> key -> parsed value
    raw: dict = field(default_factory=dict)      # section -> key -> text as given

    def __getitem__(self, section):
        return self.values[section]

    def get(self, section, key):
        return self.values[section][key]

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]

    def with_seed(self, seed: int) -> "RunConfig":
        raw = {s: dict(kv) for s, kv in self.raw.items()}
        raw.setdefault("run", {})["seed"] = str(int(seed))
        return parse_config(serialize_raw(raw))

    def with_value(self, section, key, text) -> "RunConfig":
        raw = {s: dict(kv) for s, kv in self.raw.items()}
        raw.setdefault(section, {})[key] = str(text)
        return parse_config(serialize_raw(raw))

    def serialize(self) -> str:
        return serialize_raw(self.raw)

    def run_id(self) -> str:
        """Content hash of the canonical form (all keys, defaults filled; scheduling knobs left out)."""
        canon = []
        for s in sorted(self.values):
            for k in sorted(self.values[s]):
                if (s, k) in _NOT_IN_ID:
                    continue
                canon.append(f"{s}.{k}={self.values[s][k]!r}")
        return hashlib.sha256("\n".join(canon).encode()).hexdigest()[:16]

    def rng(self, index: int = 0) -> np.random.Generator:
        """Independent stream for task ``index``; does not depend on scheduling order."""
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(int(index),)))


def serialize_raw(raw: dict) -> str:
    lines = []
    for s in SCHEMA:
        if s in raw and raw[s]:
            lines.append(f"[{s}]")
            for k in SCHEMA[s]:
                if k in raw[s]:
                    lines.append(f"{k} = {raw[s][k]}")
            lines.append("")
    return "\n".join(lines)


def _line_index(text: str):
    """(section, key) -> 1-based line number, plus section header lines."""
    idx, sec = {}, None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            sec = m.group(1).strip()
            idx.setdefault((sec, None), i)
            continue
        key = re.split(r"[=:]", s, 1)[0].strip()
        idx.setdefault((sec, key), i)
    return idx


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#",), strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e).splitlines()[0], getattr(e, "lineno", None)) from None
    lines = _line_index(text)
    values, raw = {}, {}
    for s in cp.sections():
        if s not in SCHEMA:
            raise ConfigError(f"unknown section [{s}]", lines.get((s, None)))
    for s, keys in SCHEMA.items():
        values[s] = {k: d for k, (_, d) in keys.items()}
        if not cp.has_section(s):
            continue
        raw[s] = {}
        for k, text_v in cp.items(s):
            if k not in keys:
                raise ConfigError(f"unknown key in [{s}]", lines.get((s, k)), k)
            try:
                values[s][k] = keys[k][0](text_v)
            except (TypeError, ValueError) as e:
                raise ConfigError(str(e), lines.get((s, k)), f"{s}.{k}") from None
            raw[s][k] = text_v.strip()
    _validate(values, lines)
    return RunConfig(values, raw)


def _validate(v, lines):
    def bad(s, k, msg):
        raise ConfigError(msg, lines.get((s, k)), f"{s}.{k}")

    m = v["model"]
    if not 1 <= m["n"] <= 5:
        bad("model", "n", "n must lie in [1, 5]")
    for s, k in (("model", "kappa"), ("model", "potential_scale"), ("evolve", "dt"), ("evolve", "T"),
                 ("solver", "grad_tol"), ("solver", "dt")):
        if not (v[s][k] > 0 and math.isfinite(v[s][k])):
            bad(s, k, "must be positive and finite")
    if m["potential"] == "V2" and m["n"] < 2:
        bad("model", "potential", "V2 needs n >= 2")
    c = v["constraint"]
    if c["kind"] == "product" and not (c["mu1"] > 0 and c["mu2"] > 0):
        bad("constraint", "mu1", "product constraint needs positive masses")
    if v["evolve"]["dt"] > v["evolve"]["T"]:
        bad("evolve", "dt", "dt must not exceed T")
    if v["output"]["snapshot_stride"] < 0:
        bad("output", "snapshot_stride", "must be >= 0")
    if v["sweep"]["workers"] < 1:
        bad("sweep", "workers", "need at least one worker")
    if v["run"]["seed"] < 0 or v["run"]["seed"] >= 2 ** 64:
        bad("run", "seed", "seed must be an unsigned 64-bit integer")
    fmts = {f.strip() for f in v["output"]["formats"].split(",") if f.strip()}
    if not fmts <= {"json", "csv", "nlsq"}:
        bad("output", "formats", f"unknown formats {sorted(fmts - {'json', 'csv', 'nlsq'})}")


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    return parse_config(text)
