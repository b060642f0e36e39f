"""Experiment configuration: YAML parsing with line-precise errors, presets and model/trainer construction."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigurationError
from .initialization import SCHEMES, InitConfig
from .models import CpikanSpec, PirateNetSpec, RgaKanSpec, build_model
from .problems import PROBLEM_IDS, get_problem
from .problems.functions import FUNCTION_DIMS
from .trainer import AnnealConfig, CausalConfig, RadConfig, RbaConfig, Schedule, TrainConfig

ARCHITECTURES = ("rga_kan", "cpikan", "piratenet")
ADAPTIVE = ("rba", "rad", "causal", "anneal")

PRESETS = {
    "full": {"adaptive": {"rba": True, "rad": True, "causal": True, "anneal": True}},
    "none": {"adaptive": {"rba": False, "rad": False, "causal": False, "anneal": False}},
    "rba-only": {"adaptive": {"rba": True, "rad": False, "causal": False, "anneal": False}},
    "rad-only": {"adaptive": {"rba": False, "rad": True, "causal": False, "anneal": False}},
    "causal-only": {"adaptive": {"rba": False, "rad": False, "causal": True, "anneal": False}},
    "anneal-only": {"adaptive": {"rba": False, "rad": False, "causal": False, "anneal": True}},
}

SWEEPS = {
    "depth": {"depth": [2, 4, 6, 8, 10, 12], "width": [8, 16, 32]},
    "init-grid": {"depth": [2, 3, 4, 5], "width": [2, 4, 8, 16, 32, 64]},
}

DEFAULTS = {
    "name": "experiment",
    "problem": None,
    "function": None,
    "problem_params": {},
    "literal": False,
    "architecture": "rga_kan",
    "width": 16,
    "depth": 6,
    "degree": 5,
    "sine_terms": 5,
    "alpha0": 0.0,
    "beta0": 0.0,
    "init": {"scheme": "glorot_like", "gain": 1.0, "input_gain": float(np.sqrt(3.0))},
    "preset": None,
    "adaptive": {"rba": True, "rad": True, "causal": True, "anneal": True},
    "rba": {"gamma": 0.999, "eta": 0.01},
    "rad": {"delta": 1.0, "c": 1.0, "period": 2000},
    "causal": {"segments": 32, "epsilon": 1.0},
    "anneal": {"a": 0.9, "period": 1000},
    "schedule": {"peak": 1e-3, "warmup": 1000, "decay": 0.9, "period": 2000},
    "iterations": 20000,
    "n_pde": 1024,
    "n_ic": 64,
    "pool_resolution": [400, 400],
    "physics_init": True,
    "log_every": 100,
    "diag_every": 100,
    "seeds": [0],
    "reference": {"source": "auto", "path": None, "resolution": [101, 101]},
    "checkpoint": True,
    "output": "runs/experiment",
}

_TYPES = {bool: "a boolean", int: "an integer", float: "a number", str: "a string", list: "a list", dict: "a mapping"}


def _line_index(node, path=(), out=None) -> dict:
    """Map dotted key paths to 1-based source lines from a composed YAML node tree."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            p = path + (str(key.value),)
            out[".".join(p)] = key.start_mark.line + 1
            _line_index(value, p, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            p = path + (str(i),)
            out[".".join(p)] = item.start_mark.line + 1
            _line_index(item, p, out)
    return out


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class RunConfig:
    """Validated experiment description; ``data`` holds the full settings tree."""

    data: dict
    source: str = "<config>"
    lines: dict = field(default_factory=dict, repr=False)

    def __getattr__(self, name):
        data = self.__dict__.get("data", {})
        if name in data:
            return data[name]
        raise AttributeError(name)

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.data == other.data

    # -- construction -----------------------------------------------------

    @classmethod
    def from_dict(cls, raw: dict, source: str = "<config>", lines: dict | None = None) -> "RunConfig":
        cfg = cls(data={}, source=source, lines=lines or {})
        if not isinstance(raw, dict):
            raise ConfigurationError(f"{source}: top level must be a mapping")
        cfg._check_keys(raw, DEFAULTS, ())
        merged = _merge(DEFAULTS, raw)
        preset = merged.get("preset")
        if preset is not None:
            if preset not in PRESETS:
                cfg._fail("preset", f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
            merged = _merge(merged, PRESETS[preset])
        cfg.data = merged
        cfg._validate()
        return cfg

    @classmethod
    def from_yaml(cls, text: str, source: str = "<config>") -> "RunConfig":
        try:
            node = yaml.compose(text)
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"{source}:{mark.line + 1}" if mark is not None else source
            raise ConfigurationError(f"{where}: {getattr(exc, 'problem', None) or exc}") from None
        return cls.from_dict(raw or {}, source, _line_index(node) if node is not None else {})

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        return cls.from_yaml(path.read_text(), str(path))

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=False)

    def with_overrides(self, **changes) -> "RunConfig":
        return RunConfig.from_dict(_merge(self.data, changes), self.source)

    # -- validation -------------------------------------------------------

    def _fail(self, path: str, message: str):
        line = self.lines.get(path)
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigurationError(f"{where}: field '{path}': {message}")

    def _check_keys(self, raw: dict, schema: dict, path: tuple):
        for key, value in raw.items():
            p = ".".join(path + (str(key),))
            if key not in schema:
                self._fail(p, f"unknown field; expected one of {sorted(schema)}")
            if isinstance(schema[key], dict) and schema[key] and key != "problem_params":
                if not isinstance(value, dict):
                    self._fail(p, "expected a mapping")
                self._check_keys(value, schema[key], path + (str(key),))

    def _typed(self, path: str, kind, positive=False, nonneg=False):
        value = self.data
        for part in path.split("."):
            value = value[part]
        ok = isinstance(value, kind) and not (kind in (int, float) and isinstance(value, bool))
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            ok = True
        if not ok:
            self._fail(path, f"expected {_TYPES[kind]}, got {value!r}")
        if positive and not value > 0:
            self._fail(path, f"must be positive, got {value!r}")
        if nonneg and not value >= 0:
            self._fail(path, f"must be non-negative, got {value!r}")
        return value

    def _validate(self):
        d = self.data
        if (d["problem"] is None) == (d["function"] is None):
            self._fail("problem", "set exactly one of 'problem' and 'function'")
        if d["problem"] is not None and d["problem"] not in PROBLEM_IDS:
            self._fail("problem", f"unknown problem {d['problem']!r}; choose from {list(PROBLEM_IDS)}")
        if d["function"] is not None:
            if d["function"] not in FUNCTION_DIMS:
                self._fail("function", f"unknown function {d['function']!r}; choose from {sorted(FUNCTION_DIMS)}")
            if d["architecture"] != "cpikan":
                self._fail("architecture", "function fitting is supported for cpikan only")
        if d["architecture"] not in ARCHITECTURES:
            self._fail("architecture", f"unknown architecture {d['architecture']!r}; choose from {list(ARCHITECTURES)}")
        for name in ("width", "degree", "sine_terms", "iterations", "n_pde", "n_ic", "log_every"):
            self._typed(name, int, positive=name != "iterations", nonneg=True)
        self._typed("depth", int, nonneg=True)
        self._typed("diag_every", int, nonneg=True)
        for name in ("alpha0", "beta0"):
            self._typed(name, float)
        for name in ("literal", "physics_init", "checkpoint"):
            self._typed(name, bool)
        self._typed("name", str)
        self._typed("output", str)
        if d["init"]["scheme"] not in SCHEMES:
            self._fail("init.scheme", f"unknown scheme {d['init']['scheme']!r}; choose from {list(SCHEMES)}")
        self._typed("init.gain", float, positive=True)
        self._typed("init.input_gain", float, positive=True)
        for k in ADAPTIVE:
            self._typed(f"adaptive.{k}", bool)
        self._typed("rba.gamma", float, nonneg=True)
        self._typed("rba.eta", float, nonneg=True)
        self._typed("rad.delta", float, nonneg=True)
        self._typed("rad.c", float, nonneg=True)
        self._typed("rad.period", int, positive=True)
        self._typed("causal.segments", int, positive=True)
        self._typed("causal.epsilon", float, nonneg=True)
        a = self._typed("anneal.a", float, nonneg=True)
        if a > 1:
            self._fail("anneal.a", f"must lie in [0, 1], got {a}")
        self._typed("anneal.period", int, positive=True)
        self._typed("schedule.peak", float, nonneg=True)
        self._typed("schedule.warmup", int, nonneg=True)
        dec = self._typed("schedule.decay", float, positive=True)
        if dec > 1:
            self._fail("schedule.decay", f"must lie in (0, 1], got {dec}")
        self._typed("schedule.period", int, positive=True)
        seeds = self._typed("seeds", list)
        if not seeds or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
            self._fail("seeds", "expected a non-empty list of integers")
        res = self._typed("pool_resolution", list)
        if not all(isinstance(n, int) and n >= 2 for n in res):
            self._fail("pool_resolution", "expected integers >= 2")
        if d["reference"]["source"] not in ("auto", "analytic", "spectral", "file", "none"):
            self._fail("reference.source", "expected auto, analytic, spectral, file or none")
        if d["reference"]["source"] == "file" and not d["reference"]["path"]:
            self._fail("reference.path", "required when reference.source is 'file'")
        if d["problem"] is not None:
            try:
                problem = self.problem_definition()
            except ConfigurationError as exc:
                self._fail("problem_params", str(exc))
            if len(res) != problem.dim:
                self._fail("pool_resolution", f"expected {problem.dim} entries for {problem.id}")
            if d["n_pde"] > int(np.prod(res)):
                self._fail("n_pde", f"exceeds the pool size {int(np.prod(res))}")
        try:
            self.model_spec()
        except ConfigurationError as exc:
            self._fail("architecture", str(exc))

    # -- builders ---------------------------------------------------------

    def problem_definition(self):
        d = self.data
        return get_problem(d["problem"], literal=d["literal"], **d["problem_params"])

    def model_spec(self, depth: int | None = None, width: int | None = None):
        d = self.data
        depth = d["depth"] if depth is None else depth
        width = d["width"] if width is None else width
        init = InitConfig(scheme=d["init"]["scheme"], gain=float(d["init"]["gain"]),
                          input_gain=float(d["init"]["input_gain"]))
        if d["function"] is not None:
            return CpikanSpec(d_in=FUNCTION_DIMS[d["function"]], width=width, depth=depth, degree=d["degree"],
                              init=init)
        problem = self.problem_definition()
        boundary = problem.boundary_spec()
        arch = d["architecture"]
        if arch == "rga_kan":
            return RgaKanSpec(d_in=problem.dim, width=width, blocks=depth, degree=d["degree"],
                              sine_terms=d["sine_terms"], alpha0=float(d["alpha0"]), beta0=float(d["beta0"]),
                              boundary=boundary, init=init)
        if arch == "cpikan":
            return CpikanSpec(d_in=problem.dim, width=width, depth=depth, degree=d["degree"], boundary=boundary,
                              init=init)
        return PirateNetSpec(d_in=problem.dim, width=width, blocks=depth, alpha0=float(d["alpha0"]),
                             boundary=boundary)

    def build_model(self, depth: int | None = None, width: int | None = None):
        return build_model(self.model_spec(depth, width))

    def train_config(self) -> TrainConfig:
        d = self.data
        on = d["adaptive"]
        return TrainConfig(
            iterations=d["iterations"],
            schedule=Schedule(**{k: (int(v) if k in ("warmup", "period") else float(v))
                                 for k, v in d["schedule"].items()}),
            pool_resolution=tuple(d["pool_resolution"]),
            n_pde=d["n_pde"],
            n_ic=d["n_ic"],
            rad=RadConfig(delta=float(d["rad"]["delta"]), c=float(d["rad"]["c"]), period=d["rad"]["period"],
                          n_pde=d["n_pde"]) if on["rad"] else None,
            rba=RbaConfig(gamma=float(d["rba"]["gamma"]), eta=float(d["rba"]["eta"])) if on["rba"] else None,
            causal=CausalConfig(segments=d["causal"]["segments"], epsilon=float(d["causal"]["epsilon"]))
            if on["causal"] else None,
            anneal=AnnealConfig(a=float(d["anneal"]["a"]), period=d["anneal"]["period"]) if on["anneal"] else None,
            physics_init=d["physics_init"],
            log_every=d["log_every"],
            diag_every=d["diag_every"],
        )
