"""Declarative run configuration (JSON, versioned) and its validation."""

import itertools
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

from .errors import InvalidParam
from .synth import GENERATORS
from .trees import RULES, BuildConfig, SplitRule

SCHEMA_VERSION = 1
TASKS = ("profile", "quantize", "nn", "regress", "dimest")
PRESET_DIR = Path(__file__).with_name("presets")


class ConfigError(InvalidParam):
    """Config problem, reported with the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class TreeSpec:
    rule: str
    min_size: int = 10
    max_depth: int = 64
    c: float = 10.0
    enable_distance_split: bool = True
    bag_size: int = 20
    restarts: int = 5
    max_iters: int = 100
    label: Optional[str] = None

    @property
    def name(self) -> str:
        return self.label or self.rule

    def build_config(self, seed: int) -> BuildConfig:
        rule = SplitRule(self.rule, self.bag_size, self.restarts, self.max_iters)
        return BuildConfig(rule, self.min_size, self.max_depth, self.c, self.enable_distance_split, seed)


@dataclass(frozen=True)
class CovdimSpec:
    num_radii: int = 20
    epsilon: List[float] = field(default_factory=lambda: [0.1, 0.01])
    center_cap: Optional[int] = 2000


@dataclass(frozen=True)
class RunConfig:
    dataset: dict
    trees: List[TreeSpec]
    tasks: List[str]
    seed: int
    folds: int = 10
    covdim: CovdimSpec = field(default_factory=CovdimSpec)
    output_dir: str = "out"
    max_level: Optional[int] = None
    slope_window: List[int] = field(default_factory=lambda: [8, 13])
    version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    def dataset_variants(self):
        """Expand list-valued generator params into one dataset spec per combination."""
        ds = self.dataset
        if "path" in ds:
            return [dict(ds)]
        params = ds.get("params", {})
        keys = sorted(params)
        axes = [params[k] if isinstance(params[k], list) else [params[k]] for k in keys]
        return [
            {"generator": ds["generator"], "params": dict(zip(keys, combo))}
            for combo in itertools.product(*axes)
        ]


def _expect(cond, path, message):
    if not cond:
        raise ConfigError(path, message)


def _int(obj, key, path, minimum=None, required=False, default=None):
    if key not in obj:
        _expect(not required, f"{path}.{key}", "required field is missing")
        return default
    val = obj[key]
    if val is None and not required:
        return default
    _expect(isinstance(val, int) and not isinstance(val, bool), f"{path}.{key}", f"expected an integer, got {val!r}")
    if minimum is not None:
        _expect(val >= minimum, f"{path}.{key}", f"must be >= {minimum}")
    return val


def parse_config(raw: dict) -> RunConfig:
    """Validate a raw JSON object and fill defaults."""
    _expect(isinstance(raw, dict), "$", "config must be a JSON object")
    if "config" in raw and "dataset" not in raw:
        # a report.json embeds the resolved config under "config"
        raw = raw["config"]
    known = {"version", "dataset", "trees", "covdim", "tasks", "folds", "seed", "output_dir", "max_level", "slope_window"}
    for key in raw:
        _expect(key in known, f"$.{key}", "unknown field")
    version = _int(raw, "version", "$", default=SCHEMA_VERSION)
    _expect(version == SCHEMA_VERSION, "$.version", f"unsupported schema version {version}")
    seed = _int(raw, "seed", "$", minimum=0, required=True)
    _expect(seed < 2**64, "$.seed", "must fit in 64 bits")

    ds = raw.get("dataset")
    _expect(isinstance(ds, dict), "$.dataset", "required object is missing")
    if "path" in ds:
        _expect(isinstance(ds["path"], str), "$.dataset.path", "expected a string")
        _expect(set(ds) <= {"path"}, "$.dataset", "give either path or generator+params")
    else:
        gen = ds.get("generator")
        _expect(gen in GENERATORS, "$.dataset.generator", f"expected one of {sorted(GENERATORS)}, got {gen!r}")
        params = ds.get("params", {})
        _expect(isinstance(params, dict), "$.dataset.params", "expected an object")
        _expect(set(ds) <= {"generator", "params"}, "$.dataset", "unknown field")
        ds = {"generator": gen, "params": params}

    trees_raw = raw.get("trees", [])
    _expect(isinstance(trees_raw, list), "$.trees", "expected a list")
    trees = []
    spec_fields = set(TreeSpec.__dataclass_fields__)
    for i, t in enumerate(trees_raw):
        p = f"$.trees[{i}]"
        if isinstance(t, str):
            t = {"rule": t}
        _expect(isinstance(t, dict), p, "expected an object or rule name")
        for key in t:
            _expect(key in spec_fields, f"{p}.{key}", "unknown field")
        _expect(t.get("rule") in RULES, f"{p}.rule", f"expected one of {RULES}, got {t.get('rule')!r}")
        for key in ("min_size", "bag_size", "restarts", "max_iters"):
            _int(t, key, p, minimum=1)
        _int(t, "max_depth", p, minimum=0)
        if "c" in t:
            _expect(isinstance(t["c"], (int, float)) and t["c"] > 4, f"{p}.c", "must be a number > 4")
        trees.append(TreeSpec(**t))
    names = [t.name for t in trees]
    _expect(len(set(names)) == len(names), "$.trees", "tree labels must be unique (set 'label')")

    tasks = raw.get("tasks")
    _expect(isinstance(tasks, list) and tasks, "$.tasks", "need a non-empty list of tasks")
    for i, task in enumerate(tasks):
        _expect(task in TASKS, f"$.tasks[{i}]", f"expected one of {TASKS}, got {task!r}")
    _expect(len(set(tasks)) == len(tasks), "$.tasks", "duplicate task")
    tree_tasks = set(tasks) - {"dimest"}
    _expect(not tree_tasks or trees, "$.trees", "tasks other than dimest need at least one tree")

    folds = _int(raw, "folds", "$", minimum=2, default=10)
    max_level = _int(raw, "max_level", "$", minimum=0)
    window = raw.get("slope_window", [8, 13])
    _expect(
        isinstance(window, list) and len(window) == 2 and all(isinstance(w, int) for w in window) and window[1] > window[0] >= 0,
        "$.slope_window", "expected [l0, l1] with 0 <= l0 < l1",
    )

    cov_raw = raw.get("covdim", {})
    _expect(isinstance(cov_raw, dict), "$.covdim", "expected an object")
    for key in cov_raw:
        _expect(key in {"num_radii", "epsilon", "center_cap"}, f"$.covdim.{key}", "unknown field")
    num_radii = _int(cov_raw, "num_radii", "$.covdim", minimum=1, default=20)
    eps = cov_raw.get("epsilon", [0.1, 0.01])
    if isinstance(eps, (int, float)):
        eps = [eps]
    _expect(
        isinstance(eps, list) and eps and all(isinstance(e, (int, float)) and 0 < e < 1 for e in eps),
        "$.covdim.epsilon", "expected values in (0, 1)",
    )
    cap = cov_raw.get("center_cap", 2000)
    _expect(cap is None or (isinstance(cap, int) and cap >= 1), "$.covdim.center_cap", "expected a positive integer or null")

    out = raw.get("output_dir", "out")
    _expect(isinstance(out, str) and out, "$.output_dir", "expected a path string")
    return RunConfig(
        dataset=ds, trees=trees, tasks=list(tasks), seed=seed, folds=folds,
        covdim=CovdimSpec(num_radii, [float(e) for e in eps], cap),
        output_dir=out, max_level=max_level, slope_window=list(window), version=version,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(str(path), "config file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    return parse_config(raw)


def preset_names():
    return sorted(p.stem for p in PRESET_DIR.glob("*.json"))


def preset_path(name: str) -> Path:
    path = PRESET_DIR / f"{name}.json"
    if not path.exists():
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {preset_names()}")
    return path
