"""Run configuration: a YAML (or JSON) file with the blocks ``model``, ``sim``,
``solver``, ``lambda_grid``, ``experiment`` and ``bounds``.

Unknown keys anywhere are rejected.  The resolved configuration (all
defaults filled in) is hashed, and every report carries that hash.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from .estimators import SolverConfig
from .models import model_from_config
from .theory import BoundInputs

__all__ = [
    "ConfigError",
    "SimBlock",
    "LambdaGridBlock",
    "ExperimentBlock",
    "RunConfig",
    "load_config",
    "config_hash",
]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimBlock:
    T: float = 20.0
    steps_per_unit: int = 100
    seed: int = 0
    burn_in: float = 10.0
    x0: object = "burned-in"


@dataclass(frozen=True)
class LambdaGridBlock:
    """Explicit ``values`` win; otherwise ``count`` points between ``max``
    (default: |grad L(0)|_inf on the training window) and ``min`` (default
    max * ``ratio``), log-spaced unless ``log_spaced`` is false."""

    min: float | None = None
    max: float | None = None
    count: int = 30
    ratio: float = 1e-3
    log_spaced: bool = True
    values: list | None = None


@dataclass(frozen=True)
class ExperimentBlock:
    name: str = "run"
    trials: int = 1
    output_dir: str = "runs"
    workers: int = 1
    # true parameter generation
    sparsity: float = 0.35
    s0: int | None = None
    magnitude: tuple = (0.5, 2.0)
    signs: str = "random"
    zero_tol: float = 1e-8
    # penalty choice
    lambda_rule: str = "cv"
    lambda_scale: float = 1.0
    lam: float | None = None
    train: tuple = (0.0, 0.8)
    validation: tuple = (0.9, 1.0)
    adaptive_alpha: float | None = None
    # scaling study
    T_grid: tuple = (25.0, 50.0, 100.0, 200.0, 400.0)
    # verify
    threshold: float = 1.0
    re_directions: int = 2000
    concentration_trials: int = 0
    concentration_T: float = 50.0
    mu_grid: tuple = (0.5, 1.0, 2.0)
    antithetic: bool = True
    # input path for fit / cv
    path: str | None = None

    def __post_init__(self):
        if self.trials < 1 or self.workers < 1:
            raise ConfigError("trials and workers must be >= 1")
        if not 0 < self.sparsity <= 1:
            raise ConfigError("sparsity must lie in (0, 1]")
        lo, hi = self.magnitude
        if not 0 < lo <= hi:
            raise ConfigError("magnitude must be [low, high] with 0 < low <= high")
        if self.signs not in ("random", "positive"):
            raise ConfigError("signs must be 'random' or 'positive'")
        if self.lambda_rule not in ("cv", "theory", "fixed"):
            raise ConfigError("lambda_rule must be 'cv', 'theory' or 'fixed'")
        if self.lambda_rule == "fixed" and self.lam is None:
            raise ConfigError("lambda_rule 'fixed' needs 'lam'")


def _build(cls, block, where):
    block = {} if block is None else dict(block)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(block) - known)
    if unknown:
        raise ConfigError(f"unknown keys in '{where}': {unknown}")
    for key in ("magnitude", "train", "validation", "T_grid", "mu_grid"):
        if key in block and isinstance(block[key], list):
            block[key] = tuple(block[key])
    try:
        return cls(**block)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{where}' block: {exc}") from exc


_BLOCKS = ("model", "sim", "solver", "lambda_grid", "experiment", "bounds")


@dataclass(frozen=True)
class RunConfig:
    model: dict
    sim: SimBlock = field(default_factory=SimBlock)
    solver: SolverConfig = field(default_factory=SolverConfig)
    lambda_grid: LambdaGridBlock = field(default_factory=LambdaGridBlock)
    experiment: ExperimentBlock = field(default_factory=ExperimentBlock)
    bounds: BoundInputs = field(default_factory=BoundInputs)

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping")
        unknown = sorted(set(raw) - set(_BLOCKS))
        if unknown:
            raise ConfigError(f"unknown top-level keys: {unknown}")
        if "model" not in raw:
            raise ConfigError("config needs a 'model' block")
        model = dict(raw["model"])
        try:
            model_from_config(model)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid 'model' block: {exc}") from exc
        return cls(
            model=model,
            sim=_build(SimBlock, raw.get("sim"), "sim"),
            solver=_build(SolverConfig, raw.get("solver"), "solver"),
            lambda_grid=_build(LambdaGridBlock, raw.get("lambda_grid"), "lambda_grid"),
            experiment=_build(ExperimentBlock, raw.get("experiment"), "experiment"),
            bounds=_build(BoundInputs, raw.get("bounds"), "bounds"),
        )

    def build_model(self):
        return model_from_config(self.model)

    def override(self, *, seed=None, out_dir=None, trials=None, threads=None):
        exp = self.experiment
        changes = {}
        if out_dir is not None:
            changes["output_dir"] = str(out_dir)
        if trials is not None:
            changes["trials"] = int(trials)
        if threads is not None:
            changes["workers"] = int(threads)
        cfg = replace(self, experiment=_build(ExperimentBlock, {**asdict(exp), **changes}, "experiment"))
        if seed is not None:
            cfg = replace(cfg, sim=replace(cfg.sim, seed=int(seed)))
        return cfg

    def to_dict(self):
        """Resolved config as plain JSON types.  ``workers`` and
        ``output_dir`` are left out of the hash since they do not affect
        results."""
        out = {"model": _plain(self.model)}
        for name in _BLOCKS[1:]:
            out[name] = _plain(asdict(getattr(self, name)))
        return out

    def hash(self):
        return config_hash(self.to_dict())


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "tolist"):
        return obj.tolist()
    return obj


def config_hash(resolved):
    """sha256 of the canonical JSON of the resolved config, excluding the
    execution-only settings (worker count, output directory)."""
    body = json.loads(json.dumps(resolved))
    exp = body.get("experiment", {})
    exp.pop("workers", None)
    exp.pop("output_dir", None)
    text = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def load_config(filename):
    try:
        raw = yaml.safe_load(Path(filename).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {filename}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {filename}: {exc}") from exc
    return RunConfig.from_dict(raw)
