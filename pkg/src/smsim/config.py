"""Run configuration: JSON in, validated dataclass out."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EXPERIMENTS = ("paracheck", "renorm", "domain", "spectrum", "weyl", "resolvent", "gauge", "ladder")

# 1/eps <= n / LADDER_RESOLUTION keeps the mollifier resolved on the grid
LADDER_RESOLUTION = 4

NON_NUMERIC_FIELDS = ("out_dir", "workers")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    experiment: str = "spectrum"
    grid: int = 64
    alpha: float = 0.9
    mollifier: str = "heat"
    epsilon: float | None = None
    eps_ladder: list[float] | None = None
    seeds: list[int] | None = None
    n_seeds: int | None = None
    master_seed: int = 0
    s: float | None = None
    b: int = 2
    nodes: int = 96
    t_min: float = 1e-8
    M: int = 10
    k_shift: float | None = None
    delta: float = 0.3
    renormalize: bool = True
    method: str = "auto"
    workers: int = 1
    potential_snapshot: list[str] | None = None
    out_dir: str = "results"

    def __post_init__(self) -> None:
        validate(self)

    # resolved views --------------------------------------------------------------

    @property
    def seed_list(self) -> list[int]:
        if self.seeds:
            return [int(s) for s in self.seeds]
        from .noise import derive_seed

        return [derive_seed(self.master_seed, i) for i in range(self.n_seeds)]

    @property
    def eps(self) -> float:
        return self.epsilon if self.epsilon is not None else LADDER_RESOLUTION / self.grid

    @property
    def ladder(self) -> list[float]:
        if self.eps_ladder:
            return [float(e) for e in self.eps_ladder]
        return default_ladder(self.grid)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def resolved(self) -> dict:
        d = self.to_dict()
        d.update(seeds=self.seed_list, epsilon=self.eps, eps_ladder=self.ladder)
        return d

    def numeric_dict(self) -> dict:
        """Fields that determine the numerical outputs (placement and parallelism excluded)."""
        return {k: v for k, v in self.to_dict().items() if k not in NON_NUMERIC_FIELDS}

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.numeric_dict(), sort_keys=True).encode()).hexdigest()[:16]

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def default_ladder(n: int) -> list[float]:
    """eps_j = 2^-j / 4 while 1/eps_j <= n/4."""
    out = []
    j = 0
    while (4.0 * 2**j) <= n / LADDER_RESOLUTION:
        out.append(0.25 / 2**j)
        j += 1
    return out


def validate(cfg: RunConfig) -> None:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown {cfg.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    if not isinstance(cfg.grid, int) or cfg.grid < 16 or cfg.grid % 2:
        raise ConfigError(f"grid: need an even integer >= 16, got {cfg.grid!r}")
    if not 2.0 / 3.0 < cfg.alpha < 1.0:
        raise ConfigError(f"alpha: {cfg.alpha} outside the admissible range (2/3, 1)")
    if cfg.mollifier not in ("heat", "sharp"):
        raise ConfigError(f"mollifier: must be 'heat' or 'sharp', got {cfg.mollifier!r}")
    scales = ([cfg.epsilon] if cfg.epsilon is not None else []) + list(cfg.eps_ladder or [])
    for e in scales:
        if not 0 < e <= 1:
            raise ConfigError(f"epsilon: {e} outside (0, 1]")
        if 1.0 / e > cfg.grid / LADDER_RESOLUTION + 1e-9:
            raise ConfigError(
                f"eps_ladder: 1/eps = {1 / e:g} exceeds n/{LADDER_RESOLUTION} = {cfg.grid / LADDER_RESOLUTION:g}; "
                "the mollified noise would not be resolved and the field would be aliased by the grid cutoff"
            )
    if cfg.seeds is not None and len(cfg.seeds) == 0:
        raise ConfigError("seeds: empty list")
    if not cfg.seeds and not (cfg.n_seeds and cfg.n_seeds > 0):
        if cfg.seeds is None and cfg.n_seeds is None:
            cfg.seeds = [1]
        else:
            raise ConfigError("seeds: provide a nonempty list or a positive n_seeds")
    if cfg.s is not None and not 0 < cfg.s < 1:
        raise ConfigError(f"s: {cfg.s} outside (0, 1)")
    if not 2 <= cfg.b <= 6:
        raise ConfigError(f"b: {cfg.b} outside [2, 6]")
    if cfg.nodes < 4:
        raise ConfigError(f"nodes: {cfg.nodes} < 4")
    if cfg.M < 1 or cfg.M > cfg.grid**2 // 4:
        raise ConfigError(f"M: {cfg.M} outside [1, n^2/4]")
    if not 0 < cfg.delta < 1:
        raise ConfigError(f"delta: {cfg.delta} outside (0, 1)")
    if cfg.method not in ("auto", "dense", "lanczos"):
        raise ConfigError(f"method: {cfg.method!r} not in auto|dense|lanczos")
    if cfg.workers < 1:
        raise ConfigError("workers: must be >= 1")
    if cfg.potential_snapshot is not None and len(cfg.potential_snapshot) != 2:
        raise ConfigError("potential_snapshot: expected [A_path, A2_path]")


_ALIASES = {"n": "grid", "moll": "mollifier", "eps": "epsilon", "out": "out_dir"}


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    names = {f.name for f in dataclasses.fields(RunConfig)}
    clean = {}
    for key, value in data.items():
        key = _ALIASES.get(key, key)
        if key not in names:
            raise ConfigError(f"{key}: unknown field")
        clean[key] = value
    types = {"grid": int, "b": int, "nodes": int, "M": int, "workers": int, "master_seed": int}
    for key, typ in types.items():
        if key in clean and not (isinstance(clean[key], typ) and not isinstance(clean[key], bool)):
            raise ConfigError(f"{key}: expected {typ.__name__}, got {type(clean[key]).__name__}")
    for key in ("alpha", "delta", "t_min"):
        if key in clean and not isinstance(clean[key], (int, float)):
            raise ConfigError(f"{key}: expected number")
    return RunConfig(**clean)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data)


def list_defaults() -> dict:
    return RunConfig().resolved()


def json_default(obj):
    """json.dumps hook for numpy scalars/arrays and complex numbers."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")
