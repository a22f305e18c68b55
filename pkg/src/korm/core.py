"""Shared domain types, distance metrics and configuration validation."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from korm.errors import ConstraintError, DimensionError, RangeError

Point = np.ndarray  # 1-D float64, finite


class Metric(str, enum.Enum):
    SQUARED_EUCLIDEAN = "squared-euclidean"
    EUCLIDEAN = "euclidean"

    @property
    def code(self) -> int:
        # integer tag understood by the compiled facility-location kernel
        return 0 if self is Metric.SQUARED_EUCLIDEAN else 1


class LogBase(str, enum.Enum):
    TWO = "2"
    NATURAL = "e"

    def log(self, x: float) -> float:
        return math.log2(x) if self is LogBase.TWO else math.log(x)


def as_point(coords) -> Point:
    p = np.asarray(coords, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise DimensionError("a point must be a non-empty 1-D sequence", shape=list(p.shape))
    if not np.all(np.isfinite(p)):
        raise RangeError("point coordinates must be finite")
    return p


def dist(a, b, metric: Metric = Metric.SQUARED_EUCLIDEAN) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError("dimension mismatch", left=a.shape[-1] if a.ndim else 0,
                             right=b.shape[-1] if b.ndim else 0)
    sq = 0.0
    # left-to-right accumulation, matching the compiled kernel bit for bit
    for di in (a - b).tolist():
        sq += di * di
    if Metric(metric) is Metric.EUCLIDEAN:
        return math.sqrt(sq)
    return sq


def assignment_cost(w: float, theta: float) -> float:
    """Service cost of attaching a point of weight ``w`` at distance ``theta``."""
    if w < 1:
        raise RangeError("weight must be at least 1", weight=w)
    if theta < 0:
        raise RangeError("distance must be nonnegative", theta=theta)
    return w * theta


@dataclass(frozen=True)
class WeightedMedian:
    """A facility carried between phases.

    ``source_index`` is the stream position of the raw point the facility
    was first opened at; medians are always placed on actual stream points.
    """

    median_id: int
    location: tuple
    weight: float
    created_phase: int
    source_index: int
    outlier_score: int = 0
    tco_since_phase: Optional[int] = None

    def __post_init__(self):
        if self.weight < 1:
            raise RangeError("median weight must be at least 1", weight=self.weight)


@dataclass(frozen=True)
class KormConfig:
    k: int = 2
    score_threshold_O: int = 2
    gamma: float = 34.0
    beta: float = 34.0
    chunk_size_Num: int = 500
    seed: int = 0
    metric: Metric = Metric.SQUARED_EUCLIDEAN
    log_base: LogBase = LogBase.TWO
    invocation_factor: int = 2
    stream_length: Optional[int] = None
    early_exit: bool = False

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(self.metric))
        object.__setattr__(self, "log_base", LogBase(self.log_base))

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "score_threshold_O": self.score_threshold_O,
            "gamma": float(self.gamma),
            "beta": float(self.beta),
            "chunk_size_Num": self.chunk_size_Num,
            "seed": self.seed,
            "metric": self.metric.value,
            "log_base": self.log_base.value,
            "invocation_factor": self.invocation_factor,
            "stream_length": self.stream_length,
            "early_exit": self.early_exit,
        }


@dataclass(frozen=True)
class ValidatedConfig:
    config: KormConfig
    constraint_lhs: float
    constraint_rhs: float
    warnings: tuple = field(default=())

    def __getattr__(self, name):
        # delegate field access so callers can use cfg.k etc. directly
        if name.startswith("__") or name == "config":
            raise AttributeError(name)
        return getattr(self.config, name)


def constraint_sides(gamma: float, beta: float) -> tuple[float, float]:
    return gamma + 4.0 * (1.0 + 4.0 * (beta + gamma)), gamma * beta


def validate_config(cfg: KormConfig, c: Optional[float] = None) -> ValidatedConfig:
    """Check parameter ranges and the gamma/beta inequality.

    The second condition ``beta >= 2c(1+gamma)+gamma`` is only checked when
    an approximation factor ``c`` is supplied and produces a warning, never
    an error.
    """
    if isinstance(cfg, ValidatedConfig):
        cfg = cfg.config
    for name in ("k", "score_threshold_O", "chunk_size_Num", "invocation_factor"):
        value = getattr(cfg, name)
        if not isinstance(value, (int, np.integer)) or value < 1:
            raise RangeError(f"{name} must be a positive integer", field=name, value=value)
    for name in ("gamma", "beta"):
        value = getattr(cfg, name)
        if not (value > 0 and math.isfinite(value)):
            raise RangeError(f"{name} must be a positive real", field=name, value=value)
    if cfg.k >= cfg.chunk_size_Num:
        raise RangeError("k must be smaller than the chunk size", k=cfg.k, chunk_size_Num=cfg.chunk_size_Num)
    if not 0 <= cfg.seed < 2**64:
        raise RangeError("seed must be a 64-bit unsigned integer", seed=cfg.seed)
    if cfg.stream_length is not None and cfg.stream_length < 1:
        raise RangeError("stream_length must be positive", stream_length=cfg.stream_length)

    lhs, rhs = constraint_sides(cfg.gamma, cfg.beta)
    if lhs > rhs:
        raise ConstraintError(
            "gamma + 4(1 + 4(beta + gamma)) <= gamma*beta does not hold",
            lhs=lhs, rhs=rhs, gamma=cfg.gamma, beta=cfg.beta,
        )
    notes = []
    if c is not None:
        needed = 2.0 * c * (1.0 + cfg.gamma) + cfg.gamma
        if cfg.beta < needed:
            msg = f"beta={cfg.beta} < 2c(1+gamma)+gamma={needed} for c={c}"
            warnings.warn(msg, stacklevel=2)
            notes.append(msg)
    return ValidatedConfig(cfg, lhs, rhs, tuple(notes))


def log_n(n: int, base: LogBase) -> float:
    if n < 1:
        raise RangeError("stream length must be positive", n=n)
    return LogBase(base).log(n)


def facility_cost(lower_bound: float, k: int, n: int, base: LogBase) -> float:
    return lower_bound / (k * (1.0 + log_n(n, base)))


def median_bound(k: int, n: int, gamma: float, beta: float, base: LogBase) -> float:
    return 4.0 * k * (1.0 + log_n(n, base)) * (1.0 + 4.0 * (gamma + beta))


def cost_bound(lower_bound: float, gamma: float, beta: float) -> float:
    return 4.0 * lower_bound * (1.0 + 4.0 * (gamma + beta))


def invocation_count(n: int, factor: int, base: LogBase) -> int:
    return max(1, math.ceil(factor * log_n(n, base)))


def stack_points(points: Sequence) -> np.ndarray:
    """Stack points into a 2-D array, checking a shared dimension."""
    if isinstance(points, np.ndarray) and points.ndim == 2:
        arr = np.ascontiguousarray(points, dtype=np.float64)
    else:
        rows = [np.asarray(p, dtype=np.float64) for p in points]
        if not rows:
            return np.empty((0, 0))
        dims = {r.shape for r in rows}
        if len(dims) != 1:
            raise DimensionError("points have differing dimensions", dims=sorted(d[0] for d in dims))
        arr = np.ascontiguousarray(np.vstack(rows))
    if not np.all(np.isfinite(arr)):
        raise RangeError("point coordinates must be finite")
    return arr
