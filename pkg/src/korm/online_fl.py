"""Randomized one-pass online facility location.

Each arriving weighted point either opens a facility on itself, with
probability ``min(theta * w / f, 1)`` where ``theta`` is its distance to the
nearest open facility, or is attached to that facility.  The first point
always opens one and is charged ``f`` like every later opening.

Two entry points exist.  :func:`online_fl_step` is a plain-Python single
step, easy to read and to test against.  :func:`online_fl_run` drives a
compiled pass and is what the phase engine uses; both consume exactly one
uniform draw per point, so they agree draw for draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from korm import _kernel
from korm.core import Metric, dist, stack_points
from korm.errors import DimensionError, RangeError
from korm.rng import RngStream

HALT_REASONS = {_kernel.HALT_NONE: "exhausted", _kernel.HALT_COST: "cost", _kernel.HALT_COUNT: "count"}


@dataclass(frozen=True)
class StopCondition:
    cost_ceiling: float = math.inf
    count_ceiling: float = math.inf


@dataclass(frozen=True)
class FacilitySet:
    """State of one pass.

    ``origins[s]`` is the input position that opened facility ``s``;
    ``assignments[i]`` the facility the i-th committed point ended in.
    """

    locations: tuple = ()
    weights: tuple = ()
    origins: tuple = ()
    service_cost: float = 0.0
    facility_count_cost: float = 0.0
    points_consumed: int = 0
    assignments: tuple = ()
    thetas: tuple = ()
    service_sq: float = 0.0
    halted_by: str = "exhausted"
    last_point: Optional[int] = None

    @property
    def total_cost(self) -> float:
        return self.service_cost + self.facility_count_cost

    @property
    def n_facilities(self) -> int:
        return len(self.weights)

    @property
    def points_committed(self) -> int:
        return self.points_consumed - (0 if self.last_point is None else 1)


def online_fl_step(state: FacilitySet, x, w: float, f: float, rng: RngStream,
                   metric: Metric = Metric.SQUARED_EUCLIDEAN) -> FacilitySet:
    if not f > 0:
        raise RangeError("facility cost must be positive", f=f)
    x = np.asarray(x, dtype=np.float64)
    u = rng.uniform()
    pos = state.points_consumed
    if not state.weights:
        return replace(
            state, locations=(x,), weights=(float(w),), origins=(pos,),
            facility_count_cost=f, points_consumed=pos + 1,
            assignments=state.assignments + (0,), thetas=state.thetas + (0.0,),
        )
    if x.shape != state.locations[0].shape:
        raise DimensionError("point dimension does not match open facilities",
                             expected=state.locations[0].shape[0], found=x.shape[0] if x.ndim else 0)
    gaps = [dist(x, c, metric) for c in state.locations]
    nearest = min(range(len(gaps)), key=lambda s: (gaps[s], s))
    theta = gaps[nearest]
    if u < theta * w / f:
        return replace(
            state, locations=state.locations + (x,), weights=state.weights + (float(w),),
            origins=state.origins + (pos,), facility_count_cost=f * (len(state.weights) + 1),
            points_consumed=pos + 1, assignments=state.assignments + (len(state.weights),),
            thetas=state.thetas + (0.0,),
        )
    weights = list(state.weights)
    weights[nearest] += w
    sq = dist(x, state.locations[nearest], Metric.SQUARED_EUCLIDEAN)
    return replace(
        state, weights=tuple(weights), service_cost=state.service_cost + w * theta,
        service_sq=state.service_sq + w * sq, points_consumed=pos + 1,
        assignments=state.assignments + (nearest,), thetas=state.thetas + (theta,),
    )


def online_fl_run(points, weights, f: float, rng: RngStream, stop: StopCondition = StopCondition(),
                  metric: Metric = Metric.SQUARED_EUCLIDEAN) -> FacilitySet:
    """One pass over ``points`` that halts at the first ceiling breach.

    The breaching point counts as consumed and is reported in
    ``last_point``; its action is not applied, so the returned facilities
    and costs always respect ``stop``.
    """
    if not f > 0:
        raise RangeError("facility cost must be positive", f=f)
    X = stack_points(points)
    W = np.ones(len(X)) if weights is None else np.asarray(weights, dtype=np.float64)
    if len(X) == 0:
        return FacilitySet()
    if len(W) != len(X):
        raise DimensionError("weights and points differ in length", points=len(X), weights=len(W))
    U = rng.uniforms(len(X))
    raw = _pass(X, W, f, U, stop, Metric(metric))
    return _to_facility_set(X, raw, f)


def _pass(X, W, f, U, stop, metric):
    return _kernel.online_fl_pass(X, W, float(f), U, float(stop.cost_ceiling),
                                  float(stop.count_ceiling), metric.code)


def _to_facility_set(X, raw, f) -> FacilitySet:
    consumed, halt, fac_pos, fac_w, assign, theta, service, service_sq, n_fac = raw
    committed = consumed - (1 if halt else 0)
    return FacilitySet(
        locations=tuple(X[p] for p in fac_pos),
        weights=tuple(float(w) for w in fac_w),
        origins=tuple(int(p) for p in fac_pos),
        service_cost=float(service),
        facility_count_cost=f * n_fac,
        points_consumed=int(consumed),
        assignments=tuple(int(a) for a in assign[:committed]),
        thetas=tuple(float(t) for t in theta[:committed]),
        service_sq=float(service_sq),
        halted_by=HALT_REASONS[int(halt)],
        last_point=int(consumed - 1) if halt else None,
    )
