"""Phase engine: lower bound, per-phase clustering and the outlier lifecycle.

A run walks the stream in phases.  Every phase clusters the weighted
medians carried from the previous phase followed by up to ``Num`` unread
raw points, keeps only the resulting medians, scores carried medians that
gained no weight, and retires medians that stayed stagnant for ``O``
phases as real outliers.  The lower bound grows by ``beta`` per phase.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional

import numpy as np

from korm import _kernel
from korm.core import (
    KormConfig,
    Metric,
    ValidatedConfig,
    WeightedMedian,
    cost_bound,
    facility_cost,
    invocation_count,
    median_bound,
    stack_points,
    validate_config,
)
from korm.errors import (
    DegenerateLowerBoundError,
    InsufficientDataError,
    KormError,
    ProgressError,
    RangeError,
    RunAborted,
)
from korm.ingest import Chunk, iter_chunks
from korm.online_fl import HALT_REASONS
from korm.rng import RngStream, generator_id

# nearest earlier points precomputed per input point, shared by all passes
CANDIDATES = 16

REAL_OUTLIER = "real_outlier"
INLIER = "inlier"


@dataclass(frozen=True)
class TcoEntry:
    since: int
    score: int


@dataclass(frozen=True)
class TcoRegistry:
    entries: dict = field(default_factory=dict)  # median_id -> TcoEntry

    def __len__(self):
        return len(self.entries)

    def __contains__(self, median_id):
        return median_id in self.entries


@dataclass(frozen=True)
class InvocationStat:
    consumed: int
    cost: float
    facilities: int
    halt: str

    def to_dict(self):
        return {"consumed": self.consumed, "cost": self.cost, "facilities": self.facilities, "halt": self.halt}


@dataclass(frozen=True)
class PhaseResult:
    medians: tuple  # WeightedMedian, ordered by facility opening
    solution_cost: float
    service_cost: float
    service_sq: float
    read_boundary: int  # raw points of this phase's window marked read
    absorbed: tuple  # ids of carried medians merged into another facility
    invocation_stats: tuple
    winner: int


@dataclass(frozen=True)
class OutlierVerdict:
    median: WeightedMedian
    verdict: str
    decided_phase: int


def set_lb(points, k: int, metric: Metric = Metric.SQUARED_EUCLIDEAN) -> float:
    """Smallest pairwise distance among the first ``k + 1`` points."""
    X = stack_points(points)
    if len(X) < k + 1:
        raise InsufficientDataError("need at least k+1 points for the lower bound", k=k, available=len(X))
    head = X[: k + 1]
    diff = head[:, None, :] - head[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    iu = np.triu_indices(k + 1, 1)
    d = sq[iu]
    if Metric(metric) is Metric.EUCLIDEAN:
        d = np.sqrt(d)
    best = float(d.min())
    if best == 0.0:
        i, j = iu[0][d.argmin()], iu[1][d.argmin()]
        raise DegenerateLowerBoundError(
            "duplicate points among the first k+1 give a zero lower bound; "
            "deduplicate the stream head or jitter the input",
            first=int(i), second=int(j),
        )
    return best


def cluster_phase(carried, window, Lj: float, k: int, n: int, cfg: KormConfig, rng: RngStream,
                  phase: int, window_start: int, next_id: Iterator[int]) -> PhaseResult:
    """Cluster carried medians followed by the raw ``window``.

    ``carried`` must already be in presentation order.  Runs the configured
    number of independent passes and keeps the one that consumed the most
    input (ties: lower cost, then lower invocation index).
    """
    if Lj <= 0:
        raise RangeError("lower bound must be positive", L=Lj)
    n_carried = len(carried)
    if len(window) == 0:
        raise ProgressError("phase has no unread points", phase=phase)
    if n_carried:
        med_x = np.array([m.location for m in carried], dtype=np.float64)
        X = np.ascontiguousarray(np.vstack([med_x, window]))
        W = np.concatenate([[m.weight for m in carried], np.ones(len(window))])
    else:
        X = np.ascontiguousarray(window, dtype=np.float64)
        W = np.ones(len(window))

    f = facility_cost(Lj, k, n, cfg.log_base)
    cost_cap = cost_bound(Lj, cfg.gamma, cfg.beta)
    count_cap = math.floor(median_bound(k, n, cfg.gamma, cfg.beta, cfg.log_base))
    m = invocation_count(n, cfg.invocation_factor, cfg.log_base)

    U = phase_uniforms(rng, phase, m, len(X))
    cand_pos, cand_d = _kernel.nearest_earlier(X, CANDIDATES)
    ran, consumed, halts, n_facs, services, services_sq, fac_pos_all, fac_w_all = _kernel.online_fl_multi(
        X, W, f, U, cost_cap, float(count_cap), cfg.metric.code, cand_pos, cand_d, bool(cfg.early_exit))

    stats = tuple(
        InvocationStat(int(consumed[i]), float(services[i] + f * n_facs[i]), int(n_facs[i]),
                       HALT_REASONS[int(halts[i])])
        for i in range(ran)
    )
    committed_all = [int(consumed[i]) - (1 if halts[i] else 0) for i in range(ran)]
    winner = min(range(ran), key=lambda i: (-committed_all[i], stats[i].cost, i))
    n_fac = int(n_facs[winner])
    fac_pos, fac_w = fac_pos_all[winner, :n_fac], fac_w_all[winner, :n_fac]
    service, service_sq = services[winner], services_sq[winner]
    committed = committed_all[winner]
    read = committed - n_carried
    if read < 1:
        raise ProgressError("no new point could be read in this phase", phase=phase,
                            committed=committed, carried=n_carried)

    medians = []
    opened_at = set()
    for pos, w in zip(fac_pos.tolist(), fac_w.tolist()):
        opened_at.add(pos)
        if pos < n_carried:
            medians.append(replace(carried[pos], weight=w))
        else:
            src = window_start + pos - n_carried
            medians.append(WeightedMedian(next(next_id), tuple(X[pos].tolist()), w, phase, src))
    absorbed = tuple(carried[p].median_id for p in range(n_carried) if p not in opened_at)
    return PhaseResult(
        medians=tuple(medians),
        solution_cost=float(service + f * n_fac),
        service_cost=float(service),
        service_sq=float(service_sq),
        read_boundary=int(read),
        absorbed=absorbed,
        invocation_stats=stats,
        winner=int(winner),
    )


def phase_uniforms(rng: RngStream, phase: int, m: int, n: int) -> np.ndarray:
    """Uniform draws for the ``m`` passes of one phase, one row per pass.

    The phase owns substream ``(phase,)``; pass ``i`` reads the contiguous
    segment ``[i*n, (i+1)*n)`` of it.
    """
    return rng.substream(phase).uniforms(m * n).reshape(m, n)


def update_outlier_scores(prev: dict, curr: PhaseResult, registry: TcoRegistry, j: int):
    """Score carried medians whose weight did not grow in phase ``j``.

    ``prev`` maps median id to its weight before the phase.  Returns the
    new registry and the ids that were stagnant this phase.
    """
    entries = {}
    alive = {m.median_id for m in curr.medians}
    for mid, entry in registry.entries.items():
        if mid in alive:
            entries[mid] = entry
    stagnant = []
    for med in curr.medians:
        before = prev.get(med.median_id)
        if before is None or med.weight != before:
            continue
        entry = entries.get(med.median_id)
        if entry is None:
            entries[med.median_id] = TcoEntry(j, 1)
        else:
            entries[med.median_id] = TcoEntry(entry.since, entry.score + 1)
        stagnant.append(med.median_id)
    return TcoRegistry(entries), tuple(stagnant)


def resolve_outliers(registry: TcoRegistry, j: int, O: int, medians=()):
    """Decide every registry entry that reaches its O-phase checkpoint.

    Returns ``(verdicts, registry)``.  ``medians`` supplies the median
    objects attached to verdicts; entries without one get a stub.
    """
    by_id = {m.median_id: m for m in medians}
    verdicts = []
    kept = {}
    for mid, entry in registry.entries.items():
        if j - entry.since + 1 != O:
            kept[mid] = entry
            continue
        med = by_id.get(mid)
        if med is not None:
            med = replace(med, outlier_score=entry.score, tco_since_phase=entry.since)
        verdict = REAL_OUTLIER if entry.score == O else INLIER
        verdicts.append(OutlierVerdict(med, verdict, j))
    verdicts.sort(key=lambda v: v.median.median_id if v.median is not None else -1)
    return verdicts, TcoRegistry(kept)


@dataclass
class PhaseRecord:
    j: int
    lower_bound: float
    facility_cost: float
    window_start: int
    input_medians: int
    n_medians: int
    solution_cost: float
    service_cost: float
    service_sq: float
    points_read: int
    points_read_total: int
    retained_peak: int
    registry_peak: int
    tco_events: list
    verdicts: list
    invocations: list

    def to_dict(self, trace: bool = False) -> dict:
        d = {
            "j": self.j,
            "L_j": self.lower_bound,
            "F_j": self.facility_cost,
            "window_start": self.window_start,
            "input_medians": self.input_medians,
            "n_medians": self.n_medians,
            "solution_cost": self.solution_cost,
            "service_cost": self.service_cost,
            "sum_squared_distance": self.service_sq,
            "points_read": self.points_read,
            "points_read_total": self.points_read_total,
            "retained_peak": self.retained_peak,
            "tco_registry_peak": self.registry_peak,
            "tco_events": self.tco_events,
            "verdicts": self.verdicts,
        }
        if trace:
            d["invocations"] = self.invocations
        return d


@dataclass
class KormRun:
    """Everything a run produced; serialized by :mod:`korm.report`."""

    config: KormConfig
    stream_length: int
    lower_bound_1: float
    phases: list
    medians: list
    real_outliers: list  # (WeightedMedian, decided_phase)
    inliers_cleared: list  # median ids cleared at a checkpoint
    pending: dict  # median id -> TcoEntry left at stream end
    peak_retained: int
    memory_bound: float
    rng_id: str = field(default_factory=generator_id)
    aborted: Optional[dict] = None

    @property
    def points_read(self) -> int:
        return self.phases[-1].points_read_total if self.phases else 0


class _Feeder:
    """Pulls raw points from the stream a few at a time.

    Arrays are sliced directly; other streams (chunks or single points) are
    drained lazily so no more than the requested points are held.
    """

    def __init__(self, stream):
        self._array = stream if isinstance(stream, np.ndarray) else None
        self._pos = 0
        self._rows = None if self._array is not None else self._iter_rows(stream)

    @staticmethod
    def _iter_rows(stream):
        for item in stream:
            if isinstance(item, Chunk):
                yield from item.points
            else:
                yield np.asarray(item, dtype=np.float64)

    def take(self, count: int) -> np.ndarray:
        if self._array is not None:
            out = self._array[self._pos:self._pos + count]
            self._pos += len(out)
            return np.ascontiguousarray(out, dtype=np.float64)
        rows = list(itertools.islice(self._rows, count))
        return stack_points(rows) if rows else np.empty((0, 0))


def korm_run(stream, cfg, stream_length: Optional[int] = None) -> KormRun:
    """Run the phase loop over ``stream`` until every point is read.

    ``stream`` is an ``(N, d)`` array, an iterable of :class:`Chunk` or an
    iterable of points.  The stream length used by the schedules comes from
    ``stream_length``, then ``cfg.stream_length``, then ``len(stream)``.
    Aborts raise a :class:`RunAborted` whose ``partial`` attribute holds the
    completed phases.
    """
    vcfg = cfg if isinstance(cfg, ValidatedConfig) else validate_config(cfg)
    cfg = vcfg.config
    n = stream_length or cfg.stream_length
    if n is None:
        try:
            n = len(stream)
        except TypeError:
            raise RangeError("stream_length is required for unsized streams") from None
    if n < 1:
        raise InsufficientDataError("stream is empty")
    num = cfg.chunk_size_Num
    feeder = _Feeder(stream)
    window = feeder.take(num)
    if len(window) < cfg.k + 1:
        raise InsufficientDataError("need at least k+1 points for the lower bound", k=cfg.k,
                                    available=len(window))
    if not np.all(np.isfinite(window)):
        raise RangeError("point coordinates must be finite")
    lb = set_lb(window[: cfg.k + 1], cfg.k, cfg.metric)
    L = lb / cfg.beta

    bound = median_bound(cfg.k, n, cfg.gamma, cfg.beta, cfg.log_base)
    run = KormRun(cfg, n, L, [], [], [], [], {}, 0, num + bound)
    next_id = itertools.count(1)
    rng = RngStream(cfg.seed)
    carried: list = []
    registry = TcoRegistry()
    window_start = 0
    total_read = 0
    j = 1
    try:
        while len(window):
            carried.sort(key=lambda m: (-m.weight, m.median_id))
            registry_in = len(registry)
            retained_in = len(carried) + len(window) + registry_in
            prev = {m.median_id: m.weight for m in carried}
            res = cluster_phase(carried, window, L, cfg.k, n, cfg, rng, j, window_start, next_id)
            registry, stagnant = update_outlier_scores(prev, res, registry, j)
            medians = [_with_score(m, registry) for m in res.medians]
            verdicts, registry = resolve_outliers(registry, j, cfg.score_threshold_O, medians)
            gone = {v.median.median_id for v in verdicts if v.verdict == REAL_OUTLIER}
            for v in verdicts:
                if v.verdict == REAL_OUTLIER:
                    run.real_outliers.append((v.median, j))
                else:
                    run.inliers_cleared.append(v.median.median_id)
            carried = [m for m in medians if m.median_id not in gone]

            total_read += res.read_boundary
            window = window[res.read_boundary:]
            window_start += res.read_boundary
            retained_out = len(carried) + len(window) + len(registry)
            if len(window) < num:
                more = feeder.take(num - len(window))
                if len(more):
                    if not np.all(np.isfinite(more)):
                        raise RangeError("point coordinates must be finite")
                    window = np.vstack([window, more]) if len(window) else more
            run.peak_retained = max(run.peak_retained, retained_in, retained_out)
            run.phases.append(PhaseRecord(
                j=j, lower_bound=L, facility_cost=facility_cost(L, cfg.k, n, cfg.log_base),
                window_start=window_start - res.read_boundary, input_medians=len(prev),
                n_medians=len(carried), solution_cost=res.solution_cost,
                service_cost=res.service_cost, service_sq=res.service_sq,
                points_read=res.read_boundary, points_read_total=total_read,
                retained_peak=max(retained_in, retained_out),
                registry_peak=max(registry_in, len(registry)),
                tco_events=[{"median_id": mid, "score": registry.entries[mid].score
                             if mid in registry else _decided_score(verdicts, mid)} for mid in stagnant],
                verdicts=[{"median_id": v.median.median_id, "verdict": v.verdict,
                           "source_index": v.median.source_index, "score": v.median.outlier_score}
                          for v in verdicts],
                invocations=[s.to_dict() | {"winner": i == res.winner}
                             for i, s in enumerate(res.invocation_stats)],
            ))
            L = cfg.beta * L
            j += 1
    except RunAborted as exc:
        run.medians = list(carried)
        run.pending = dict(registry.entries)
        run.aborted = exc.to_dict()
        exc.partial = run
        raise
    run.medians = list(carried)
    run.pending = dict(registry.entries)
    return run


def _with_score(med: WeightedMedian, registry: TcoRegistry) -> WeightedMedian:
    entry = registry.entries.get(med.median_id)
    if entry is None:
        if med.tco_since_phase is None:
            return med
        return replace(med, outlier_score=0, tco_since_phase=None)
    return replace(med, outlier_score=entry.score, tco_since_phase=entry.since)


def _decided_score(verdicts, mid) -> int:
    for v in verdicts:
        if v.median.median_id == mid:
            return v.median.outlier_score
    return 0
