"""Compiled inner loop of one online facility-location pass."""

import numpy as np
from numba import njit

HALT_NONE = 0
HALT_COST = 1
HALT_COUNT = 2


@njit(cache=True)
def online_fl_pass(X, W, f, U, cost_ceiling, count_ceiling, metric_code):
    """Run one pass over weighted points ``X``/``W`` with facility cost ``f``.

    ``U[i]`` is the uniform draw used for point ``i``.  A point whose action
    would push the solution past a ceiling is not applied; the pass stops
    there and reports it as consumed but uncommitted.

    Returns (consumed, halt_code, fac_pos, fac_w, assign, theta,
    service_cost, service_sq, n_fac).  ``assign[i]`` is the facility slot a
    committed point ended in (-1 if not committed), ``fac_pos[s]`` the input
    position facility ``s`` was opened at.
    """
    n, d = X.shape
    fac_loc = np.empty((n, d))
    fac_pos = np.empty(n, dtype=np.int64)
    fac_w = np.empty(n)
    assign = np.full(n, -1, dtype=np.int64)
    theta = np.zeros(n)
    n_fac = 0
    service = 0.0
    service_sq = 0.0
    consumed = 0
    halt = HALT_NONE
    for i in range(n):
        consumed = i + 1
        w = W[i]
        if n_fac == 0:
            if f > cost_ceiling or 1 > count_ceiling:
                halt = HALT_COST if f > cost_ceiling else HALT_COUNT
                break
            fac_loc[0, :] = X[i, :]
            fac_pos[0] = i
            fac_w[0] = w
            assign[i] = 0
            n_fac = 1
            continue
        best = -1
        best_sq = 0.0
        for s in range(n_fac):
            acc = 0.0
            for c in range(d):
                diff = X[i, c] - fac_loc[s, c]
                acc += diff * diff
            if best < 0 or acc < best_sq:
                best = s
                best_sq = acc
        th = best_sq if metric_code == 0 else np.sqrt(best_sq)
        p = th * w / f
        if U[i] < p:
            if service + f * (n_fac + 1) > cost_ceiling:
                halt = HALT_COST
                break
            if n_fac + 1 > count_ceiling:
                halt = HALT_COUNT
                break
            fac_loc[n_fac, :] = X[i, :]
            fac_pos[n_fac] = i
            fac_w[n_fac] = w
            assign[i] = n_fac
            n_fac += 1
        else:
            if service + w * th + f * n_fac > cost_ceiling:
                halt = HALT_COST
                break
            fac_w[best] += w
            assign[i] = best
            theta[i] = th
            service += w * th
            service_sq += w * best_sq
    return consumed, halt, fac_pos[:n_fac].copy(), fac_w[:n_fac].copy(), assign, theta, service, service_sq, n_fac



@njit(cache=True)
def nearest_earlier(X, C):
    """For each row, the ``C`` nearest earlier rows ordered by (distance, index).

    Facilities only ever sit on earlier input points, so the first open
    entry of this list is the nearest open facility.  Rows with fewer than
    ``C`` predecessors are padded with -1.
    """
    n, d = X.shape
    XT = np.ascontiguousarray(X.T)
    row = np.empty(n)
    cand_pos = np.full((n, C), -1, dtype=np.int64)
    cand_d = np.full((n, C), np.inf)
    for i in range(n):
        # coordinate-major accumulation keeps each pair summed in index order
        row[:i] = 0.0
        for c in range(d):
            xc = XT[c, i]
            col = XT[c]
            for s in range(i):
                diff = xc - col[s]
                row[s] += diff * diff
        filled = 0
        for s in range(i):
            acc = row[s]
            if filled == C and not acc < cand_d[i, C - 1]:
                continue
            # equal distances keep index order: insert after them
            k = filled if filled < C else C - 1
            while k > 0 and cand_d[i, k - 1] > acc:
                if k < C:
                    cand_d[i, k] = cand_d[i, k - 1]
                    cand_pos[i, k] = cand_pos[i, k - 1]
                k -= 1
            cand_d[i, k] = acc
            cand_pos[i, k] = s
            if filled < C:
                filled += 1
    return cand_pos, cand_d


@njit(cache=True)
def online_fl_multi(X, W, f, U, cost_ceiling, count_ceiling, metric_code, cand_pos, cand_d, early_exit):
    """Run one independent pass per row of ``U`` over the same input.

    Nearest-facility search walks the precomputed candidate list and only
    falls back to a full scan when none of the candidates is open, so the
    result matches :func:`online_fl_pass` exactly.  With ``early_exit`` the
    remaining passes are skipped once two halted passes report the same
    cost (relative 1e-9).
    """
    m = U.shape[0]
    n, d = X.shape
    C = cand_pos.shape[1]
    consumed = np.zeros(m, dtype=np.int64)
    halts = np.zeros(m, dtype=np.int64)
    n_facs = np.zeros(m, dtype=np.int64)
    services = np.zeros(m)
    services_sq = np.zeros(m)
    fac_pos = np.empty((m, n), dtype=np.int64)
    fac_w = np.empty((m, n))
    slot_of = np.empty(n, dtype=np.int64)
    ran = 0
    for r in range(m):
        ran = r + 1
        slot_of[:] = -1
        n_fac = 0
        service = 0.0
        service_sq = 0.0
        halt = HALT_NONE
        used = 0
        for i in range(n):
            used = i + 1
            w = W[i]
            if n_fac == 0:
                if f > cost_ceiling or 1 > count_ceiling:
                    halt = HALT_COST if f > cost_ceiling else HALT_COUNT
                    break
                fac_pos[r, 0] = i
                fac_w[r, 0] = w
                slot_of[i] = 0
                n_fac = 1
                continue
            best = -1
            best_sq = 0.0
            for c in range(C):
                q = cand_pos[i, c]
                if q < 0:
                    break
                if slot_of[q] >= 0:
                    best = slot_of[q]
                    best_sq = cand_d[i, c]
                    break
            if best < 0:
                for s in range(n_fac):
                    q = fac_pos[r, s]
                    acc = 0.0
                    for c in range(d):
                        diff = X[i, c] - X[q, c]
                        acc += diff * diff
                    if best < 0 or acc < best_sq:
                        best = s
                        best_sq = acc
            th = best_sq if metric_code == 0 else np.sqrt(best_sq)
            p = th * w / f
            if U[r, i] < p:
                if service + f * (n_fac + 1) > cost_ceiling:
                    halt = HALT_COST
                    break
                if n_fac + 1 > count_ceiling:
                    halt = HALT_COUNT
                    break
                fac_pos[r, n_fac] = i
                fac_w[r, n_fac] = w
                slot_of[i] = n_fac
                n_fac += 1
            else:
                if service + w * th + f * n_fac > cost_ceiling:
                    halt = HALT_COST
                    break
                fac_w[r, best] += w
                service += w * th
                service_sq += w * best_sq
        consumed[r] = used
        halts[r] = halt
        n_facs[r] = n_fac
        services[r] = service
        services_sq[r] = service_sq
        if early_exit and halt != HALT_NONE:
            cost_r = service + f * n_fac
            done = False
            for q in range(r):
                if halts[q] != HALT_NONE:
                    cost_q = services[q] + f * n_facs[q]
                    if abs(cost_q - cost_r) <= 1e-9 * max(abs(cost_q), abs(cost_r)):
                        done = True
            if done:
                break
    return ran, consumed, halts, n_facs, services, services_sq, fac_pos, fac_w
