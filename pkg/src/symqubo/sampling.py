"""Exact enumeration and simulated annealing over QUBO models."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .qubo import QuboModel, energy, zero_tolerance

BRUTE, BRANCH = "brute", "branch"


@dataclass(frozen=True)
class AnnealConfig:
    """Simulated annealing schedule.

    Temperatures default to the largest absolute coefficient (start) and
    1e-3 times the smallest nonzero one (end), cooled geometrically.
    """

    seed: int = 0
    restarts: int = 64
    sweeps: int = 2000
    initial_temperature: float | None = None
    final_temperature: float | None = None
    n_jobs: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.sweeps < 1:
            raise ValueError("sweeps must be at least 1")
        for t in (self.initial_temperature, self.final_temperature):
            if t is not None and not t > 0:
                raise ValueError("temperatures must be positive")


@dataclass(frozen=True)
class SampleResult:
    assignment: np.ndarray
    energy: float
    restarts_used: int
    seed: int
    zero_assignments: tuple[np.ndarray, ...] = field(default=(), repr=False)


def _csr(model: QuboModel):
    q = model.num_variables
    lin, rows, cols, vals = model.arrays()
    src = np.concatenate([rows, cols])
    dst = np.concatenate([cols, rows])
    w = np.concatenate([vals, vals])
    order = np.lexsort((dst, src))
    src, dst, w = src[order], dst[order], w[order]
    indptr = np.zeros(q + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    return lin, np.cumsum(indptr), dst.astype(np.int64), w


def _pattern(x: np.ndarray) -> int:
    return int(sum(1 << k for k in np.flatnonzero(x)))


# -- exact -----------------------------------------------------------------------------


def enumerate_exact(
    model: QuboModel,
    limit: int = 24,
    target: float = 0.0,
    method: str = BRUTE,
    atol: float | None = None,
) -> list[np.ndarray]:
    """Every assignment with energy at most ``target`` (+ ``atol``), by ascending bit pattern.

    Bit ``k`` of the pattern is variable ``k``. ``method="brute"`` evaluates
    all ``2**q`` assignments; ``method="branch"`` is a complete depth-first
    search pruned by a clique-based lower bound and is the one to use when
    ``q`` is beyond the reach of exhaustive evaluation.
    """
    q = model.num_variables
    if q > limit:
        raise ValueError(f"registry has {q} variables, above the exact-enumeration limit {limit}")
    if atol is None:
        atol = zero_tolerance(model)
    threshold = target + atol
    if method == BRUTE:
        found = _brute(model, threshold)
    elif method == BRANCH:
        found = _branch(model, threshold)
    else:
        raise ValueError(f"method must be {BRUTE!r} or {BRANCH!r}, got {method!r}")
    found.sort(key=_pattern)
    return found


@nb.njit(cache=True)
def _gray_kernel(lin, indptr, indices, data, offset, threshold, max_hits):
    # walks all 2**q assignments in Gray-code order, one flip per step
    q = len(lin)
    x = np.zeros(q, dtype=np.int8)
    h = lin.copy()
    hits = np.zeros((max_hits, q), dtype=np.int8)
    n_hits = 0
    e = offset
    if e <= threshold:
        hits[0, :] = x
        n_hits = 1
    for t in range(1, 1 << q):
        k = 0
        while not (t >> k) & 1:
            k += 1
        if x[k] == 0:
            e += h[k]
            x[k] = 1
            step = 1.0
        else:
            e -= h[k]
            x[k] = 0
            step = -1.0
        for p in range(indptr[k], indptr[k + 1]):
            h[indices[p]] += step * data[p]
        if e <= threshold:
            if n_hits == max_hits:
                return hits, -1
            hits[n_hits, :] = x
            n_hits += 1
    return hits, n_hits


def _brute(model: QuboModel, threshold: float, max_hits: int = 1 << 12) -> list[np.ndarray]:
    q = model.num_variables
    if q == 0:
        return [np.zeros(0, dtype=np.int8)] if model.offset <= threshold else []
    lin, indptr, indices, data = _csr(model)
    # the running energy drifts by rounding; screen loosely, then confirm exactly
    loose = threshold + 1e-7 * max(1.0, model.coefficient_scale())
    while True:
        hits, count = _gray_kernel(lin, indptr, indices, data, float(model.offset), loose, max_hits)
        if count >= 0:
            break
        max_hits *= 4
    return [hits[r].copy() for r in range(count) if energy(model, hits[r]) <= threshold]


def _cliques(q: int, indptr, indices, data) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Greedy partition of the variables into cliques of positive couplings.

    Returns members in clique order, clique start offsets, and the smallest
    coupling inside each clique.
    """
    pos = [dict() for _ in range(q)]
    for k in range(q):
        for p in range(indptr[k], indptr[k + 1]):
            if data[p] > 0:
                pos[k][int(indices[p])] = float(data[p])
    assigned = [False] * q
    members, starts, jmin = [], [0], []
    for v in range(q):
        if assigned[v]:
            continue
        clique = [v]
        assigned[v] = True
        for u in sorted(pos[v]):
            if u > v and not assigned[u] and all(u in pos[w] for w in clique):
                clique.append(u)
                assigned[u] = True
        couplings = [pos[a][b] for i, a in enumerate(clique) for b in clique[i + 1:]]
        members += clique
        starts.append(len(members))
        jmin.append(min(couplings) if couplings else 0.0)
    return np.array(members, dtype=np.int64), np.array(starts, dtype=np.int64), np.array(jmin)


@nb.njit(cache=True)
def _free_bound(h, free_from, members, starts, jmin, buf):
    total = 0.0
    for c in range(len(starts) - 1):
        cnt = 0
        for p in range(starts[c], starts[c + 1]):
            v = members[p]
            if v >= free_from:
                buf[cnt] = h[v]
                cnt += 1
        if cnt == 0:
            continue
        vals = np.sort(buf[:cnt])
        best = 0.0
        acc = 0.0
        for k in range(cnt):
            acc += vals[k]
            cand = acc + jmin[c] * k * (k + 1) / 2.0
            if cand < best:
                best = cand
        total += best
    return total


@nb.njit(cache=True)
def _branch_kernel(lin, indptr, indices, data, offset, members, starts, jmin, neg_suffix, threshold, max_hits):
    q = len(lin)
    h = lin.copy()
    x = np.zeros(q, dtype=np.int8)
    val = np.full(q + 1, -1, dtype=np.int8)
    hits = np.zeros((max_hits, q), dtype=np.int8)
    n_hits = 0
    buf = np.empty(q)
    fixed = offset
    d = 0
    while d >= 0:
        if d == q:
            if fixed <= threshold:
                if n_hits == max_hits:
                    return hits, -1
                hits[n_hits, :] = x
                n_hits += 1
            d -= 1
            continue
        v = val[d]
        if v == 1:
            fixed -= h[d]
            x[d] = 0
            for p in range(indptr[d], indptr[d + 1]):
                h[indices[p]] -= data[p]
            val[d] = -1
            d -= 1
            continue
        if v == -1:
            val[d] = 0
        else:
            fixed += h[d]
            x[d] = 1
            for p in range(indptr[d], indptr[d + 1]):
                h[indices[p]] += data[p]
            val[d] = 1
        bound = fixed + neg_suffix[d + 1]
        if d + 1 < q:
            bound += _free_bound(h, d + 1, members, starts, jmin, buf)
        if bound <= threshold:
            d += 1
    return hits, n_hits


def _branch(model: QuboModel, threshold: float, max_hits: int = 1 << 16) -> list[np.ndarray]:
    q = model.num_variables
    if q == 0:
        return [np.zeros(0, dtype=np.int8)] if model.offset <= threshold else []
    lin, indptr, indices, data = _csr(model)
    members, starts, jmin = _cliques(q, indptr, indices, data)
    # negative couplings among free variables could lower the energy further
    neg_suffix = np.zeros(q + 1)
    for (k, l), v in model.quadratic.items():
        if v < 0:
            neg_suffix[: k + 1] += v
    loose = threshold + 1e-7 * max(1.0, model.coefficient_scale())
    while True:
        hits, count = _branch_kernel(
            lin, indptr, indices, data, float(model.offset), members, starts, jmin, neg_suffix, loose, max_hits
        )
        if count >= 0:
            return [hits[r].copy() for r in range(count) if energy(model, hits[r]) <= threshold]
        max_hits *= 4


# -- annealing ---------------------------------------------------------------------------


@nb.njit(cache=True, nogil=True)
def _anneal_kernel(lin, indptr, indices, data, offset, betas, seed, tol):
    np.random.seed(seed)
    q = len(lin)
    x = np.zeros(q, dtype=np.int8)
    for k in range(q):
        if np.random.random() < 0.5:
            x[k] = 1
    h = lin.copy()
    for k in range(q):
        if x[k]:
            for p in range(indptr[k], indptr[k + 1]):
                h[indices[p]] += data[p]
    e = offset
    for k in range(q):
        if x[k]:
            e += 0.5 * (lin[k] + h[k])
    best = e
    best_x = x.copy()
    sweeps = 0
    for s in range(len(betas)):
        sweeps = s + 1
        beta = betas[s]
        for k in range(q):
            delta = h[k] if x[k] == 0 else -h[k]
            if delta <= 0.0 or np.random.random() < math.exp(-beta * delta):
                step = 1.0 if x[k] == 0 else -1.0
                x[k] = 1 - x[k]
                e += delta
                for p in range(indptr[k], indptr[k + 1]):
                    h[indices[p]] += step * data[p]
                if e < best:
                    best = e
                    best_x[:] = x
        if best <= tol:
            break
    return best_x, sweeps


def _schedule(model: QuboModel, config: AnnealConfig) -> np.ndarray:
    coeffs = np.abs(np.array(list(model.linear.values()) + list(model.quadratic.values()), dtype=float))
    coeffs = coeffs[coeffs > 0]
    if len(coeffs) == 0:
        coeffs = np.array([1.0])
    t0 = config.initial_temperature or float(coeffs.max())
    t1 = config.final_temperature or 1e-3 * float(coeffs.min())
    if t1 > t0:
        t0, t1 = t1, t0
    if config.sweeps == 1:
        return np.array([1.0 / t1])
    temps = t0 * (t1 / t0) ** (np.arange(config.sweeps) / (config.sweeps - 1))
    return 1.0 / temps


def restart_seeds(seed: int, restarts: int) -> list[int]:
    """Independent per-restart seeds derived from ``(seed, restart index)``."""
    children = np.random.SeedSequence(seed).spawn(restarts)
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in children]


def anneal(model: QuboModel, config: AnnealConfig | None = None) -> SampleResult:
    """Single-flip Metropolis annealing with independent restarts.

    Each restart stops early once it reaches zero energy. The result holds the
    lowest-energy assignment (ties to the earliest restart) and every distinct
    zero-energy assignment met, in restart order.
    """
    config = config or AnnealConfig()
    q = model.num_variables
    if q == 0:
        raise ValueError("model has no variables")
    lin, indptr, indices, data = _csr(model)
    betas = _schedule(model, config)
    tol = zero_tolerance(model)
    seeds = restart_seeds(config.seed, config.restarts)

    def run(r):
        x, _ = _anneal_kernel(lin, indptr, indices, data, float(model.offset), betas, seeds[r], tol)
        return x

    if config.n_jobs > 1:
        with ThreadPoolExecutor(config.n_jobs) as pool:
            samples = list(pool.map(run, range(config.restarts)))
    else:
        samples = [run(r) for r in range(config.restarts)]

    scored = sorted(((energy(model, x), r) for r, x in enumerate(samples)))
    best_e, best_r = scored[0]
    zeros, seen = [], set()
    for r, x in enumerate(samples):
        if energy(model, x) <= tol:
            key = x.tobytes()
            if key not in seen:
                seen.add(key)
                zeros.append(x)
    return SampleResult(samples[best_r], best_e, config.restarts, config.seed, tuple(zeros))
