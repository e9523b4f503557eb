"""Exact finite-n samplers: balls in boxes, G(n,p), G(n,m), uniform spacings.

The graph samplers never materialize an adjacency structure; they work with
edge indices into the C(n,2) pairs and keep only the degree array, so n in
the 10^5..10^6 range stays cheap.  Count vectors are truncated at a tail
bucket while tracking tail occupancy, so the conservation identities hold
exactly on every draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DuplicateEdge, SelfLoop, TooManyEdges

DEFAULT_MAX_K = 40


@dataclass(frozen=True)
class OccupancyProfile:
    """Counts of boxes by exact occupancy, with a tail bucket beyond max_k."""

    n: int
    m: int
    counts: np.ndarray          # counts[j] = boxes holding exactly j balls, j=0..max_k
    tail_boxes: int             # boxes with more than max_k balls
    tail_balls: int             # balls sitting in tail boxes

    def validate(self) -> None:
        assert int(self.counts.sum()) + self.tail_boxes == self.n
        ks = np.arange(len(self.counts))
        assert int((ks * self.counts).sum()) + self.tail_balls == self.m


@dataclass(frozen=True)
class DegreeCounts:
    """Counts of vertices by degree, with a tail bucket beyond max_k."""

    n: int
    m: int
    counts: np.ndarray          # counts[k] = vertices of degree k, k=0..max_k
    tail_vertices: int
    tail_degree_sum: int

    def validate(self) -> None:
        assert int(self.counts.sum()) + self.tail_vertices == self.n
        ks = np.arange(len(self.counts))
        assert int((ks * self.counts).sum()) + self.tail_degree_sum == 2 * self.m


@dataclass(frozen=True)
class SpacingsSample:
    """The n gaps induced by uniform points on the unit circle."""

    n: int
    s: np.ndarray

    def validate(self) -> None:
        assert np.all(self.s > 0.0)
        assert abs(self.s.sum() - 1.0) <= 1e-12


def _bucket(values: np.ndarray, total_units: int, max_k: int):
    """Split a per-item value array into counts 0..max_k plus tail bookkeeping."""
    counts_full = np.bincount(values, minlength=max_k + 1)
    counts = counts_full[: max_k + 1].copy()
    tail_items = int(counts_full[max_k + 1:].sum())
    ks = np.arange(len(counts))
    tail_units = total_units - int((ks * counts).sum())
    return counts, tail_items, tail_units


def sample_allocation(n: int, m: int, rng: np.random.Generator,
                      max_k: int = DEFAULT_MAX_K) -> OccupancyProfile:
    """Throw m balls uniformly and independently into n boxes."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    if m == 0:
        occ = np.zeros(n, dtype=np.int64)
    else:
        occ = np.bincount(rng.integers(0, n, size=m), minlength=n)
    counts, tail_boxes, tail_balls = _bucket(occ, m, max_k)
    return OccupancyProfile(n=n, m=m, counts=counts, tail_boxes=tail_boxes,
                            tail_balls=tail_balls)


def sample_poissonized_allocation(n: int, lam: float, rng: np.random.Generator,
                                  max_k: int = DEFAULT_MAX_K):
    """Poissonized model: i.i.d. Po(lam) balls per box; returns the profile and
    the realized total M ~ Po(lam * n)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if lam <= 0.0:
        raise ValueError(f"lambda must be positive, got {lam}")
    occ = rng.poisson(lam, size=n)
    m = int(occ.sum())
    counts, tail_boxes, tail_balls = _bucket(occ, m, max_k)
    return OccupancyProfile(n=n, m=m, counts=counts, tail_boxes=tail_boxes,
                            tail_balls=tail_balls), m


@lru_cache(maxsize=8)
def _pair_row_starts(n: int) -> np.ndarray:
    """row_starts[i] = linear index of pair (i, i+1) in the lexicographic
    enumeration of the C(n,2) vertex pairs."""
    return np.concatenate(([0], np.cumsum(n - 1 - np.arange(n - 1)))).astype(np.int64)


def _decode_pairs(n: int, idx: np.ndarray):
    starts = _pair_row_starts(n)
    i = np.searchsorted(starts, idx, side="right") - 1
    j = idx - starts[i] + i + 1
    return i, j


def _sample_edge_indices(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform m-subset of the C(n,2) edge indices."""
    c = n * (n - 1) // 2
    if m > c:
        raise TooManyEdges(f"m = {m} exceeds C(n,2) = {c}")
    if m == 0:
        return np.empty(0, dtype=np.int64)
    if m > 0.6 * c:
        return rng.permutation(c)[:m].astype(np.int64)
    # Rejection: grow a unique pool, then pick m of it at random.  The whole
    # procedure is equivariant under index permutations, so the result is a
    # uniform m-subset.
    pool = np.empty(0, dtype=np.int64)
    while pool.size < m:
        draw = rng.integers(0, c, size=max(2 * (m - pool.size) + 16, 64))
        pool = np.unique(np.concatenate([pool, draw]))
    return pool[rng.permutation(pool.size)[:m]]


def _degree_counts_from_indices(n: int, m: int, idx: np.ndarray,
                                max_k: int) -> DegreeCounts:
    i, j = _decode_pairs(n, idx)
    deg = np.bincount(np.concatenate([i, j]), minlength=n)
    counts, tail_vertices, tail_degree_sum = _bucket(deg, 2 * m, max_k)
    return DegreeCounts(n=n, m=m, counts=counts, tail_vertices=tail_vertices,
                        tail_degree_sum=tail_degree_sum)


def sample_gnp(n: int, p: float, rng: np.random.Generator,
               max_k: int = DEFAULT_MAX_K) -> DegreeCounts:
    """G(n, p): each of the C(n,2) edges present independently with probability p.

    Implemented as a binomial edge count followed by a uniform edge subset,
    which is the same law.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0,1], got {p}")
    c = n * (n - 1) // 2
    m = int(rng.binomial(c, p)) if c > 0 else 0
    idx = _sample_edge_indices(n, m, rng)
    return _degree_counts_from_indices(n, m, idx, max_k)


def sample_gnm(n: int, m: int, rng: np.random.Generator,
               max_k: int = DEFAULT_MAX_K) -> DegreeCounts:
    """G(n, m): a uniformly random graph with exactly m edges."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    idx = _sample_edge_indices(n, m, rng)
    return _degree_counts_from_indices(n, m, idx, max_k)


def degree_counts_from_edges(n: int, edges, max_k: int = DEFAULT_MAX_K) -> DegreeCounts:
    """Degree counts from an explicit edge list; rejects loops and duplicates."""
    seen = set()
    deg = np.zeros(n, dtype=np.int64)
    for u, v in edges:
        if u == v:
            raise SelfLoop(f"self-loop at vertex {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise DuplicateEdge(f"duplicate edge {key}")
        seen.add(key)
        deg[u] += 1
        deg[v] += 1
    m = len(seen)
    counts, tail_vertices, tail_degree_sum = _bucket(deg, 2 * m, max_k)
    return DegreeCounts(n=n, m=m, counts=counts, tail_vertices=tail_vertices,
                        tail_degree_sum=tail_degree_sum)


def sample_spacings(n: int, rng: np.random.Generator) -> SpacingsSample:
    """Spacings of n uniform points on a circle of circumference 1."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n == 1:
        return SpacingsSample(n=1, s=np.ones(1))
    pts = np.sort(rng.random(n))
    s = np.diff(pts, append=pts[0] + 1.0)
    return SpacingsSample(n=n, s=s)


def exceedance_count(sample: SpacingsSample, a: float) -> int:
    """Number of spacings greater than a/n."""
    if a <= 0.0:
        raise ValueError(f"a must be positive, got {a}")
    return int((sample.s > a / sample.n).sum())


# -- vectorized batch samplers (desk-scale n; used by enumeration-vs-sampler
#    checks where the replicate count is large) --------------------------------

def sample_allocation_batch(n: int, m: int, reps: int, rng: np.random.Generator,
                            max_k: int | None = None) -> np.ndarray:
    """reps independent allocations; returns the (reps, max_k+1) count matrix.

    max_k defaults to m, which makes the rows exhaustive (no tail)."""
    if max_k is None:
        max_k = m
    out = np.empty((reps, max_k + 1), dtype=np.int64)
    chunk = max(1, int(2e7) // max(m, 1))
    for lo in range(0, reps, chunk):
        hi = min(lo + chunk, reps)
        r = hi - lo
        if m == 0:
            occ = np.zeros((r, n), dtype=np.int64)
        else:
            boxes = rng.integers(0, n, size=(r, m))
            offsets = (np.arange(r) * n)[:, None]
            occ = np.bincount((boxes + offsets).ravel(), minlength=r * n).reshape(r, n)
        occ = np.clip(occ, 0, max_k)
        offsets = (np.arange(r) * (max_k + 1))[:, None]
        out[lo:hi] = np.bincount(
            (occ + offsets).ravel(), minlength=r * (max_k + 1)
        ).reshape(r, max_k + 1)
    return out


def sample_gnm_batch(n: int, m: int, reps: int, rng: np.random.Generator) -> np.ndarray:
    """reps independent G(n, m) draws; returns the (reps, n) degree-count matrix.

    Intended for small n (the key matrix is reps x C(n,2))."""
    c = n * (n - 1) // 2
    if m > c:
        raise TooManyEdges(f"m = {m} exceeds C(n,2) = {c}")
    i_all, j_all = _decode_pairs(n, np.arange(c, dtype=np.int64))
    out = np.empty((reps, n), dtype=np.int64)
    chunk = max(1, int(2e7) // max(c, 1))
    for lo in range(0, reps, chunk):
        hi = min(lo + chunk, reps)
        r = hi - lo
        if m == 0:
            deg = np.zeros((r, n), dtype=np.int64)
        else:
            keys = rng.random((r, c))
            chosen = np.argpartition(keys, m - 1, axis=1)[:, :m]
            ends = np.concatenate([i_all[chosen], j_all[chosen]], axis=1)
            offsets = (np.arange(r) * n)[:, None]
            deg = np.bincount((ends + offsets).ravel(), minlength=r * n).reshape(r, n)
        offsets = (np.arange(r) * n)[:, None]
        out[lo:hi] = np.bincount(
            (np.clip(deg, 0, n - 1) + offsets).ravel(), minlength=r * n
        ).reshape(r, n)
    return out


def dump_count_matrix(path, matrix: np.ndarray) -> None:
    """Flat little-endian int64 dump, one row per replicate."""
    np.ascontiguousarray(matrix, dtype="<i8").tofile(path)


def load_count_matrix(path, ncols: int) -> np.ndarray:
    flat = np.fromfile(path, dtype="<i8")
    if ncols <= 0 or flat.size % ncols:
        raise ValueError(f"file size {flat.size} not divisible by ncols={ncols}")
    return flat.reshape(-1, ncols)
