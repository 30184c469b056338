"""Finite integer-metric spaces and the ball/boundary calculus on them.

A space is a finite point set {0, ..., n-1} with a symmetric integer
distance matrix, normally the shortest-path metric of a unit-edge graph
computed by BFS from every vertex.  Points in different components sit at
the sentinel distance SEPARATED, which compares larger than any radius a
desk-scale query will use, so balls and boundaries never leak across
components unless an explicit separation rule was assembled in (see
generators.assemble_family).

Everything here is immutable after construction and safe to share between
threads.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InputError

# Sentinel for "separated": larger than any radius in desk-scale use.
SEPARATED = 2**31

# Strict inequalities on float quantities are tested with this slack;
# integer counts are compared exactly.
SLACK = 1e-12


def measure_less(num: float, eps: float, den: float, slack: float = SLACK) -> bool:
    """Strict num < eps*den for float measures, with a small safety slack."""
    return num < eps * den - slack


def count_less(bnd: int, eps: float, size: int) -> bool:
    """Strict bnd < eps*size for integer counts (small ints are float-exact)."""
    return bnd < eps * size


class FiniteMetricSpace:
    """Integer metric on points 0..n-1, backed by an explicit distance matrix.

    Use :meth:`from_edges` for the usual case of a unit-edge graph; the
    all-pairs distances are then filled in by BFS from every vertex.
    """

    def __init__(self, dist: np.ndarray, validate: bool = True):
        dist = np.asarray(dist, dtype=np.int64)
        if validate:
            if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
                raise InputError("distance matrix must be square")
            if np.any(np.diag(dist) != 0):
                raise InputError("distance matrix must vanish on the diagonal")
            if np.any(dist != dist.T):
                raise InputError("distance matrix must be symmetric")
            if np.any(dist < 0):
                raise InputError("distances must be nonnegative")
        dist.setflags(write=False)
        self.dist = dist
        self.n = dist.shape[0]
        self._adjacency = None

    # -- construction -------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges) -> "FiniteMetricSpace":
        """Shortest-path metric of the simple graph on n vertices."""
        if n <= 0:
            raise InputError("need at least one point")
        adj = [[] for _ in range(n)]
        seen = set()
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if not (0 <= i < n and 0 <= j < n):
                raise InputError(f"edge ({i},{j}) out of range for n={n}")
            if i == j:
                raise InputError(f"self-loop at {i}")
            key = (min(i, j), max(i, j))
            if key in seen:
                continue
            seen.add(key)
            adj[i].append(j)
            adj[j].append(i)
        dist = np.full((n, n), SEPARATED, dtype=np.int64)
        for src in range(n):
            dist[src, src] = 0
            q = deque([src])
            row = dist[src]
            while q:
                u = q.popleft()
                du = row[u]
                for v in adj[u]:
                    if row[v] == SEPARATED:
                        row[v] = du + 1
                        q.append(v)
        space = cls(dist, validate=False)
        space._adjacency = tuple(tuple(sorted(a)) for a in adj)
        return space

    # -- basic queries ------------------------------------------------

    @property
    def points(self) -> range:
        return range(self.n)

    def d(self, x: int, y: int) -> int:
        return int(self.dist[x, y])

    def check_ids(self, members) -> tuple:
        ids = tuple(int(m) for m in members)
        for m in ids:
            if not 0 <= m < self.n:
                raise InputError(f"point id {m} out of range (n={self.n})")
        return ids

    def ball(self, x: int, radius: int) -> np.ndarray:
        """Ids of the closed ball of the given radius around x."""
        (x,) = self.check_ids([x])
        return np.flatnonzero(self.dist[x] <= radius)

    @property
    def adjacency(self):
        """Neighbour lists of the unit-distance graph."""
        if self._adjacency is None:
            adj = []
            for x in range(self.n):
                adj.append(tuple(np.flatnonzero(self.dist[x] == 1).tolist()))
            self._adjacency = tuple(adj)
        return self._adjacency

    def degrees(self) -> np.ndarray:
        return np.count_nonzero(self.dist == 1, axis=1)

    def is_connected(self) -> bool:
        return not np.any(self.dist >= SEPARATED)

    def diameter(self) -> int:
        """Largest distance; SEPARATED when the space is disconnected."""
        return int(self.dist.max(initial=0))

    def eccentricities(self) -> np.ndarray:
        return self.dist.max(axis=1)

    def subset_diameter(self, members) -> int:
        ids = self.check_ids(members)
        if not ids:
            raise InputError("diameter of the empty set is undefined")
        idx = np.fromiter(ids, dtype=np.int64)
        return int(self.dist[np.ix_(idx, idx)].max())

    def restricted(self, members) -> "FiniteMetricSpace":
        """Sub-space on the given points, with inherited distances."""
        ids = sorted(set(self.check_ids(members)))
        idx = np.fromiter(ids, dtype=np.int64)
        return FiniteMetricSpace(self.dist[np.ix_(idx, idx)].copy(), validate=False)


# -- set calculus -----------------------------------------------------


def neighborhood(space: FiniteMetricSpace, members, radius: int) -> frozenset:
    """Closed radius-neighbourhood: all points within the radius of the set."""
    if radius < 0:
        raise InputError("radius must be nonnegative")
    ids = space.check_ids(members)
    if not ids:
        raise InputError("neighbourhood of the empty set is undefined")
    idx = np.fromiter(set(ids), dtype=np.int64)
    d_to_set = space.dist[:, idx].min(axis=1)
    return frozenset(np.flatnonzero(d_to_set <= radius).tolist())


def boundary(space: FiniteMetricSpace, members, radius: int) -> frozenset:
    """Points outside the set but within the radius of it."""
    nbr = neighborhood(space, members, radius)
    return nbr - frozenset(space.check_ids(members))


@dataclass(frozen=True)
class GrowthProfile:
    """Table radius -> largest ball cardinality at that radius."""

    values: tuple

    def __post_init__(self):
        if self.values[0] != 1:
            raise InputError("a radius-0 ball is a single point")
        if any(a > b for a, b in zip(self.values, self.values[1:])):
            raise InputError("ball sizes must be nondecreasing in the radius")

    def n(self, radius: int) -> int:
        if radius >= len(self.values):
            raise InputError(f"profile only tabulated up to radius {len(self.values) - 1}")
        return self.values[radius]

    @property
    def r_max(self) -> int:
        return len(self.values) - 1


def growth_profile(space: FiniteMetricSpace, r_max: int) -> GrowthProfile:
    """Exact maxima of |B(x; r)| over all centers, for r = 0..r_max."""
    if r_max < 0:
        raise InputError("r_max must be nonnegative")
    values = []
    for r in range(r_max + 1):
        values.append(int(np.count_nonzero(space.dist <= r, axis=1).max()))
    return GrowthProfile(tuple(values))


def girth(space: FiniteMetricSpace):
    """Length of the shortest cycle of the unit-distance graph; inf for forests.

    BFS from every root; the first non-tree edge met at a root gives a closed
    walk through it, and the minimum over roots is exactly the girth.
    """
    adj = space.adjacency
    best = float("inf")
    for root in range(space.n):
        depth = {root: 0}
        parent = {root: -1}
        q = deque([root])
        while q:
            u = q.popleft()
            if depth[u] * 2 >= best:
                break
            for v in adj[u]:
                if v not in depth:
                    depth[v] = depth[u] + 1
                    parent[v] = u
                    q.append(v)
                elif v != parent[u]:
                    best = min(best, depth[u] + depth[v] + 1)
    return best


def is_coarsely_geodesic(space: FiniteMetricSpace) -> bool:
    """True iff every finite distance is realised by a chain of unit steps."""
    unit = FiniteMetricSpace.from_edges(
        space.n,
        ((i, j) for i in range(space.n) for j in range(i + 1, space.n) if space.dist[i, j] == 1),
    )
    finite = space.dist < SEPARATED
    return bool(np.all(unit.dist[finite] == space.dist[finite]))


# -- measures ---------------------------------------------------------


class ProbMeasure:
    """Nonnegative weights summing to one on the points of a space."""

    def __init__(self, space: FiniteMetricSpace, weights):
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (space.n,):
            raise InputError(f"need one weight per point ({space.n})")
        if np.any(w < 0):
            raise InputError("weights must be nonnegative")
        total = float(w.sum())
        if abs(total - 1.0) > SLACK:
            raise InputError(f"weights must sum to 1 (got {total!r})")
        w.setflags(write=False)
        self.space = space
        self.weights = w

    @classmethod
    def uniform(cls, space: FiniteMetricSpace, members=None) -> "ProbMeasure":
        if members is None:
            ids = list(range(space.n))
        else:
            ids = sorted(set(space.check_ids(members)))
            if not ids:
                raise InputError("uniform measure needs a nonempty carrier")
        w = np.zeros(space.n)
        w[ids] = 1.0 / len(ids)
        return cls(space, w)

    @classmethod
    def point_mass(cls, space: FiniteMetricSpace, x: int) -> "ProbMeasure":
        (x,) = space.check_ids([x])
        w = np.zeros(space.n)
        w[x] = 1.0
        return cls(space, w)

    @property
    def support(self) -> tuple:
        return tuple(np.flatnonzero(self.weights > 0).tolist())

    def mass(self, members) -> float:
        ids = self.space.check_ids(members)
        if not ids:
            return 0.0
        return float(self.weights[np.fromiter(set(ids), dtype=np.int64)].sum())


# -- coarse maps ------------------------------------------------------


class CoarseMap:
    """Total map between spaces together with its measured distortion data.

    The distortion tables are the tightest nondecreasing envelopes of the
    image distances: rho_minus(t) <= d(f x1, f x2) <= rho_plus(t) whenever
    d(x1, x2) = t, and fiber_bound is the largest preimage cardinality.
    """

    def __init__(self, source: FiniteMetricSpace, target: FiniteMetricSpace, mapping):
        mapping = tuple(int(v) for v in mapping)
        if len(mapping) != source.n:
            raise InputError("mapping must be total on the source")
        target.check_ids(mapping)
        self.source = source
        self.target = target
        self.mapping = mapping
        m = np.fromiter(mapping, dtype=np.int64)
        src = source.dist
        img = target.dist[np.ix_(m, m)]
        finite = src < SEPARATED
        ts = np.unique(src[finite])
        raw_min = {int(t): int(img[(src == t) & finite].min()) for t in ts}
        raw_max = {int(t): int(img[(src == t) & finite].max()) for t in ts}
        t_max = int(ts.max()) if ts.size else 0
        lo, hi = [], []
        running_hi = 0
        for t in range(t_max + 1):
            running_hi = max(running_hi, raw_max.get(t, 0))
            hi.append(running_hi)
        running_lo = None
        for t in range(t_max, -1, -1):
            v = raw_min.get(t)
            if running_lo is None:
                running_lo = v if v is not None else 0
            elif v is not None:
                running_lo = min(running_lo, v)
            lo.append(running_lo)
        lo.reverse()
        self.rho_minus_table = tuple(lo)
        self.rho_plus_table = tuple(hi)
        counts = np.bincount(m, minlength=target.n)
        self.fiber_bound = int(counts.max())

    def __call__(self, x: int) -> int:
        return self.mapping[x]

    def rho_plus(self, t: int) -> int:
        t = min(int(t), len(self.rho_plus_table) - 1)
        return self.rho_plus_table[max(t, 0)]

    def rho_minus_inverse(self, s: int) -> int:
        """Largest source distance whose lower distortion bound is <= s."""
        best = 0
        for t, v in enumerate(self.rho_minus_table):
            if v <= s:
                best = t
        return best

    def image(self, members) -> frozenset:
        return frozenset(self.mapping[x] for x in self.source.check_ids(members))

    def preimage(self, members) -> frozenset:
        targets = set(self.target.check_ids(members))
        return frozenset(x for x in range(self.source.n) if self.mapping[x] in targets)


def pushforward(measure: ProbMeasure, cmap: CoarseMap) -> ProbMeasure:
    """Image measure: each target point receives its fiber's total mass."""
    if cmap.source is not measure.space and cmap.source.n != measure.space.n:
        raise InputError("map and measure live on different spaces")
    w = np.zeros(cmap.target.n)
    np.add.at(w, np.fromiter(cmap.mapping, dtype=np.int64), measure.weights)
    return ProbMeasure(cmap.target, w)


# -- serialization ----------------------------------------------------


def space_to_json(components, separation=None, provenance=None) -> dict:
    """Build the on-disk document: components with edges, plus separation data."""
    doc = {"components": components}
    if separation is not None:
        doc["separation"] = separation
    if provenance is not None:
        doc["provenance"] = provenance
    return doc


def load_space_file(path):
    """Read a space file; returns the parsed document (see generators.load_family)."""
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"space file not found: {path}")
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: line {exc.lineno} col {exc.colno}")
