"""Constructors for the example families: assembled graph families, random
regular graphs, Cayley quotient towers, Hamming powers, and the spectral-gap
estimate used to certify expander candidates.

All generators are pure given their seed, so rerunning a configuration
reproduces its output bit for bit.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .space import SEPARATED, FiniteMetricSpace, girth

HAMMING_CAP = 4096


class GraphFamily:
    """A disjoint union of finite connected graphs with growing separation.

    Inter-component distances follow the basepoint-chain rule
    d(x, y) = d(x, b_m) + p_m + p_n + d(b_n, y) for x in member m, y in
    member n; the pads p_i are strictly increasing, so the separation of the
    n-th member from the rest grows without bound along the family.
    """

    def __init__(self, components, pads=None, basepoints=None, names=None):
        components = list(components)
        if not components:
            raise InputError("a family needs at least one member")
        for i, comp in enumerate(components):
            if not comp.is_connected():
                raise InputError(f"member {i} is disconnected")
        k = len(components)
        if pads is None:
            pads = tuple(range(1, k + 1))
        pads = tuple(int(p) for p in pads)
        if len(pads) != k:
            raise InputError("need one pad per member")
        if any(p <= 0 for p in pads) or any(a >= b for a, b in zip(pads, pads[1:])):
            raise InputError("pads must be strictly increasing positive integers")
        if basepoints is None:
            basepoints = tuple(0 for _ in components)
        basepoints = tuple(int(b) for b in basepoints)
        for comp, b in zip(components, basepoints):
            comp.check_ids([b])
        if names is None:
            names = tuple(f"X{i}" for i in range(k))

        offsets = []
        total = 0
        for comp in components:
            offsets.append(total)
            total += comp.n
        dist = np.full((total, total), SEPARATED, dtype=np.int64)
        for comp, off in zip(components, offsets):
            dist[off : off + comp.n, off : off + comp.n] = comp.dist
        for m in range(k):
            for n in range(m + 1, k):
                om, on = offsets[m], offsets[n]
                to_bm = components[m].dist[:, basepoints[m]]
                to_bn = components[n].dist[basepoints[n], :]
                block = to_bm[:, None] + pads[m] + pads[n] + to_bn[None, :]
                dist[om : om + components[m].n, on : on + components[n].n] = block
                dist[on : on + components[n].n, om : om + components[m].n] = block.T

        self.space = FiniteMetricSpace(dist, validate=False)
        self.components = tuple(components)
        self.pads = pads
        self.basepoints = basepoints
        self.names = tuple(names)
        self.offsets = tuple(offsets)

    def __len__(self):
        return len(self.components)

    def member_ids(self, i) -> tuple:
        off = self.offsets[i]
        return tuple(range(off, off + self.components[i].n))

    def member_space(self, i) -> FiniteMetricSpace:
        return self.components[i]

    def member_of(self, point: int) -> int:
        for i, off in enumerate(self.offsets):
            if off <= point < off + self.components[i].n:
                return i
        raise InputError(f"point id {point} out of range")

    def separation(self, i) -> int:
        """Distance from member i to the rest of the family."""
        if len(self.components) == 1:
            return SEPARATED
        other = min(p for j, p in enumerate(self.pads) if j != i)
        return self.pads[i] + other


def assemble_family(components, pads=None, basepoints=None, names=None) -> GraphFamily:
    return GraphFamily(components, pads=pads, basepoints=basepoints, names=names)


# -- elementary graphs -------------------------------------------------


def path_graph(n: int) -> FiniteMetricSpace:
    if n < 1:
        raise InputError("path needs at least one vertex")
    return FiniteMetricSpace.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> FiniteMetricSpace:
    if n < 3:
        raise InputError("cycle needs at least three vertices")
    return FiniteMetricSpace.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> FiniteMetricSpace:
    if n < 1:
        raise InputError("complete graph needs at least one vertex")
    return FiniteMetricSpace.from_edges(n, itertools.combinations(range(n), 2))


def tree_graph(degree: int, depth: int) -> FiniteMetricSpace:
    """Truncation of the infinite degree-regular tree: the root has `degree`
    children and every other internal vertex has degree-1 children, down to
    the given depth.  Leaves at the last level keep degree one."""
    if degree < 2 or depth < 0:
        raise InputError("need degree >= 2 and depth >= 0")
    edges = []
    frontier = [0]
    next_id = 1
    for level in range(depth):
        new_frontier = []
        for v in frontier:
            children = degree if level == 0 else degree - 1
            for _ in range(children):
                edges.append((v, next_id))
                new_frontier.append(next_id)
                next_id += 1
        frontier = new_frontier
    return FiniteMetricSpace.from_edges(next_id, edges)


# -- random regular graphs ---------------------------------------------


def random_regular(n: int, d: int, seed: int, require_connected: bool = True):
    """Uniform-ish d-regular simple graph from the pairing model.

    Pairings producing loops or multi-edges (or, when requested, a
    disconnected graph) are rejected and redrawn from the same stream, so a
    fixed seed reproduces the same graph exactly.  Returns (space, girth).
    """
    if d < 3:
        raise InputError("degree must be at least 3")
    if n <= d:
        raise InputError("need more vertices than the degree")
    if (n * d) % 2 != 0:
        raise InputError("n*d must be even")
    rng = random.Random(seed)
    while True:
        stubs = [v for v in range(n) for _ in range(d)]
        rng.shuffle(stubs)
        edges = set()
        ok = True
        for i in range(0, len(stubs), 2):
            a, b = stubs[i], stubs[i + 1]
            if a == b or (min(a, b), max(a, b)) in edges:
                ok = False
                break
            edges.add((min(a, b), max(a, b)))
        if not ok:
            continue
        space = FiniteMetricSpace.from_edges(n, edges)
        if require_connected and not space.is_connected():
            continue
        return space, girth(space)


def large_girth_members(sizes, d: int, seed: int, min_girth: int):
    """Random regular members redrawn until each reaches the girth floor."""
    members = []
    rng = random.Random(seed)
    for n in sizes:
        while True:
            sub_seed = rng.getrandbits(48)
            space, g = random_regular(n, d, sub_seed)
            if g >= min_girth:
                members.append(space)
                break
    return members


# -- Cayley quotient towers ---------------------------------------------


@dataclass(frozen=True)
class BoxSpaceSpec:
    """Tower of finite quotients of a fixed group with a fixed generating set.

    kind "cyclic": quotients Z/mZ with generators {+1, -1}; kind "torus":
    quotients (Z/kZ)^2 with the four unit steps; kind "table": a single
    explicit finite group given by its multiplication table.  Tower moduli
    must divide each other in sequence so the kernels decrease.
    """

    kind: str
    moduli: tuple = ()
    table: tuple = ()
    generators: tuple = ()

    def __post_init__(self):
        if self.kind in ("cyclic", "torus"):
            if not self.moduli:
                raise InputError("tower needs at least one level")
            for a, b in zip(self.moduli, self.moduli[1:]):
                if b % a != 0 or b <= a:
                    raise InputError("tower moduli must strictly increase and divide in sequence")
        elif self.kind == "table":
            if not self.table or not self.generators:
                raise InputError("table groups need a multiplication table and generators")
            m = len(self.table)
            identity = None
            for e in range(m):
                if all(self.table[e][h] == h for h in range(m)) and all(
                    self.table[g][e] == g for g in range(m)
                ):
                    identity = e
                    break
            if identity is None:
                raise InputError("multiplication table has no identity element")
            gens = set(self.generators)
            inv = {}
            for g in range(m):
                for h in range(m):
                    if self.table[g][h] == identity:
                        inv[g] = h
            for s in gens:
                if inv.get(s) not in gens:
                    raise InputError("generating set must be symmetric (closed under inverses)")
        else:
            raise InputError(f"unknown group kind {self.kind!r}")

    @property
    def levels(self) -> int:
        return len(self.moduli) if self.kind in ("cyclic", "torus") else 1


def cayley_quotient(spec: BoxSpaceSpec, level: int) -> FiniteMetricSpace:
    """Cayley graph of the quotient at the given tower level."""
    if spec.kind == "cyclic":
        m = spec.moduli[level]
        if m == 1:
            return FiniteMetricSpace.from_edges(1, [])
        if m == 2:
            return FiniteMetricSpace.from_edges(2, [(0, 1)])
        return cycle_graph(m)
    if spec.kind == "torus":
        k = spec.moduli[level]
        if k == 1:
            return FiniteMetricSpace.from_edges(1, [])
        edges = set()
        for a in range(k):
            for b in range(k):
                v = a * k + b
                for da, db in ((1, 0), (0, 1)):
                    w = ((a + da) % k) * k + (b + db) % k
                    if v != w:
                        edges.add((min(v, w), max(v, w)))
        return FiniteMetricSpace.from_edges(k * k, edges)
    # explicit multiplication table
    m = len(spec.table)
    edges = set()
    for g in range(m):
        for s in spec.generators:
            h = spec.table[g][s]
            if h != g:
                edges.add((min(g, h), max(g, h)))
    space = FiniteMetricSpace.from_edges(m, edges)
    if not space.is_connected():
        raise InputError("generating set does not generate the group (Cayley graph disconnected)")
    return space


def box_family(spec: BoxSpaceSpec, pads=None) -> GraphFamily:
    members = [cayley_quotient(spec, i) for i in range(spec.levels)]
    names = [f"level{i}" for i in range(spec.levels)]
    return GraphFamily(members, pads=pads, names=names)


# -- Hamming powers ------------------------------------------------------


def hamming_power(q: int, n: int, cap: int = HAMMING_CAP) -> FiniteMetricSpace:
    """Graph on (Z/qZ)^n whose edges are single-coordinate cyclic unit steps,
    so the path metric is the coordinate-wise cyclic l^1 metric.

    Sizes are capped: these families lose bounded geometry as n grows, and
    the cap keeps them at desk scale."""
    if q < 2 or n < 1:
        raise InputError("need q >= 2 and n >= 1")
    size = q**n
    if size > cap:
        raise InputError(f"q^n = {size} exceeds the size cap {cap}")
    edges = set()
    for v in range(size):
        digits = []
        rest = v
        for _ in range(n):
            digits.append(rest % q)
            rest //= q
        for pos in range(n):
            scale = q**pos
            for step in (1, q - 1):
                w = v + ((digits[pos] + step) % q - digits[pos]) * scale
                if v != w:
                    edges.add((min(v, w), max(v, w)))
    return FiniteMetricSpace.from_edges(size, edges)


# -- spectral gap --------------------------------------------------------


@dataclass(frozen=True)
class SpectralGap:
    lambda2: float
    connected: bool
    regular_degree: int | None
    iterations: int = field(default=0, compare=False)


def spectral_gap(space: FiniteMetricSpace, tol: float = 1e-8, seed: int = 0) -> SpectralGap:
    """Second-smallest Laplacian eigenvalue, by power iteration on the
    spectral shift 2*d_max - L deflated against the constant vector."""
    n = space.n
    deg = space.degrees().astype(np.float64)
    if n == 1:
        return SpectralGap(0.0, True, 0)
    adj = (space.dist == 1).astype(np.float64)
    lap = np.diag(deg) - adj
    shift = 2.0 * max(deg.max(), 1.0)
    rng = np.random.default_rng(seed)
    best = 0.0
    iters = 0
    for _ in range(3):
        v = rng.standard_normal(n)
        v -= v.mean()
        v /= np.linalg.norm(v)
        lam = 0.0
        for it in range(100_000):
            w = shift * v - lap @ v
            w -= w.mean()
            norm = np.linalg.norm(w)
            if norm == 0:
                break
            w /= norm
            new_lam = float(w @ (shift * w - lap @ w))
            iters = it + 1
            if abs(new_lam - lam) <= tol * max(abs(new_lam), 1.0):
                lam = new_lam
                break
            lam = new_lam
            v = w
        best = max(best, lam)
    lambda2 = shift - best
    degrees = space.degrees()
    regular = int(degrees[0]) if np.all(degrees == degrees[0]) else None
    connected = space.is_connected()
    return SpectralGap(float(lambda2), connected, regular, iters)


# -- serialization --------------------------------------------------------


def family_to_doc(family: GraphFamily, provenance=None) -> dict:
    comps = []
    for name, comp in zip(family.names, family.components):
        edges = [
            [int(i), int(j)]
            for i in range(comp.n)
            for j in range(i + 1, comp.n)
            if comp.dist[i, j] == 1
        ]
        comps.append({"name": name, "n": comp.n, "edges": edges})
    doc = {"components": comps}
    if len(family) > 1:
        doc["separation"] = {
            "mode": "chain",
            "basepoints": list(family.basepoints),
            "pad": list(family.pads),
        }
    if provenance is not None:
        doc["provenance"] = provenance
    return doc


def family_from_doc(doc: dict) -> GraphFamily:
    try:
        comps_doc = doc["components"]
    except (KeyError, TypeError):
        raise InputError("space file must contain a 'components' list")
    if not comps_doc:
        raise InputError("space file contains no components")
    components, names = [], []
    for i, comp in enumerate(comps_doc):
        try:
            n = int(comp["n"])
            edges = comp["edges"]
        except (KeyError, TypeError):
            raise InputError(f"component {i} must have fields 'n' and 'edges'")
        components.append(FiniteMetricSpace.from_edges(n, edges))
        names.append(comp.get("name", f"X{i}"))
    sep = doc.get("separation")
    pads = basepoints = None
    if sep is not None:
        if sep.get("mode", "chain") != "chain":
            raise InputError(f"unknown separation mode {sep.get('mode')!r}")
        pads = sep.get("pad")
        basepoints = sep.get("basepoints")
    return GraphFamily(components, pads=pads, basepoints=basepoints, names=names)
