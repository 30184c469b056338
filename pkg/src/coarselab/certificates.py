"""Positive and negative certificates at family scale: exact vertex
expansion, expander and large-girth refutation scans, box-space lifting,
quantitative non-amenability profiles and growth-order comparison.

Exhaustive scans quantify over every set of diameter at most the requested
scale (each such set lies in the ball around its minimal point, which is how
the enumeration covers the class exactly); once pools outgrow the cap, the
ball-plus-greedy heuristic takes over and every affected row is flagged
non-exact.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import _search
from .errors import CapacityError, InputError
from .generators import BoxSpaceSpec, GraphFamily, cayley_quotient, hamming_power, spectral_gap
from .space import FiniteMetricSpace, boundary, count_less, girth, growth_profile


def worker_count() -> int:
    """Parallelism cap from COARSE_LAB_THREADS (default 1: sequential)."""
    try:
        return max(1, int(os.environ.get("COARSE_LAB_THREADS", "1")))
    except ValueError:
        return 1


def _member_map(fn, items):
    workers = worker_count()
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- vertex expansion ---------------------------------------------------------


@dataclass(frozen=True)
class CheegerResult:
    value: Fraction | float
    witness: tuple
    exact: bool


CHEEGER_EXACT_LIMIT = 22


def vertex_cheeger(space: FiniteMetricSpace) -> CheegerResult:
    """Exact vertex expansion min |boundary_1(A)| / |A| over |A| <= n/2.

    Exhaustive (and exact, returned as a Fraction) up to 22 vertices; larger
    graphs fall back to the spectral surrogate lambda_2 / (2 d_max), a lower
    bound flagged non-exact."""
    n = space.n
    if n <= CHEEGER_EXACT_LIMIT:
        best = _search.exhaustive_min_ratio(
            space, range(n), 1, None, max_size="half", cap=CHEEGER_EXACT_LIMIT
        )
        return CheegerResult(Fraction(int(best.num), int(best.den)), best.members, True)
    gap = spectral_gap(space)
    d_max = int(space.degrees().max())
    return CheegerResult(gap.lambda2 / (2.0 * d_max), (), False)


# -- refutation reports -------------------------------------------------------


@dataclass(frozen=True)
class ProfileRow:
    member: str
    radius: int
    scale: int
    value: float
    witness: tuple
    exact: bool
    note: str = ""


@dataclass(frozen=True)
class RefutationReport:
    kind: str
    rows: tuple
    skipped: tuple = ()
    fitted_base: float | None = None
    fit_residual: float | None = None
    conclusive: bool = True

    def min_value(self):
        vals = [r.value for r in self.rows]
        return min(vals) if vals else None


def _min_ratio_member(
    member, radius, scale, weights=None, candidates=None, boundary_in=None, cap=_search.POOL_CAP
):
    """Minimal boundary ratio over sets of diameter <= scale in one member;
    exhaustive when pools fit the cap, ball-plus-greedy otherwise.

    No size cap: the refutation claims quantify over every set of bounded
    diameter, whatever its cardinality."""
    cands = sorted(candidates) if candidates is not None else list(range(member.n))
    try:
        best = _search.exhaustive_min_ratio(
            member, cands, radius, scale, weights=weights, boundary_in=boundary_in,
            max_size=None, cap=cap,
        )
        return best, True
    except CapacityError:
        best = _search.greedy_min_ratio(
            member, cands, radius, scale, weights=weights, boundary_in=boundary_in, max_size=None
        )
        return best, False


def expander_refute(family: GraphFamily, scale: int, cap=_search.POOL_CAP) -> RefutationReport:
    """Check that no small-diameter set in a large enough member beats the
    member's certified vertex expansion.

    Members with fewer than twice the scale's ball-size bound (measured in
    the member itself) are skipped: for them a diameter-bounded set can
    exceed half the member and the expansion clause says nothing.  For each
    qualifying member the minimal boundary ratio over sets of diameter <=
    scale is tabulated; the expander pattern is min >= the certified
    expansion constant."""
    rows, skipped = [], []

    def handle(item):
        name, member = item
        n_s = growth_profile(member, scale).n(scale)
        if member.n < 2 * n_s:
            return ("skip", name, f"|member| = {member.n} < 2 N_S = {2 * n_s}")
        cheeger = vertex_cheeger(member)
        best, exact = _min_ratio_member(member, 1, scale, cap=cap)
        note = f"certified expansion {float(cheeger.value):.6g}" + ("" if cheeger.exact else " (spectral bound)")
        return (
            "row",
            ProfileRow(name, 1, scale, best.ratio, best.members, exact and cheeger.exact, note),
        )

    for res in _member_map(handle, list(zip(family.names, family.components))):
        if res[0] == "skip":
            skipped.append((res[1], res[2]))
        else:
            rows.append(res[1])
    return RefutationReport(
        kind="expander",
        rows=tuple(rows),
        skipped=tuple(skipped),
        conclusive=bool(rows),
    )


def girth_refute(family: GraphFamily, scale: int, cap=_search.POOL_CAP) -> RefutationReport:
    """Tree-range refutation: in members whose girth exceeds 2*scale + 2,
    every set of diameter <= scale lives in a tree-isometric region, so its
    boundary is at least |E|/(D-1).

    Candidate sets are restricted to full-degree vertices (degree >= 3):
    on a truncation the boundary of a set touching the cut leaves is not the
    boundary it would have in the infinite object, so sub-cubic vertices may
    serve as boundary but not as members.  Members containing vertices of
    degree < 3 everywhere (no admissible candidates) are errors."""
    rows, skipped = [], []
    degrees_all = family.space.degrees()
    d_bound = int(degrees_all.max())
    if d_bound < 3:
        raise InputError("refutation needs vertices of degree at least three")
    for name, member in zip(family.names, family.components):
        g = girth(member)
        if not g > 2 * scale + 2:
            skipped.append((name, f"girth {g} not > 2*scale+2 = {2 * scale + 2}"))
            continue
        deg = member.degrees()
        admissible = np.flatnonzero(deg >= 3).tolist()
        if not admissible:
            raise InputError(f"member {name} has no vertices of degree >= 3")
        # Boundaries count every vertex of the member: the cut leaves are
        # genuine points of the object the truncation approximates.
        best, exact = _min_ratio_member(
            member, 1, scale, candidates=admissible, boundary_in=range(member.n), cap=cap
        )
        rows.append(
            ProfileRow(name, 1, scale, best.ratio, best.members, exact, f"degree bound D = {d_bound}")
        )
    return RefutationReport(kind="girth", rows=tuple(rows), skipped=tuple(skipped), conclusive=bool(rows))


# -- box-space lifting --------------------------------------------------------


@dataclass(frozen=True)
class LiftResult:
    lifted: tuple
    lifted_boundary: tuple
    ambient_modulus: int
    injectivity_radius: int
    ratio: float
    verdict: bool  # ratio < eps in the ambient picture
    isometric: bool


@lru_cache(maxsize=64)
def _cached_quotient(kind: str, modulus: int):
    return cayley_quotient(BoxSpaceSpec(kind, (modulus,)), 0)


def injectivity_radius(spec: BoxSpaceSpec, level: int) -> int:
    """Radius below which balls of the quotient lift isometrically.

    For cyclic and torus towers this is exact from the shortest nontrivial
    kernel element; a generic quotient falls back to half its girth."""
    if spec.kind in ("cyclic", "torus"):
        m = spec.moduli[level]
        return (m - 1) // 2
    g = girth(cayley_quotient(spec, level))
    return 0 if g == float("inf") else int((g - 1) // 2)


def box_lift(spec: BoxSpaceSpec, level: int, members, eps: float) -> LiftResult:
    """Lift a quotient-level witness isometrically into a deep ambient level.

    Requires diam(E) + 2 below the injectivity radius; the set and its unit
    boundary then lift through centred residue representatives with all
    pairwise distances, hence both cardinalities, preserved exactly."""
    if spec.kind not in ("cyclic", "torus"):
        raise InputError("lifting is implemented for cyclic and torus towers")
    quotient = _cached_quotient(spec.kind, spec.moduli[level])
    members = tuple(sorted(set(quotient.check_ids(members))))
    if not members:
        raise InputError("nothing to lift")
    inj = injectivity_radius(spec, level)
    diam = quotient.subset_diameter(members)
    if not diam + 2 < inj:
        need = 2 * (diam + 3) + 1
        raise InputError(
            f"injectivity radius {inj} too small for diameter {diam}; "
            f"need a quotient of modulus at least {need}"
        )
    bnd = tuple(sorted(boundary(quotient, members, 1)))
    m = spec.moduli[level]
    ambient_mod = m
    for deeper in spec.moduli:
        if deeper > ambient_mod:
            ambient_mod = deeper
    ambient_mod = max(ambient_mod, 4 * (diam + 3))
    ambient = _cached_quotient(spec.kind, ambient_mod)

    def centered(delta, mod):
        d = delta % mod
        return d - mod if d > mod // 2 else d

    anchor = members[0]
    if spec.kind == "cyclic":

        def lift_point(y):
            return (anchor + centered(y - anchor, m)) % ambient_mod

    else:

        def lift_point(y):
            ya, yb = divmod(y, m)
            aa, ab = divmod(anchor, m)
            la = (aa + centered(ya - aa, m)) % ambient_mod
            lb = (ab + centered(yb - ab, m)) % ambient_mod
            return la * ambient_mod + lb

    region = members + bnd
    lifted_region = tuple(lift_point(y) for y in region)
    if len(set(lifted_region)) != len(region):
        raise InputError("lift collided: set wraps the quotient")
    src_idx = np.fromiter(region, dtype=np.int64)
    dst_idx = np.fromiter(lifted_region, dtype=np.int64)
    isometric = bool(
        np.array_equal(
            quotient.dist[np.ix_(src_idx, src_idx)], ambient.dist[np.ix_(dst_idx, dst_idx)]
        )
    )
    lifted = tuple(sorted(lifted_region[: len(members)]))
    amb_bnd = boundary(ambient, lifted, 1)
    lifted_bnd = tuple(sorted(amb_bnd))
    if isometric and set(lifted_bnd) != set(lifted_region[len(members) :]):
        isometric = False
    ratio = len(lifted_bnd) / len(lifted)
    return LiftResult(
        lifted=lifted,
        lifted_boundary=lifted_bnd,
        ambient_modulus=ambient_mod,
        injectivity_radius=inj,
        ratio=ratio,
        verdict=count_less(len(lifted_bnd), eps, len(lifted)),
        isometric=isometric,
    )


# -- quantitative negation profile --------------------------------------------


def exponential_fit(values):
    """(base, max log-residual) of a least-squares exponential fit; None when
    fewer than two positive samples."""
    pts = [(r, v) for r, v in values if v > 0]
    if len(pts) < 2:
        return None, None
    xs = np.array([p[0] for p in pts], dtype=np.float64)
    ys = np.log([p[1] for p in pts])
    slope, intercept = np.polyfit(xs, ys, 1)
    residual = float(np.abs(ys - (slope * xs + intercept)).max())
    return float(np.exp(slope)), residual


def neg_ula_profile(
    family: GraphFamily,
    radii,
    scales,
    *,
    margin: int = 0,
    size_floor: int | None = None,
    cap=_search.POOL_CAP,
) -> RefutationReport:
    """Tabulate f(R, S): the minimal uniform-measure boundary ratio over sets
    of diameter <= S inside members above the size floor.

    Every tabulated value is witnessed by a stored minimizing set.  With
    margin > 0, candidate members' points within `margin` of the member
    frontier (eccentricity-maximal vertices) are out of bounds for the set
    itself (their neighbourhoods are truncation artifacts); boundaries are
    still measured against the whole member.  The R-profile min over S is
    fitted with an exponential whose base and residual land in the report."""
    radii = sorted(set(int(r) for r in radii))
    scales = sorted(set(int(s) for s in scales))
    if not radii or not scales:
        raise InputError("need at least one radius and one scale")
    rows, skipped = [], []

    def handle(item):
        name, member = item
        out_rows, out_skips = [], []
        floors = {}
        for s in scales:
            floors[s] = 2 * growth_profile(member, s).n(s) if size_floor is None else size_floor
        weights = np.full(member.n, 1.0 / member.n)
        if margin > 0:
            ecc = member.eccentricities()
            fr = np.flatnonzero(ecc == ecc.max())
            d_to_fr = member.dist[:, fr].min(axis=1)
            admissible = np.flatnonzero(d_to_fr >= margin).tolist()
        else:
            admissible = list(range(member.n))
        if not admissible:
            return [], [(name, "no admissible points at this margin")]
        for s in scales:
            if member.n < floors[s]:
                out_skips.append((name, f"size {member.n} below floor {floors[s]} at scale {s}"))
                continue
            for r in radii:
                if r == 0:
                    out_rows.append(ProfileRow(name, 0, s, 0.0, (admissible[0],), True, "empty boundary"))
                    continue
                best, exact = _min_ratio_member(
                    member, r, s, weights=weights, candidates=admissible, cap=cap
                )
                if best is None:
                    out_skips.append((name, f"no candidates at radius {r}, scale {s}"))
                    continue
                out_rows.append(ProfileRow(name, r, s, best.ratio, best.members, exact))
        return out_rows, out_skips

    for out_rows, out_skips in _member_map(handle, list(zip(family.names, family.components))):
        rows.extend(out_rows)
        skipped.extend(out_skips)
    if not rows:
        raise InputError("profile table came out empty (all members skipped)")
    profile = {}
    for r in radii:
        vals = [row.value for row in rows if row.radius == r]
        if vals:
            profile[r] = min(vals)
    base, residual = exponential_fit(sorted(profile.items()))
    return RefutationReport(
        kind="profile",
        rows=tuple(rows),
        skipped=tuple(skipped),
        fitted_base=base,
        fit_residual=residual,
    )


# -- growth comparison ---------------------------------------------------------


@dataclass(frozen=True)
class GrowthRelation:
    verdict: str  # "preceq" or "incomparable-on-sample"
    c: float | None = None
    d: float | None = None
    samples: int = field(default=0, compare=False)


def growth_compare(f_samples, g_samples, c_grid=None, d_grid=None) -> GrowthRelation:
    """Sample-limited growth-order test: f precedes g when some (c, d) in the
    grids gives f(n) <= c * g(min(d*n, n_max)) at every sample point.

    Sample lists are indexed from 1.  The verdict only speaks for the
    sampled range."""
    f = list(map(float, f_samples))
    g = list(map(float, g_samples))
    if not f or len(f) != len(g):
        raise InputError("need two sample lists over a common range")
    n_max = len(f)
    c_grid = [1, 2, 4, 8, 16] if c_grid is None else sorted(c_grid)
    d_grid = [1, 2, 4, 8, 16] if d_grid is None else sorted(d_grid)
    for c in c_grid:
        for d in d_grid:
            if all(f[n - 1] <= c * g[min(int(d * n), n_max) - 1] for n in range(1, n_max + 1)):
                return GrowthRelation("preceq", float(c), float(d), n_max)
    return GrowthRelation("incomparable-on-sample", None, None, n_max)


def growth_equivalent(f_samples, g_samples, c_grid=None, d_grid=None) -> bool:
    return (
        growth_compare(f_samples, g_samples, c_grid, d_grid).verdict == "preceq"
        and growth_compare(g_samples, f_samples, c_grid, d_grid).verdict == "preceq"
    )


# -- cube powers ----------------------------------------------------------------


@dataclass(frozen=True)
class CubeRow:
    power: int
    size: int
    min_diameter: int | None
    witness: tuple
    exact: bool
    note: str = ""


def cube_refute(q: int, powers, radius: int, eps: float, *, cap=_search.POOL_CAP, size_cap=4096):
    """Minimal Folner-witness diameter per power of the cyclic-group cube.

    For each power the smallest diameter of a set E with
    |boundary_R(E)| < eps |E| is computed exhaustively while pools fit the
    cap; beyond the cap, ball candidates give a flagged upper bound.  A
    growing column is the uniform-amenability obstruction pattern."""
    rows = []
    for n in sorted(set(int(p) for p in powers)):
        try:
            cube = hamming_power(q, n, cap=size_cap)
        except InputError as exc:
            rows.append(CubeRow(n, q**n, None, (), False, f"skipped: {exc}"))
            continue

        def feasible(size, bnd, _eps=eps):
            return bnd < _eps * size

        try:
            found = _search.exhaustive_min_diameter(
                cube, range(cube.n), feasible, cube.diameter(), cap=cap, radius=radius
            )
            if found is None:
                rows.append(CubeRow(n, cube.n, None, (), True, "no witness at any diameter"))
            else:
                d, members = found
                rows.append(CubeRow(n, cube.n, d, tuple(sorted(members)), True))
            continue
        except CapacityError:
            pass
        best = None
        for x in range(cube.n):
            row = cube.dist[x]
            for r in range(cube.diameter() + 1):
                members = np.flatnonzero(row <= r)
                bnd = boundary(cube, members.tolist(), radius)
                if len(bnd) < eps * members.size:
                    d = int(cube.dist[np.ix_(members, members)].max())
                    if best is None or d < best[0]:
                        best = (d, tuple(int(v) for v in members))
                    break
        if best is None:
            rows.append(CubeRow(n, cube.n, None, (), False, "cap exceeded; no ball witness either"))
        else:
            rows.append(CubeRow(n, cube.n, best[0], best[1], False, "upper bound (cap exceeded)"))
    return rows
