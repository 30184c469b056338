"""Folner-type witness searches and the conversions between their set,
measure and function forms.

Search convention: witnesses are sought inside the localizing set F (or the
support of the localizing measure), and by default their size is capped at
half of F.  The half cap matches the vertex-expansion convention (which
quantifies over sets of at most half the vertices) and is what makes a
NotFound on an expander meaningful; the whole finite set is otherwise always
a witness, since its boundary inside itself is empty.  Pass max_size=None to
search unrestricted, as the greedy sparsifier does.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _search
from .errors import CapacityError, InputError
from .space import (
    SLACK,
    FiniteMetricSpace,
    ProbMeasure,
    boundary,
    count_less,
    growth_profile,
    measure_less,
    neighborhood,
)


@dataclass(frozen=True)
class FolnerWitness:
    """A set whose relative boundary is small at the recorded radius."""

    members: tuple
    radius: int
    ratio: float
    diameter: int
    mode: str  # "count" or "measure"
    threshold: float | None = None
    exact: bool = False


@dataclass(frozen=True)
class NotFound:
    """Negative search outcome; `exact` says whether it is a proof."""

    exact: bool
    best_ratio: float | None = None
    reason: str = ""


@dataclass(frozen=True)
class VariationalWitness:
    """Finitely supported nonnegative function with a small smoothed-gradient
    to mass ratio at the recorded radius."""

    phi: dict
    radius: int
    ratio: float
    support_diameter: int
    mode: str  # "count" or "measure"
    threshold: float | None = None


class PropAField:
    """One probability measure per point, each supported near its basepoint."""

    def __init__(self, space: FiniteMetricSpace, rows):
        rows = np.asarray(rows, dtype=np.float64)
        if rows.shape != (space.n, space.n):
            raise InputError("need one row of weights per point")
        if np.any(rows < 0):
            raise InputError("field weights must be nonnegative")
        sums = rows.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > SLACK):
            raise InputError("every row must be a probability measure")
        rows.setflags(write=False)
        self.space = space
        self.rows = rows

    @classmethod
    def ball_uniform(cls, space: FiniteMetricSpace, radius: int, members=None) -> "PropAField":
        """xi_x = uniform on B(x; radius), optionally intersected with a carrier."""
        carrier = set(range(space.n) if members is None else space.check_ids(members))
        rows = np.zeros((space.n, space.n))
        for x in range(space.n):
            ball = [y for y in space.ball(x, radius).tolist() if y in carrier]
            if not ball:
                raise InputError(f"empty localized measure at point {x}")
            rows[x, ball] = 1.0 / len(ball)
        return cls(space, rows)

    @classmethod
    def dirac(cls, space: FiniteMetricSpace) -> "PropAField":
        return cls(space, np.eye(space.n))

    def support_radius(self) -> int:
        rad = 0
        for x in range(self.space.n):
            supp = np.flatnonzero(self.rows[x] > 0)
            rad = max(rad, int(self.space.dist[x, supp].max()))
        return rad


# -- variational ratio --------------------------------------------------


def variational_ratio(space, weights, phi, radius) -> tuple:
    """(num, den) of the smoothed-gradient inequality: num sums
    mu(x)*|phi(x)-phi(y)| over ordered support pairs within the radius, den
    is the mu-weighted l1 mass of phi."""
    w = np.asarray(weights, dtype=np.float64)
    supp = np.flatnonzero(w > 0)
    if supp.size == 0:
        raise InputError("measure has empty support")
    vals = np.array([phi.get(int(x), 0.0) for x in supp])
    close = space.dist[np.ix_(supp, supp)] <= radius
    diffs = np.abs(vals[:, None] - vals[None, :])
    num = float(w[supp] @ (close * diffs).sum(axis=1))
    den = float(w[supp] @ np.abs(vals))
    return num, den


def _phi_support_diameter(space, phi) -> int:
    supp = [x for x, v in phi.items() if v != 0]
    if not supp:
        return 0
    return space.subset_diameter(supp)


# -- witness searches ----------------------------------------------------


def folner_search(
    space: FiniteMetricSpace,
    F,
    radius: int,
    eps: float,
    s_max: int,
    mode: str = "exact",
    *,
    max_size="half",
    cap=_search.POOL_CAP,
):
    """Search for E within F with diam(E) <= s_max and
    |boundary_R(E) ∩ F| < eps * |E|, strictly.

    Exact mode enumerates every candidate and its NotFound is a proof of
    absence (within the size convention); heuristic mode scans balls plus a
    greedy local search, and its NotFound proves nothing.
    """
    F = sorted(set(space.check_ids(F)))
    if not F:
        raise InputError("localizing set must be nonempty")
    if s_max < 0 or eps <= 0:
        raise InputError("need s_max >= 0 and eps > 0")
    if mode == "exact":
        hit = _search.exhaustive_min_ratio(
            space, F, radius, s_max, max_size=max_size, cap=cap, stop_eps=eps
        )
        if hit is None:
            return NotFound(exact=True, reason="exhausted all candidate sets")
        return _count_witness(space, hit.members, F, radius, eps, exact=True)
    if mode != "heuristic":
        raise InputError(f"unknown search mode {mode!r}")
    best = _search.greedy_min_ratio(space, F, radius, s_max, max_size=max_size)
    if best is not None and count_less(int(best.num), eps, len(best.members)):
        return _count_witness(space, best.members, F, radius, eps, exact=False)
    return NotFound(
        exact=False,
        best_ratio=None if best is None else best.ratio,
        reason="heuristic candidates exhausted; not a proof of absence",
    )


def _count_witness(space, members, F, radius, eps, exact):
    bnd = boundary(space, members, radius)
    num = len(bnd & set(F))
    ratio = num / len(members)
    if not count_less(num, eps, len(members)):
        raise RuntimeError("search returned an invalid witness; enumeration bug")
    return FolnerWitness(
        members=tuple(sorted(members)),
        radius=radius,
        ratio=ratio,
        diameter=space.subset_diameter(members),
        mode="count",
        threshold=eps,
        exact=exact,
    )


def ula_mu_witness(
    space: FiniteMetricSpace,
    mu: ProbMeasure,
    radius: int,
    eps: float,
    s_max: int,
    mode: str = "exact",
    *,
    max_size="half",
    cap=_search.POOL_CAP,
):
    """Measure form of the witness search: E within supp(mu) with
    mu(boundary_R(E)) < eps * mu(E), strictly up to the float slack."""
    return _measure_witness(space, mu.weights, radius, eps, s_max, mode, max_size=max_size, cap=cap)


def _measure_witness(space, weights, radius, eps, s_max, mode, *, max_size="half", cap=_search.POOL_CAP):
    w = np.asarray(weights, dtype=np.float64)
    F = np.flatnonzero(w > 0).tolist()
    if not F:
        raise InputError("measure has empty support")
    if s_max < 0 or eps <= 0:
        raise InputError("need s_max >= 0 and eps > 0")
    if mode == "exact":
        hit = _search.exhaustive_min_ratio(
            space, F, radius, s_max, weights=w, max_size=max_size, cap=cap, stop_eps=eps
        )
        if hit is None:
            return NotFound(exact=True, reason="exhausted all candidate sets")
        return _measure_witness_of(space, hit.members, w, radius, eps, exact=True)
    if mode != "heuristic":
        raise InputError(f"unknown search mode {mode!r}")
    best = _search.greedy_min_ratio(space, F, radius, s_max, weights=w, max_size=max_size)
    if best is not None and measure_less(best.num, eps, best.den):
        return _measure_witness_of(space, best.members, w, radius, eps, exact=False)
    return NotFound(
        exact=False,
        best_ratio=None if best is None else best.ratio,
        reason="heuristic candidates exhausted; not a proof of absence",
    )


def _measure_witness_of(space, members, weights, radius, eps, exact):
    bnd = sorted(boundary(space, members, radius))
    num = float(weights[bnd].sum()) if bnd else 0.0
    den = float(weights[list(members)].sum())
    if not measure_less(num, eps, den):
        raise RuntimeError("search returned an invalid witness; enumeration bug")
    return FolnerWitness(
        members=tuple(sorted(members)),
        radius=radius,
        ratio=num / den,
        diameter=space.subset_diameter(members),
        mode="measure",
        threshold=eps,
        exact=exact,
    )


# -- layer-cake conversions ----------------------------------------------


def variational_to_set(space: FiniteMetricSpace, mu: ProbMeasure, phi, radius: int) -> FolnerWitness:
    """Best superlevel set of phi, by boundary-mass to mass ratio.

    phi is decomposed over its distinct positive values into nested
    superlevel sets; negative values are folded by |phi| first, and values
    off the support of mu are ignored (only they never enter the
    inequality).  If phi satisfies the smoothed-gradient inequality at some
    eps, the returned set satisfies the boundary inequality at the same eps;
    otherwise the best layer is still returned, ratio reported as is.
    """
    w = mu.weights
    levels = sorted({abs(v) for x, v in phi.items() if v != 0 and w[int(x)] > 0}, reverse=True)
    if not levels:
        raise InputError("phi vanishes on the support of mu")
    best = None
    for level in levels:
        members = tuple(
            sorted(x for x in np.flatnonzero(w > 0).tolist() if abs(phi.get(x, 0.0)) >= level)
        )
        bnd = sorted(boundary(space, members, radius))
        num = float(w[bnd].sum()) if bnd else 0.0
        den = float(w[list(members)].sum())
        diam = space.subset_diameter(members)
        key = (num / den, members[0], diam, members)
        if best is None or key < best[0]:
            best = (key, members, num, den, diam)
    _, members, num, den, diam = best
    return FolnerWitness(
        members=members,
        radius=radius,
        ratio=num / den,
        diameter=diam,
        mode="measure",
        exact=True,
    )


def set_to_variational(
    space: FiniteMetricSpace, mu: ProbMeasure, e_prime, radius: int, eps: float
) -> VariationalWitness:
    """Blow a strong set witness up into a function witness.

    Requires the double-radius inequality mu(boundary_{2R}(E')) <
    (eps/N_R) mu(E'); the characteristic function of the R-neighbourhood of
    E' then satisfies the smoothed-gradient inequality at (R, eps).  The
    support diameter is measured and reported rather than trusted from the
    a-priori bound."""
    e_prime = tuple(sorted(set(space.check_ids(e_prime))))
    if not e_prime:
        raise InputError("set witness must be nonempty")
    n_r = growth_profile(space, radius).n(radius)
    bnd2 = sorted(boundary(space, e_prime, 2 * radius))
    num_pre = mu.mass(bnd2)
    den_pre = mu.mass(e_prime)
    if not measure_less(num_pre, eps / n_r, den_pre):
        raise InputError(
            "precondition fails: mu(boundary_{2R} E') = "
            f"{num_pre:.6g} is not < (eps/N_R) mu(E') = {eps / n_r:.6g} * {den_pre:.6g}"
        )
    members = sorted(neighborhood(space, e_prime, radius))
    phi = {int(x): 1.0 for x in members}
    num, den = variational_ratio(space, mu.weights, phi, radius)
    if not measure_less(num, eps, den):
        raise RuntimeError("blow-up produced an invalid function witness; logic bug")
    return VariationalWitness(
        phi=phi,
        radius=radius,
        ratio=num / den,
        support_diameter=space.subset_diameter(members),
        mode="measure",
        threshold=eps,
    )


# -- property A ----------------------------------------------------------


def property_a_defect(space: FiniteMetricSpace, field: PropAField, radius: int) -> tuple:
    """(max l1 distance between field rows over pairs within the radius,
    support radius of the field)."""
    rows = field.rows
    defect = 0.0
    for x in range(space.n):
        close = np.flatnonzero((space.dist[x] <= radius) & (np.arange(space.n) != x))
        if close.size:
            defect = max(defect, float(np.abs(rows[close] - rows[x]).sum(axis=1).max()))
    return defect, field.support_radius()


def property_a_to_folner(
    space: FiniteMetricSpace, field: PropAField, mu: ProbMeasure, radius: int
):
    """Extract a function witness from a property-A field by scanning anchor
    points: phi(x) = xi_x(anchor), anchor chosen to minimise the ratio.

    Averaging over anchors bounds the best ratio by N_R times the field's
    defect at the radius.  Rows with mass outside supp(mu) are restricted
    and renormalised first (flagged in the result)."""
    w = mu.weights
    F = np.flatnonzero(w > 0)
    rows = field.rows[np.ix_(F, F)]
    restricted = False
    sums = rows.sum(axis=1)
    if np.any(sums <= 0):
        raise InputError("some field row has no mass on the support of mu")
    if np.any(np.abs(sums - 1.0) > SLACK):
        restricted = True
        rows = rows / sums[:, None]

    close = space.dist[np.ix_(F, F)] <= radius
    best = None
    for j, anchor in enumerate(F.tolist()):
        vals = rows[:, j]
        den = float(w[F] @ vals)
        if den <= 0:
            continue
        diffs = np.abs(vals[:, None] - vals[None, :])
        num = float(w[F] @ (close * diffs).sum(axis=1))
        key = (num / den, anchor)
        if best is None or key < best[0]:
            best = (key, anchor, vals, num, den)
    if best is None:
        raise InputError("field is degenerate on the support of mu")
    _, anchor, vals, num, den = best
    phi = {int(x): float(v) for x, v in zip(F.tolist(), vals) if v != 0}
    witness = VariationalWitness(
        phi=phi,
        radius=radius,
        ratio=num / den,
        support_diameter=_phi_support_diameter(space, phi),
        mode="measure",
    )
    return witness, anchor, restricted


# -- coarse pullback -------------------------------------------------------


def pullback_witness(cmap, F, e_prime, radius: int, eps: float) -> FolnerWitness:
    """Pull a strong witness on the target back through a coarse map.

    E' (restricted to f(F)) must satisfy the counting inequality at
    (rho_plus(R), eps/D); the preimage inside F then satisfies it at
    (R, eps).  The conclusion is re-verified by direct boundary computation,
    never trusted from the argument alone."""
    source, target = cmap.source, cmap.target
    F = sorted(set(source.check_ids(F)))
    fF = cmap.image(F)
    e_prime = tuple(sorted(set(target.check_ids(e_prime)) & fF))
    if not e_prime:
        raise InputError("set witness misses the image of F entirely")
    r_up = cmap.rho_plus(radius)
    bnd_y = boundary(target, e_prime, r_up)
    num_y = len(bnd_y & fF)
    den_y = len(e_prime)
    d = cmap.fiber_bound
    if not count_less(num_y, eps / d, den_y):
        raise InputError(
            f"precondition fails on the target: |boundary_{r_up}(E') ∩ f(F)| = {num_y} "
            f"is not < (eps/D)|E'| = {eps / d:.6g} * {den_y}"
        )
    members = tuple(sorted(set(cmap.preimage(e_prime)) & set(F)))
    bnd_x = boundary(source, members, radius)
    num_x = len(bnd_x & set(F))
    if not count_less(num_x, eps, len(members)):
        raise RuntimeError("pullback produced an invalid witness; distortion data inconsistent")
    return FolnerWitness(
        members=members,
        radius=radius,
        ratio=num_x / len(members),
        diameter=source.subset_diameter(members),
        mode="count",
        threshold=eps,
        exact=True,
    )


# -- isodiametric machinery -------------------------------------------------


@dataclass(frozen=True)
class IsodiametricResult:
    value: int
    witness: tuple
    exact: bool  # False: value is only an upper bound (caps exceeded)


def _frontier(space: FiniteMetricSpace) -> frozenset:
    """Eccentricity-maximal points; the operative frontier of a truncation."""
    ecc = space.eccentricities()
    return frozenset(np.flatnonzero(ecc == ecc.max()).tolist())


def isodiametric(
    space: FiniteMetricSpace, n: int, margin: int = 0, *, cap=_search.POOL_CAP
) -> IsodiametricResult:
    """Smallest diameter of a set whose unit boundary is at most a 1/n
    fraction of it: walk diameters upward, exhausting each level.

    margin > 0 drops boundary points within `margin` of the frontier
    (eccentricity-maximal points) from the count, which controls edge
    effects on truncations of infinite spaces.  When pools outgrow the cap
    before a witness appears, ball-shaped candidates provide an upper bound
    and the result is flagged inexact.
    """
    if n < 1:
        raise InputError("n must be at least 1")
    if margin < 0:
        raise InputError("margin must be nonnegative")
    if not space.is_connected():
        raise InputError("isodiametric function needs a connected space")
    excluded = frozenset()
    if margin > 0:
        fr = sorted(_frontier(space))
        d_to_frontier = space.dist[:, fr].min(axis=1)
        excluded = frozenset(np.flatnonzero(d_to_frontier < margin).tolist())

    def feasible(size, bnd):
        return n * bnd <= size

    diam = space.diameter()
    try:
        found = _search.exhaustive_min_diameter(
            space, range(space.n), feasible, diam, boundary_exclude=excluded, cap=cap
        )
        if found is not None:
            d, members = found
            return IsodiametricResult(d, tuple(sorted(members)), exact=True)
        raise InputError(f"no admissible set at any diameter <= {diam}")
    except CapacityError:
        pass
    # Ball candidates as an upper bound, flagged.
    best = None
    for x in range(space.n):
        row = space.dist[x]
        for r in range(diam + 1):
            members = np.flatnonzero(row <= r)
            d_to = space.dist[:, members].min(axis=1)
            bnd = [z for z in np.flatnonzero(d_to <= 1).tolist() if row[z] > r and z not in excluded]
            if feasible(len(members), len(bnd)):
                d = int(space.dist[np.ix_(members, members)].max())
                if best is None or d < best[0]:
                    best = (d, tuple(int(m) for m in members))
                break
    if best is None:
        raise InputError("no admissible set found even among balls")
    return IsodiametricResult(best[0], best[1], exact=False)


def layered_folner(space: FiniteMetricSpace, E, radius: int, c: float):
    """Telescope the R-fold neighbourhood growth of E into a single good
    layer: the first m in [0, R-1] whose one-step growth is at most
    (2/c)^(1/R).

    Requires |N_R(E)| <= (2/c)|E|; the product of the R one-step growth
    factors is then at most 2/c, so some factor meets the geometric mean.
    Returns (m, layer, layer_ratio, boundary_ratio) with layer_ratio the
    one-step neighbourhood growth |N_1(N_m(E))| / |N_m(E)| and
    boundary_ratio = layer_ratio - 1.
    """
    E = tuple(sorted(set(space.check_ids(E))))
    if not E:
        raise InputError("need a nonempty starting set")
    if radius < 1 or not 0 < c:
        raise InputError("need radius >= 1 and c > 0")
    grown = len(neighborhood(space, E, radius))
    if grown > (2.0 / c) * len(E) + SLACK:
        raise InputError(
            f"precondition fails: |N_R(E)| = {grown} exceeds (2/c)|E| = {(2.0 / c) * len(E):.6g}"
        )
    bound = (2.0 / c) ** (1.0 / radius)
    layer = set(E)
    for m in range(radius):
        nxt = neighborhood(space, layer, 1)
        ratio = len(nxt) / len(layer)
        if ratio <= bound + SLACK:
            members = tuple(sorted(layer))
            return m, members, ratio, ratio - 1.0
        layer = nxt
    raise RuntimeError("telescoping failed to produce a layer; logic bug")


def wmsp_growth(space: FiniteMetricSpace, F, pieces, radius: int, c: float):
    """Pick the decomposition piece with the slowest R-neighbourhood growth.

    F must be amenable at R in the weak sense |boundary_R(F)| < |F| and the
    pieces must form a counting sparsification of F at separation > 2R with
    total size at least c|F|; the chosen piece then has
    |N_R(piece)| <= (2/c)|piece|.  Returns (piece, growth_ratio)."""
    F = sorted(set(space.check_ids(F)))
    bnd_f = boundary(space, F, radius)
    if not len(bnd_f) < len(F):
        raise InputError("F is not amenable at this radius: |boundary_R(F)| >= |F|")
    pieces = [tuple(sorted(set(space.check_ids(p)))) for p in pieces]
    if not pieces or any(not p for p in pieces):
        raise InputError("need nonempty pieces")
    fset = set(F)
    total = 0
    for p in pieces:
        if not set(p) <= fset:
            raise InputError("pieces must lie inside F")
        total += len(p)
    if total < c * len(F) - SLACK:
        raise InputError(f"pieces capture {total} points; need at least c|F| = {c * len(F):.6g}")
    for i, p in enumerate(pieces):
        for q in pieces[i + 1 :]:
            sep = int(space.dist[np.ix_(list(p), list(q))].min())
            if sep <= 2 * radius:
                raise InputError(f"pieces only {sep} apart; separation must exceed {2 * radius}")
    ratios = []
    for p in pieces:
        grown = len(neighborhood(space, p, radius))
        ratios.append((grown / len(p), p[0], p))
    ratios.sort()
    ratio, _, piece = ratios[0]
    if ratio > 2.0 / c + SLACK:
        raise RuntimeError("no piece met the guaranteed growth bound; accounting bug")
    return piece, ratio
