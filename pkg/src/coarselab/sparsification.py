"""Sparse decompositions: the greedy carve-out construction, the selection
argument back to a single good piece, and the verifiers for the metric,
weak-metric and finite-asymptotic-dimension variants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .amenability import FolnerWitness, NotFound, _measure_witness
from .errors import InputError, NoWitnessError
from .space import SLACK, FiniteMetricSpace, ProbMeasure, boundary, measure_less, neighborhood


@dataclass(frozen=True)
class Stage:
    members: tuple
    ratio: float
    diameter: int


@dataclass(frozen=True)
class SparseDecomposition:
    """Pairwise far-apart pieces of bounded diameter carrying most of the mass."""

    pieces: tuple
    radius: int
    size_bound: int
    mass: float
    stages: tuple = field(default=())


@dataclass(frozen=True)
class ClauseReport:
    ok: bool
    mass: float
    mass_ok: bool
    diameter_ok: bool
    separation_ok: bool
    disjoint_ok: bool
    violations: tuple = ()


@dataclass(frozen=True)
class AsdimDecomposition:
    """Colour classes, each a list of far-apart pieces of bounded diameter."""

    classes: tuple  # tuple of tuples of point tuples
    tau: int  # diameter bound at the radius it certifies


def _normalize_pieces(space, pieces):
    out = []
    for p in pieces:
        ids = tuple(sorted(set(space.check_ids(p))))
        if not ids:
            raise InputError("empty piece")
        out.append(ids)
    return tuple(out)


def greedy_sparsify(
    space: FiniteMetricSpace,
    mu: ProbMeasure,
    radius: int,
    eps: float,
    size_bound: int,
    mode: str = "heuristic",
) -> SparseDecomposition:
    """Carve witnesses out of the support until nothing is left.

    Each stage finds a set E_i in the current residual F_i with
    mu(boundary_R(E_i) ∩ F_i) < eps * mu(E_i) and diameter at most the size
    bound, then removes its closed R-neighbourhood; the pieces are therefore
    more than R apart, and the stagewise accounting
      mu(F_1) = sum_i [mu(E_i) + mu(boundary_R(E_i) ∩ F_i)]
    forces total piece mass above 1/(1+eps).  The residual measure is the
    plain restriction of mu (ratios are scale invariant, so no renormalising
    drift).  A stage with no witness raises NoWitnessError carrying the
    residual: that is the expander behaviour.
    """
    if eps <= 0:
        raise InputError("eps must be positive")
    weights = mu.weights.copy()
    residual = set(np.flatnonzero(weights > 0).tolist())
    pieces, stages = [], []
    accounted = 0.0
    while residual:
        w = np.zeros_like(weights)
        idx = sorted(residual)
        w[idx] = weights[idx]
        found = _measure_witness(space, w, radius, eps, size_bound, mode, max_size=None)
        if isinstance(found, NotFound):
            raise NoWitnessError(
                f"no witness at stage {len(pieces) + 1}; residual has {len(residual)} points "
                f"(best ratio seen: {found.best_ratio})"
            )
        pieces.append(found.members)
        stages.append(Stage(found.members, found.ratio, found.diameter))
        removed = neighborhood(space, found.members, radius) & residual
        accounted += float(weights[sorted(removed)].sum())
        residual -= removed
    mass = float(sum(weights[list(p)].sum() for p in pieces))
    total = float(weights.sum())
    if abs(accounted - total) > SLACK:
        raise RuntimeError(
            f"stage accounting identity broken: carved {accounted!r} of {total!r}"
        )
    if not mass > total / (1.0 + eps) - SLACK:
        raise RuntimeError("mass bound 1/(1+eps) violated despite valid stages; logic bug")
    return SparseDecomposition(
        pieces=tuple(pieces),
        radius=radius,
        size_bound=size_bound,
        mass=mass,
        stages=tuple(stages),
    )


def verify_msp(
    space: FiniteMetricSpace,
    mu: ProbMeasure,
    pieces,
    radius: int,
    size_bound: int,
    c: float,
) -> ClauseReport:
    """Check the three sparsification clauses exactly, reporting violations:
    total mass >= c, piece diameters <= size bound, separations > radius."""
    pieces = _normalize_pieces(space, pieces)
    violations = []
    seen = set()
    disjoint_ok = True
    for i, p in enumerate(pieces):
        if seen & set(p):
            disjoint_ok = False
            violations.append(f"piece {i} overlaps an earlier piece")
        seen |= set(p)
    mass = float(sum(mu.mass(p) for p in pieces)) if disjoint_ok else mu.mass(sorted(seen))
    mass_ok = mass >= c - SLACK
    if not mass_ok:
        violations.append(f"mass {mass:.6g} below c = {c:.6g}")
    diameter_ok = True
    for i, p in enumerate(pieces):
        d = space.subset_diameter(p)
        if d > size_bound:
            diameter_ok = False
            violations.append(f"piece {i} has diameter {d} > {size_bound}")
    separation_ok = True
    for i, p in enumerate(pieces):
        for j in range(i + 1, len(pieces)):
            q = pieces[j]
            sep = int(space.dist[np.ix_(list(p), list(q))].min())
            if sep <= radius:
                separation_ok = False
                violations.append(f"pieces {i},{j} only {sep} apart; need > {radius}")
    ok = mass_ok and diameter_ok and separation_ok and disjoint_ok
    return ClauseReport(ok, mass, mass_ok, diameter_ok, separation_ok, disjoint_ok, tuple(violations))


def verify_wmsp(
    space: FiniteMetricSpace, F, pieces, radius: int, diameter_bound: int, c: float
) -> ClauseReport:
    """Counting variant: pieces inside F, |pieces| >= c|F| (non-strict),
    diameters <= the bound, separations > radius."""
    F = sorted(set(space.check_ids(F)))
    if not F:
        raise InputError("F must be nonempty")
    pieces = _normalize_pieces(space, pieces)
    fake_mu = ProbMeasure.uniform(space, F)
    report = verify_msp(space, fake_mu, [p for p in pieces], radius, diameter_bound, 0.0)
    violations = list(report.violations)
    inside = all(set(p) <= set(F) for p in pieces)
    if not inside:
        violations.append("some piece leaves F")
    captured = sum(len(p) for p in pieces)
    mass = captured / len(F)
    mass_ok = captured >= c * len(F) - SLACK
    if not mass_ok:
        violations.append(f"captured {captured} of {len(F)} points; need at least c|F|")
    ok = mass_ok and report.diameter_ok and report.separation_ok and report.disjoint_ok and inside
    return ClauseReport(
        ok, mass, mass_ok, report.diameter_ok, report.separation_ok, report.disjoint_ok, tuple(violations)
    )


def decomposition_to_folner(
    space: FiniteMetricSpace,
    mu: ProbMeasure,
    pieces,
    radius: int,
    c: float,
    size_bound: int | None = None,
) -> FolnerWitness:
    """Select the piece with the smallest R-neighbourhood mass ratio.

    Pieces must be separated by more than 2R with total mass at least c, so
    their R-neighbourhoods are disjoint and sum to at most 1; the best piece
    therefore has mu(boundary_R(E)) <= (1/c - 1) mu(E), which is re-verified
    directly before returning."""
    pieces = _normalize_pieces(space, pieces)
    bound = size_bound if size_bound is not None else max(space.subset_diameter(p) for p in pieces)
    report = verify_msp(space, mu, pieces, 2 * radius, bound, c)
    if not report.ok:
        raise InputError("decomposition invalid at doubled radius: " + "; ".join(report.violations))
    nbrs = [neighborhood(space, p, radius) for p in pieces]
    for i in range(len(nbrs)):
        for j in range(i + 1, len(nbrs)):
            if nbrs[i] & nbrs[j]:
                raise RuntimeError("R-neighbourhoods overlap despite 2R separation; logic bug")
    total_nbr = sum(mu.mass(sorted(nb)) for nb in nbrs)
    if total_nbr > 1.0 + SLACK:
        raise RuntimeError("disjoint neighbourhood masses exceed 1; measure inconsistent")
    best = None
    for p, nb in zip(pieces, nbrs):
        den = mu.mass(p)
        if den <= 0:
            continue
        num = mu.mass(sorted(nb))
        key = (num / den, p[0], space.subset_diameter(p), p)
        if best is None or key < best[0]:
            best = (key, p, num, den)
    if best is None:
        raise InputError("no piece carries positive mass")
    _, piece, num, den = best
    bnd_mass = mu.mass(sorted(boundary(space, piece, radius)))
    threshold = 1.0 / c - 1.0
    if bnd_mass > threshold * den + SLACK:
        raise RuntimeError("selected piece misses the guaranteed bound; accounting bug")
    return FolnerWitness(
        members=piece,
        radius=radius,
        ratio=bnd_mass / den,
        diameter=space.subset_diameter(piece),
        mode="measure",
        threshold=threshold,
        exact=True,
    )


# -- finite asymptotic dimension -------------------------------------------


def verify_fad(space: FiniteMetricSpace, cover: AsdimDecomposition, radius: int) -> ClauseReport:
    """Check a colour cover: classes jointly cover the space, pieces within a
    class sit more than `radius` apart and have diameter at most tau."""
    violations = []
    covered = set()
    diameter_ok = True
    separation_ok = True
    for ci, cls in enumerate(cover.classes):
        pieces = _normalize_pieces(space, cls)
        for p in pieces:
            covered |= set(p)
            d = space.subset_diameter(p)
            if d > cover.tau:
                diameter_ok = False
                violations.append(f"class {ci}: piece diameter {d} > tau = {cover.tau}")
        for i, p in enumerate(pieces):
            for q in pieces[i + 1 :]:
                sep = int(space.dist[np.ix_(list(p), list(q))].min())
                if sep <= radius:
                    separation_ok = False
                    violations.append(f"class {ci}: pieces only {sep} apart; need > {radius}")
    missing = sorted(set(range(space.n)) - covered)
    cover_ok = not missing
    if missing:
        violations.append(f"points not covered by any class: {missing[:10]}")
    ok = cover_ok and diameter_ok and separation_ok
    return ClauseReport(ok, 1.0 if cover_ok else 0.0, cover_ok, diameter_ok, separation_ok, True, tuple(violations))


def fad_to_wmsp(space: FiniteMetricSpace, cover: AsdimDecomposition, F, radius: int) -> SparseDecomposition:
    """Pigeonhole the colour classes against F: with n+1 classes covering
    everything, the best class meets at least |F|/(n+1) points of F, and its
    pieces (cut down to F) inherit separation and diameter bounds."""
    report = verify_fad(space, cover, radius)
    if not report.ok:
        raise InputError("invalid cover: " + "; ".join(report.violations))
    F = sorted(set(space.check_ids(F)))
    if not F:
        raise InputError("F must be nonempty")
    fset = set(F)
    best = None
    for ci, cls in enumerate(cover.classes):
        pieces = [tuple(sorted(set(p) & fset)) for p in cls]
        pieces = [p for p in pieces if p]
        captured = sum(len(p) for p in pieces)
        key = (-captured, ci)
        if best is None or key < best[0]:
            best = (key, pieces, captured)
    _, pieces, captured = best
    k = len(cover.classes)
    if captured * k < len(F):
        raise RuntimeError("pigeonhole failed: best class captures less than |F|/(n+1); logic bug")
    return SparseDecomposition(
        pieces=tuple(pieces),
        radius=radius,
        size_bound=cover.tau,
        mass=captured / len(F),
    )
