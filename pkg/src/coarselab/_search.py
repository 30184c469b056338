"""Exhaustive and greedy set-search kernels shared by the witness searches
and the certificate scans.

Exhaustive scans enumerate every candidate set of bounded diameter exactly
once: a set is visited at its minimal-id point x, as a subset of the pool
{y in candidates : y >= x, d(x, y) <= S}.  Enumeration is a depth-first
include/exclude walk over the pool carrying the union-of-neighbourhoods
bitmask, so boundary sizes come out of popcounts; between-pool-point
distances larger than S are pre-encoded as "forbidden" masks, which keeps
the diameter constraint O(1) per step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError

# Largest pool (free choice points per center) an exact scan will accept.
POOL_CAP = 20


@dataclass
class ScanBest:
    """Minimal-ratio record from an exhaustive or heuristic scan."""

    ratio: float
    members: tuple
    num: float
    den: float
    exact: bool


def _half_cap(candidates, max_size):
    if max_size == "half":
        return (len(candidates) + 1) // 2
    return max_size if max_size is not None else len(candidates)


def _center_pools(space, candidates, s_max):
    """Yield (x, pool) with pool the >=x candidates within s_max of x."""
    cands = sorted(candidates)
    for x in cands:
        if s_max is None:
            pool = [y for y in cands if y > x]
        else:
            row = space.dist[x]
            pool = [y for y in cands if y > x and row[y] <= s_max]
        yield x, pool


def exhaustive_min_ratio(
    space,
    candidates,
    radius,
    s_max,
    *,
    weights=None,
    boundary_in=None,
    max_size="half",
    cap=POOL_CAP,
    stop_eps=None,
):
    """Scan every E (with min-id dedup) of diameter <= s_max inside the
    candidate set, minimising boundary(E)/size(E).

    weights: per-point masses for both numerator and denominator (counting
    measure when None).  boundary_in: restrict boundary points to this set
    (defaults to the candidate set for counting scans, everywhere for
    weighted scans whose weights already vanish off-support).
    stop_eps: return early at the first E with num < stop_eps * den
    (strict, integer-exact for counting).

    Raises CapacityError when some pool exceeds the cap.
    """
    candidates = sorted(set(candidates))
    size_cap = _half_cap(candidates, max_size)
    dist = space.dist
    counting = weights is None
    if boundary_in is None:
        boundary_set = set(candidates) if counting else set(range(space.n))
    else:
        boundary_set = set(boundary_in)

    if stop_eps is None:
        # A minimum needs full coverage; fail before burning time on a scan
        # that cannot be complete.
        for x, pool in _center_pools(space, candidates, s_max):
            if len(pool) > cap:
                raise CapacityError(
                    f"exact scan pool of {len(pool) + 1} points at center {x} exceeds cap {cap}"
                )

    best = None
    oversized = None
    for x, pool in _center_pools(space, candidates, s_max):
        if len(pool) > cap:
            # A witness found elsewhere is still valid, but full coverage is
            # gone, so a negative answer must become a capacity error below.
            oversized = oversized or (x, len(pool) + 1)
            continue
        # Local universe: pool points plus everything their balls can touch.
        universe = {x}
        universe.update(pool)
        for p in [x] + pool:
            universe.update(np.flatnonzero(dist[p] <= radius).tolist())
        universe = sorted(universe)
        uindex = {p: i for i, p in enumerate(universe)}
        nbr_mask = {}
        for p in [x] + pool:
            m = 0
            for z in np.flatnonzero(dist[p] <= radius).tolist():
                m |= 1 << uindex[z]
            nbr_mask[p] = m
        allowed_bnd = 0
        for z in universe:
            if z in boundary_set:
                allowed_bnd |= 1 << uindex[z]
        if counting:
            uweights = None
        else:
            uweights = [float(weights[z]) for z in universe]
        forbid = {}
        for i, p in enumerate(pool):
            m = 0
            if s_max is not None:
                for j, q in enumerate(pool):
                    if dist[p, q] > s_max:
                        m |= 1 << j
            forbid[i] = m

        x_bit = 1 << uindex[x]
        base_w = 1.0 if counting else float(weights[x])

        # DFS over include/exclude of pool points; evaluate on every include.
        stack = [(0, x_bit, nbr_mask[x], 0, 1, base_w, (x,))]
        while stack:
            i, mem_bits, nbrs, dead, size, mass, members = stack.pop()
            bnd_bits = nbrs & ~mem_bits & allowed_bnd
            if counting:
                num = bnd_bits.bit_count()
                den = size
            else:
                num = 0.0
                bb = bnd_bits
                while bb:
                    low = bb & -bb
                    num += uweights[low.bit_length() - 1]
                    bb ^= low
                den = mass
            if den > 0:
                if stop_eps is not None:
                    hit = num < stop_eps * den if counting else num < stop_eps * den - 1e-12
                    if hit:
                        return ScanBest(num / den, members, num, den, True)
                ratio = num / den
                key = (ratio, members[0], len(members), members)
                if best is None or key < (best.ratio, best.members[0], len(best.members), best.members):
                    best = ScanBest(ratio, members, num, den, True)
            if size >= size_cap:
                continue
            for j in range(len(pool) - 1, i - 1, -1):
                if dead & (1 << j):
                    continue
                p = pool[j]
                stack.append(
                    (
                        j + 1,
                        mem_bits | (1 << uindex[p]),
                        nbrs | nbr_mask[p],
                        dead | forbid[j],
                        size + 1,
                        mass + (1.0 if counting else float(weights[p])),
                        members + (p,),
                    )
                )
    if oversized is not None:
        raise CapacityError(
            f"exact scan pool of {oversized[1]} points at center {oversized[0]} exceeds cap {cap}"
        )
    if stop_eps is not None:
        return None
    return best


def exhaustive_min_diameter(
    space,
    candidates,
    feasible,
    s_cap,
    *,
    boundary_exclude=frozenset(),
    cap=POOL_CAP,
    radius=1,
):
    """Smallest d <= s_cap admitting a set of diameter <= d with
    feasible(size, boundary_count) true; boundary points in
    boundary_exclude do not count.

    Returns (d, members) or None; raises CapacityError once pools outgrow
    the cap before anything feasible is found.
    """
    candidates = sorted(set(candidates))
    dist = space.dist
    for d in range(s_cap + 1):
        for x, pool in _center_pools(space, candidates, d):
            if len(pool) > cap:
                raise CapacityError(
                    f"exact scan pool of {len(pool) + 1} points at center {x} exceeds cap {cap}"
                )
            universe = {x}
            universe.update(pool)
            for p in [x] + pool:
                universe.update(np.flatnonzero(dist[p] <= radius).tolist())
            universe = sorted(universe)
            uindex = {p: i for i, p in enumerate(universe)}
            nbr_mask = {}
            for p in [x] + pool:
                m = 0
                for z in np.flatnonzero(dist[p] <= radius).tolist():
                    m |= 1 << uindex[z]
                nbr_mask[p] = m
            allowed = 0
            for z in universe:
                if z not in boundary_exclude:
                    allowed |= 1 << uindex[z]
            forbid = {}
            for i, p in enumerate(pool):
                m = 0
                for j, q in enumerate(pool):
                    if dist[p, q] > d:
                        m |= 1 << j
                forbid[i] = m
            x_bit = 1 << uindex[x]
            stack = [(0, x_bit, nbr_mask[x], 0, 1, (x,))]
            while stack:
                i, mem_bits, nbrs, dead, size, members = stack.pop()
                bnd = (nbrs & ~mem_bits & allowed).bit_count()
                if feasible(size, bnd):
                    return d, members
                for j in range(len(pool) - 1, i - 1, -1):
                    if dead & (1 << j):
                        continue
                    p = pool[j]
                    stack.append(
                        (
                            j + 1,
                            mem_bits | (1 << uindex[p]),
                            nbrs | nbr_mask[p],
                            dead | forbid[j],
                            size + 1,
                            members + (p,),
                        )
                    )
    return None


# -- greedy heuristics ---------------------------------------------------


def _ratio_of(space, members, radius, weights, boundary_set):
    idx = np.fromiter(members, dtype=np.int64)
    d_to = space.dist[:, idx].min(axis=1)
    bnd = np.flatnonzero(d_to <= radius)
    bnd = [int(z) for z in bnd if int(z) not in set(members)]
    if weights is None:
        num = sum(1 for z in bnd if z in boundary_set)
        den = len(members)
    else:
        num = float(sum(weights[z] for z in bnd))
        den = float(sum(weights[p] for p in members))
    return num, den


def greedy_min_ratio(
    space,
    candidates,
    radius,
    s_max,
    *,
    weights=None,
    boundary_in=None,
    max_size="half",
    seeds=3,
    steps=60,
):
    """Ball seeds improved by single-point add/remove moves.

    Candidate pool: every ball (any radius <= s_max) intersected with the
    candidate set whose measured diameter fits s_max.  The best few seeds
    are grown greedily; reported ratios are recomputed directly, so the
    result is valid regardless of how it was found.  Never a proof of
    absence.
    """
    candidates = sorted(set(candidates))
    cand_set = set(candidates)
    size_cap = _half_cap(candidates, max_size)
    dist = space.dist
    if boundary_in is None:
        boundary_set = cand_set if weights is None else set(range(space.n))
    else:
        boundary_set = set(boundary_in)

    scored = []
    seen = set()
    for x in candidates:
        row = dist[x]
        for r in range(s_max + 1):
            members = tuple(y for y in candidates if row[y] <= r)
            if not members or len(members) > size_cap or members in seen:
                continue
            seen.add(members)
            idx = np.fromiter(members, dtype=np.int64)
            if int(dist[np.ix_(idx, idx)].max()) > s_max:
                continue
            num, den = _ratio_of(space, members, radius, weights, boundary_set)
            if den > 0:
                scored.append((num / den, members[0], members, num, den))
    if not scored:
        return None
    scored.sort(key=lambda t: (t[0], t[1], len(t[2]), t[2]))

    best = None
    for ratio, _, members, num, den in scored[:seeds]:
        current = list(members)
        cur = (ratio, num, den)
        for _ in range(steps):
            move = _best_move(space, current, radius, s_max, weights, boundary_set, cand_set, size_cap)
            if move is None or move[0] >= cur[0]:
                break
            cur = move[:3]
            current = move[3]
        cand = ScanBest(cur[0], tuple(sorted(current)), cur[1], cur[2], False)
        key = (cand.ratio, cand.members[0], len(cand.members), cand.members)
        if best is None or key < (best.ratio, best.members[0], len(best.members), best.members):
            best = cand
    return best


def _best_move(space, current, radius, s_max, weights, boundary_set, cand_set, size_cap):
    dist = space.dist
    cur_set = set(current)
    idx = np.fromiter(current, dtype=np.int64)
    d_to = dist[:, idx].min(axis=1)
    frontier = [int(z) for z in np.flatnonzero(d_to <= radius) if int(z) in cand_set and int(z) not in cur_set]
    best = None
    if len(current) < size_cap:
        for p in frontier:
            if max(int(dist[p, q]) for q in current) > s_max:
                continue
            members = sorted(cur_set | {p})
            num, den = _ratio_of(space, members, radius, weights, boundary_set)
            if den > 0 and (best is None or num / den < best[0]):
                best = (num / den, num, den, members)
    if len(current) > 1:
        for p in current:
            members = sorted(cur_set - {p})
            num, den = _ratio_of(space, members, radius, weights, boundary_set)
            if den > 0 and (best is None or num / den < best[0]):
                best = (num / den, num, den, members)
    return best
