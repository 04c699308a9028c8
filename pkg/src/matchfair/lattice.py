"""Exhaustive stable-lattice enumeration and rotation-poset analysis.

Enumeration uses the break-marriage operation: freeing one man from a stable
matching triggers a chain of proposals and rejections that either dies out or
lands on a new stable matching strictly below the current one. Applying the
operation recursively from the men-optimal matching (with global
deduplication) visits the whole lattice.

Rotations are extracted per matching by the shortlist walk: follow
m -> partner(w_next(m)) until a man repeats, keep the cycle, and continue from
the next unconsumed man in index order.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
import numpy as np

from .core import Matching, PreferenceProfile, find_blocking_pairs, is_stable, welfare_many
from .deferred_acceptance import ProposingSide, deferred_acceptance
from .errors import BudgetExceededError, InvalidInputError, RotationNotExposedError

DEFAULT_MAX_MATCHINGS = 1 << 20
DEFAULT_MAX_SECONDS = 300.0
_WELFARE_CHUNK = 4096


# ---------------------------------------------------------------------------
# dominance


def dominates(profile: PreferenceProfile, mu1: Matching, mu2: Matching) -> bool:
    """True iff every man is weakly better off in mu1 and at least one strictly."""
    idx = np.arange(profile.n)
    r1 = profile.men_rank[idx, np.asarray(mu1.partner_of_man)]
    r2 = profile.men_rank[idx, np.asarray(mu2.partner_of_man)]
    return bool((r1 <= r2).all() and (r1 < r2).any())


# ---------------------------------------------------------------------------
# break-marriage enumeration


def _break_marriage(mu, inv, m0, mprefs, mrank, wrank, n):
    """Free man m0 from stable matching ``mu`` and run the proposal chain.

    Returns the new partner_of_man tuple, or None when the chain dies (some
    proposer runs off the end of his list). The freed woman only accepts a
    proposer she strictly prefers to her old partner; every other woman trades
    up as usual.
    """
    w0 = mu[m0]
    i = mrank[m0][w0] + 1
    if i >= n:
        return None
    old_rank_w0 = wrank[w0][m0]
    cur = list(mu)
    curw = list(inv)
    curw[w0] = -1
    p = m0
    plist = mprefs[p]
    rank_w0 = wrank[w0]
    while True:
        if i >= n:
            return None
        w = plist[i]
        i += 1
        if w == w0:
            if rank_w0[p] < old_rank_w0:
                cur[p] = w0
                return tuple(cur)
            continue
        q = curw[w]
        wr = wrank[w]
        if wr[p] < wr[q]:
            cur[p] = w
            curw[w] = p
            p = q
            plist = mprefs[p]
            i = mrank[p][w] + 1


def enumerate_lattice(profile: PreferenceProfile,
                      max_matchings: int = DEFAULT_MAX_MATCHINGS,
                      max_seconds: float = DEFAULT_MAX_SECONDS,
                      validate: bool = False) -> "StableLattice":
    """All stable matchings of the profile, in breadth-first discovery order.

    Raises :class:`BudgetExceededError` (carrying the partial set) when either
    budget is hit, so callers can report censored counts instead of hanging.
    """
    n = profile.n
    mprefs = profile._men_prefs_l
    mrank = profile._men_rank_l
    wrank = profile._women_rank_l

    root_matching, _ = deferred_acceptance(profile, ProposingSide.MEN)
    root = root_matching.partner_of_man
    # a chain can only succeed for a man not yet at his pessimal stable
    # partner, i.e. his partner in the women-optimal matching; skipping the
    # others avoids exactly the long failing chains
    bottom_matching, _ = deferred_acceptance(profile, ProposingSide.WOMEN)
    bottom = bottom_matching.partner_of_man
    visited = {root}
    order = [root]
    queue = deque([root])
    deadline = time.monotonic() + max_seconds

    def budget_error(reason):
        partial = tuple(Matching(t) for t in order)
        return BudgetExceededError(
            f"lattice enumeration {reason} with {len(order)} matchings found",
            partial_matchings=partial,
        )

    while queue:
        mu = queue.popleft()
        if time.monotonic() > deadline:
            raise budget_error(f"exceeded {max_seconds}s")
        inv = [0] * n
        for m, w in enumerate(mu):
            inv[w] = m
        for m0 in range(n):
            if mu[m0] == bottom[m0]:
                continue
            res = _break_marriage(mu, inv, m0, mprefs, mrank, wrank, n)
            if res is not None and res not in visited:
                if len(visited) >= max_matchings:
                    raise budget_error(f"exceeded {max_matchings} matchings")
                visited.add(res)
                order.append(res)
                queue.append(res)

    matchings = tuple(Matching(t) for t in order)
    if validate:
        for mu_obj in matchings:
            bad = find_blocking_pairs(profile, mu_obj)
            if bad:
                raise InvalidInputError(
                    f"enumeration produced an unstable matching {mu_obj.partner_of_man}: {sorted(bad)}"
                )
    return StableLattice(profile=profile, matchings=matchings)


@dataclass(frozen=True)
class StableLattice:
    """The full set of stable matchings plus its dominance structure.

    ``matchings[0]`` is the men-optimal top. Hasse edges and welfare vectors
    are computed lazily since size-only consumers (the simulation harness)
    never need them.
    """

    profile: PreferenceProfile
    matchings: tuple[Matching, ...]
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        idx = {mu.partner_of_man: i for i, mu in enumerate(self.matchings)}
        self._index.update(idx)

    @property
    def size(self) -> int:
        return len(self.matchings)

    def __contains__(self, mu: Matching) -> bool:
        return mu.partner_of_man in self._index

    def index_of(self, mu: Matching) -> int:
        try:
            return self._index[mu.partner_of_man]
        except KeyError:
            raise InvalidInputError("matching is not in the lattice") from None

    @cached_property
    def welfares(self) -> tuple[np.ndarray, np.ndarray]:
        """(s_m, s_w) arrays aligned with ``matchings``; computed in chunks."""
        rows = np.asarray([mu.partner_of_man for mu in self.matchings], dtype=np.int32)
        sm_parts, sw_parts = [], []
        for lo in range(0, rows.shape[0], _WELFARE_CHUNK):
            sm, sw = welfare_many(self.profile, rows[lo:lo + _WELFARE_CHUNK])
            sm_parts.append(sm)
            sw_parts.append(sw)
        return np.concatenate(sm_parts), np.concatenate(sw_parts)

    @property
    def top(self) -> Matching:
        """Men-optimal matching (the enumeration root)."""
        return self.matchings[0]

    @cached_property
    def bottom(self) -> Matching:
        """Women-optimal matching: the unique maximizer of the men's score."""
        s_m, _ = self.welfares
        return self.matchings[int(np.argmax(s_m))]

    @cached_property
    def hasse_edges(self) -> tuple[tuple[int, int], ...]:
        """Immediate dominance edges (i -> j), realized by exposed rotations."""
        edges = []
        for i, mu in enumerate(self.matchings):
            for rho in _exposed_rotations_unchecked(self.profile, mu):
                child = _eliminate_unchecked(mu, rho)
                edges.append((i, self._index[child]))
        return tuple(edges)


# ---------------------------------------------------------------------------
# shortlists and rotations


@dataclass(frozen=True)
class Shortlists:
    """Profile reduction relative to a stable matching.

    Each man's list starts with his partner; each woman's list ends with hers.
    """

    men: tuple[tuple[int, ...], ...]
    women: tuple[tuple[int, ...], ...]


def build_shortlists(profile: PreferenceProfile, mu: Matching) -> Shortlists:
    if not is_stable(profile, mu):
        raise InvalidInputError("shortlists are only defined for stable matchings")
    n = profile.n
    pow_ = mu.partner_of_woman
    idx = np.arange(n)
    partner_rank = profile.women_rank[idx, np.asarray(pow_)]
    keep = profile.women_rank <= partner_rank[:, None]  # keep[w, m]
    men_lists = tuple(
        tuple(w for w in profile._men_prefs_l[m] if keep[w, m]) for m in range(n)
    )
    women_lists = tuple(
        tuple(m for m in profile._women_prefs_l[w] if keep[w, m]) for w in range(n)
    )
    return Shortlists(men=men_lists, women=women_lists)


@dataclass(frozen=True)
class Rotation:
    """An ordered cycle ((m1,w1),...,(mk,wk)) of matched pairs.

    Eliminating it moves every member man to the next woman in the cycle.
    Stored in canonical phase: the cycle is rotated so the smallest man comes
    first, which makes equal rotations found in different matchings compare
    equal.
    """

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pairs = tuple((int(m), int(w)) for m, w in self.pairs)
        if len(pairs) < 2:
            raise InvalidInputError("a rotation has at least two pairs")
        men = [m for m, _ in pairs]
        women = [w for _, w in pairs]
        if len(set(men)) != len(men) or len(set(women)) != len(women):
            raise InvalidInputError(f"rotation repeats an agent: {pairs}")
        start = men.index(min(men))
        object.__setattr__(self, "pairs", pairs[start:] + pairs[:start])

    def __len__(self) -> int:
        return len(self.pairs)


def _w_next(mu, inv, m, mprefs, mrank, wrank, n):
    """First woman below mu(m) in m's list who strictly prefers m to her partner."""
    plist = mprefs[m]
    for pos in range(mrank[m][mu[m]] + 1, n):
        w = plist[pos]
        if wrank[w][m] < wrank[w][inv[w]]:
            return w
    return -1


def _exposed_rotations_unchecked(profile: PreferenceProfile, mu: Matching) -> tuple[Rotation, ...]:
    n = profile.n
    mprefs = profile._men_prefs_l
    mrank = profile._men_rank_l
    wrank = profile._women_rank_l
    pom = mu.partner_of_man
    inv = [0] * n
    for m, w in enumerate(pom):
        inv[w] = m
    seen = [False] * n
    rotations = []
    for start in range(n):
        if seen[start]:
            continue
        path = []
        pos_in_path = {}
        m = start
        while True:
            if m in pos_in_path:
                cycle = path[pos_in_path[m]:]
                rotations.append(Rotation(tuple((mm, pom[mm]) for mm in cycle)))
                break
            if seen[m]:
                # walked into territory already known to lead nowhere new
                break
            pos_in_path[m] = len(path)
            path.append(m)
            wn = _w_next(pom, inv, m, mprefs, mrank, wrank, n)
            if wn < 0:
                break
            m = inv[wn]
        for mm in path:
            seen[mm] = True
    return tuple(rotations)


def find_exposed_rotations(profile: PreferenceProfile, mu: Matching) -> tuple[Rotation, ...]:
    """All rotations exposed in ``mu``; empty exactly at the women-optimal matching."""
    if not is_stable(profile, mu):
        raise InvalidInputError("rotations are only defined for stable matchings")
    return _exposed_rotations_unchecked(profile, mu)


def _eliminate_unchecked(mu: Matching, rho: Rotation) -> tuple[int, ...]:
    cur = list(mu.partner_of_man)
    k = len(rho.pairs)
    for i, (m, _) in enumerate(rho.pairs):
        cur[m] = rho.pairs[(i + 1) % k][1]
    return tuple(cur)


def eliminate_rotation(profile: PreferenceProfile, mu: Matching, rho: Rotation) -> Matching:
    """Apply an exposed rotation, producing the adjacent dominated matching."""
    n = profile.n
    mprefs = profile._men_prefs_l
    mrank = profile._men_rank_l
    wrank = profile._women_rank_l
    pom = mu.partner_of_man
    inv = [0] * n
    for m, w in enumerate(pom):
        inv[w] = m
    k = len(rho.pairs)
    for i, (m, w) in enumerate(rho.pairs):
        if pom[m] != w:
            raise RotationNotExposedError(f"pair (m={m}, w={w}) is not matched in mu")
        expected_next = rho.pairs[(i + 1) % k][1]
        if _w_next(pom, inv, m, mprefs, mrank, wrank, n) != expected_next:
            raise RotationNotExposedError(
                f"rotation {rho.pairs} is not exposed in {pom} (fails at man {m})"
            )
    return Matching(_eliminate_unchecked(mu, rho))


# ---------------------------------------------------------------------------
# rotation poset


@dataclass(frozen=True)
class RotationPoset:
    """Rotations of a lattice with their precedence DAG and shape statistics.

    ``leq[i, j]`` is the full (reflexive, transitive) order; precedence_edges
    holds only the covers. ``elimination_sets[k]`` is the set of rotation ids
    eliminated on any path from the top down to ``lattice.matchings[k]``.
    """

    rotations: tuple[Rotation, ...]
    precedence_edges: tuple[tuple[int, int], ...]
    leq: np.ndarray
    elimination_sets: tuple[frozenset[int], ...]

    @property
    def r(self) -> int:
        return len(self.rotations)

    @cached_property
    def height(self) -> int:
        """Longest chain, counted in elements (0 for the empty poset)."""
        r = self.r
        if r == 0:
            return 0
        lt = self.leq & ~np.eye(r, dtype=bool)
        depth = [0] * r
        # leq is transitively closed, so predecessor counts give a valid order
        order = sorted(range(r), key=lambda i: int(lt[:, i].sum()))
        for j in order:
            preds = np.nonzero(lt[:, j])[0]
            depth[j] = 1 + max((depth[int(i)] for i in preds), default=0)
        return max(depth)

    @cached_property
    def width(self) -> int:
        """Largest antichain, via Dilworth (min chain cover = r - max matching)."""
        r = self.r
        if r == 0:
            return 0
        lt = self.leq & ~np.eye(r, dtype=bool)
        succ = [np.nonzero(lt[i])[0].tolist() for i in range(r)]
        match_right = [-1] * r

        def try_augment(i, banned):
            for j in succ[i]:
                if j in banned:
                    continue
                banned.add(j)
                if match_right[j] < 0 or try_augment(match_right[j], banned):
                    match_right[j] = i
                    return True
            return False

        matched = 0
        for i in range(r):
            if try_augment(i, set()):
                matched += 1
        return r - matched


def build_rotation_poset(profile: PreferenceProfile, lattice: StableLattice) -> RotationPoset:
    """Rotation poset of a complete lattice, ordered by elimination-set containment.

    Walks the lattice from the top along exposed rotations; raises
    InvalidInputError when the walk leaves the supplied matching set (a sign
    the lattice is incomplete).
    """
    n_matchings = lattice.size
    top_enc = lattice.top.partner_of_man
    rotation_ids: dict[Rotation, int] = {}
    elim: dict[tuple, frozenset[int]] = {top_enc: frozenset()}
    queue = deque([lattice.top])
    while queue:
        mu = queue.popleft()
        cur_set = elim[mu.partner_of_man]
        for rho in _exposed_rotations_unchecked(profile, mu):
            rid = rotation_ids.setdefault(rho, len(rotation_ids))
            child_enc = _eliminate_unchecked(mu, rho)
            if child_enc not in lattice._index:
                raise InvalidInputError(
                    "rotation elimination left the lattice; enumeration looks incomplete"
                )
            child_set = cur_set | {rid}
            known = elim.get(child_enc)
            if known is None:
                elim[child_enc] = child_set
                queue.append(Matching(child_enc))
            elif known != child_set:
                raise InvalidInputError(
                    "inconsistent elimination sets; the lattice is not the complete stable set"
                )
    if len(elim) != n_matchings:
        raise InvalidInputError(
            f"rotation walk reached {len(elim)} of {n_matchings} matchings; lattice incomplete"
        )

    rotations = tuple(sorted(rotation_ids, key=rotation_ids.get))
    r = len(rotations)
    elim_sets = tuple(elim[mu.partner_of_man] for mu in lattice.matchings)
    member = np.zeros((n_matchings, r), dtype=bool)
    for row, s in enumerate(elim_sets):
        for rid in s:
            member[row, rid] = True

    # rho_i <= rho_j iff no elimination set contains j without i
    bad = np.zeros((r, r), dtype=bool)
    for lo in range(0, n_matchings, _WELFARE_CHUNK):
        chunk = member[lo:lo + _WELFARE_CHUNK]
        bad |= (chunk[:, None, :] & ~chunk[:, :, None]).any(axis=0)
    leq = ~bad
    if r and (leq & leq.T & ~np.eye(r, dtype=bool)).any():
        raise InvalidInputError("precedence relation is not antisymmetric; lattice incomplete")
    lt = leq & ~np.eye(r, dtype=bool)
    covers = lt & ~(lt @ lt)
    edges = tuple((int(i), int(j)) for i, j in np.argwhere(covers))
    leq.setflags(write=False)
    return RotationPoset(rotations=rotations, precedence_edges=edges, leq=leq,
                         elimination_sets=elim_sets)


def max_downsets_bound(r: int, h: int) -> int:
    """Upper bound 2^(r-h) * (h+1) on the downset count of an r-element poset
    whose longest chain has h elements."""
    if r < 0 or h < 0 or h > r:
        raise InvalidInputError(f"need 0 <= h <= r, got r={r}, h={h}")
    return (1 << (r - h)) * (h + 1)


def count_downsets(poset: RotationPoset, max_states: int = 1 << 22) -> int:
    """Exact downset count by divide and conquer on bitmasks with memoization.

    Splitting on an element x: downsets avoiding x cannot touch anything above
    x, downsets containing x must contain everything below it.
    """
    r = poset.r
    if r == 0:
        return 1
    leq = poset.leq
    up_mask = [0] * r
    down_mask = [0] * r
    for i in range(r):
        up = 0
        down = 0
        for j in range(r):
            if leq[i, j]:
                up |= 1 << j
            if leq[j, i]:
                down |= 1 << j
        up_mask[i] = up
        down_mask[i] = down

    memo: dict[int, int] = {}
    calls = 0

    def rec(mask: int) -> int:
        nonlocal calls
        if mask == 0:
            return 1
        cached = memo.get(mask)
        if cached is not None:
            return cached
        calls += 1
        if calls > max_states:
            raise BudgetExceededError(
                f"downset counting exceeded {max_states} subproblems", visited=calls
            )
        x = (mask & -mask).bit_length() - 1
        val = rec(mask & ~up_mask[x]) + rec(mask & ~down_mask[x])
        memo[mask] = val
        return val

    return rec((1 << r) - 1)


def downset_check(profile: PreferenceProfile, lattice: StableLattice) -> bool:
    """Cross-check: the poset's downset count must equal the lattice size."""
    poset = build_rotation_poset(profile, lattice)
    return count_downsets(poset) == lattice.size
