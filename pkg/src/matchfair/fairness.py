"""Sex-equal stable matching search.

Three routes, in increasing cost:

* classification of the instance from the two deferred-acceptance extremes
  (when one extreme is provably sex-equal, nothing else runs),
* bidirectional rotation local search over the lattice (anytime heuristic),
* exhaustive enumeration with the break-marriage operation (exact).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import (
    Matching,
    PreferenceProfile,
    WelfareScores,
    sex_equality_cost,
    welfare,
)
from .deferred_acceptance import ProposingSide, deferred_acceptance
from .errors import BudgetExceededError
from .lattice import (
    DEFAULT_MAX_MATCHINGS,
    DEFAULT_MAX_SECONDS,
    StableLattice,
    _eliminate_unchecked,
    _exposed_rotations_unchecked,
    enumerate_lattice,
)


class LemmaCase(enum.Enum):
    """Where the sex-equal matching provably sits relative to the extremes."""

    MEN_OPTIMAL_IS_SEX_EQUAL = "men_optimal"
    WOMEN_OPTIMAL_IS_SEX_EQUAL = "women_optimal"
    INTERIOR = "interior"


@dataclass(frozen=True)
class ClassifiedInstance:
    case: LemmaCase
    mu_m: Matching
    mu_w: Matching
    scores_m: WelfareScores  # welfare of the men-optimal matching
    scores_w: WelfareScores  # welfare of the women-optimal matching


@dataclass(frozen=True)
class SearchResult:
    matching: Matching
    cost: int
    optimal: bool
    visited: int


def classify_instance(profile: PreferenceProfile) -> ClassifiedInstance:
    """Run deferred acceptance from both sides and classify the instance.

    The men-optimal extreme is sex-equal when its men's score already weakly
    exceeds the women's; the women-optimal extreme when its men's score is
    weakly below. When both equalities hold at once the men-optimal case is
    reported, by convention. Everything else is an interior instance.
    """
    mu_m, _ = deferred_acceptance(profile, ProposingSide.MEN)
    mu_w, _ = deferred_acceptance(profile, ProposingSide.WOMEN)
    scores_m = welfare(profile, mu_m)
    scores_w = welfare(profile, mu_w)
    if scores_m.s_m >= scores_m.s_w:
        case = LemmaCase.MEN_OPTIMAL_IS_SEX_EQUAL
    elif scores_w.s_m <= scores_w.s_w:
        case = LemmaCase.WOMEN_OPTIMAL_IS_SEX_EQUAL
    else:
        case = LemmaCase.INTERIOR
    return ClassifiedInstance(case, mu_m, mu_w, scores_m, scores_w)


def welfare_gap(profile: PreferenceProfile) -> tuple[int, int]:
    """Pessimal-minus-optimal score per side; both components are >= 0."""
    cls = classify_instance(profile)
    gap_m = cls.scores_w.s_m - cls.scores_m.s_m
    gap_w = cls.scores_m.s_w - cls.scores_w.s_w
    return gap_m, gap_w


def _best_in_lattice(lattice: StableLattice) -> tuple[Matching, int]:
    """Cost minimizer; ties go to the lexicographically smallest encoding."""
    s_m, s_w = lattice.welfares
    costs = np.abs(s_m - s_w)
    best_cost = int(costs.min())
    candidates = np.nonzero(costs == best_cost)[0]
    best = min(lattice.matchings[int(i)].partner_of_man for i in candidates)
    return Matching(best), best_cost


def sex_equal_exhaustive(profile: PreferenceProfile,
                         max_matchings: int = DEFAULT_MAX_MATCHINGS,
                         max_seconds: float = DEFAULT_MAX_SECONDS) -> SearchResult:
    """Exact sex-equal matching.

    Easy instances are answered straight from the classification; interior
    ones enumerate the lattice. On budget exhaustion the best matching found
    so far is returned with ``optimal=False``.
    """
    cls = classify_instance(profile)
    if cls.case is LemmaCase.MEN_OPTIMAL_IS_SEX_EQUAL:
        return SearchResult(cls.mu_m, sex_equality_cost(cls.scores_m), True, visited=2)
    if cls.case is LemmaCase.WOMEN_OPTIMAL_IS_SEX_EQUAL:
        return SearchResult(cls.mu_w, sex_equality_cost(cls.scores_w), True, visited=2)
    try:
        lattice = enumerate_lattice(profile, max_matchings=max_matchings, max_seconds=max_seconds)
    except BudgetExceededError as exc:
        partial = StableLattice(profile=profile, matchings=exc.partial_matchings)
        best, cost = _best_in_lattice(partial)
        return SearchResult(best, cost, False, visited=partial.size)
    best, cost = _best_in_lattice(lattice)
    return SearchResult(best, cost, True, visited=lattice.size)


def _downward_neighbors(profile, enc):
    mu = Matching(enc)
    return [
        _eliminate_unchecked(mu, rho)
        for rho in _exposed_rotations_unchecked(profile, mu)
    ]


def _upward_neighbors(swapped_profile, enc):
    # the side-swapped instance turns the lattice upside down, so exposed
    # rotations over there walk this lattice upward
    inv = [0] * len(enc)
    for m, w in enumerate(enc):
        inv[w] = m
    mu_sw = Matching(tuple(inv))
    ups = []
    for rho in _exposed_rotations_unchecked(swapped_profile, mu_sw):
        child = _eliminate_unchecked(mu_sw, rho)
        back = [0] * len(child)
        for w, m in enumerate(child):
            back[m] = w
        ups.append(tuple(back))
    return ups


def ibils_search(profile: PreferenceProfile,
                 depth_limit: int | None = None,
                 width_limit: int = 8) -> SearchResult:
    """Bidirectional beam search over the lattice via rotation moves.

    One frontier walks down from the men-optimal matching, the other up from
    the women-optimal one; each level keeps the ``width_limit`` cheapest
    matchings. The search stops early on a perfectly balanced matching or once
    the welfare-difference sign flips across an explored edge, which brackets
    the minimum on that chain. Anytime: the best matching seen is returned,
    flagged optimal only when provably so (zero cost, or a one-matching
    lattice).
    """
    n = profile.n
    if depth_limit is None:
        depth_limit = 2 * n
    cls = classify_instance(profile)
    enc_m = cls.mu_m.partner_of_man
    enc_w = cls.mu_w.partner_of_man

    def signed_diff(enc):
        s = welfare(profile, Matching(enc))
        return s.s_m - s.s_w

    best_enc, best_cost = min(
        (enc_m, sex_equality_cost(cls.scores_m)),
        (enc_w, sex_equality_cost(cls.scores_w)),
        key=lambda t: (t[1], t[0]),
    )
    if enc_m == enc_w:
        return SearchResult(Matching(best_enc), best_cost, True, visited=1)

    visited = {enc_m, enc_w}
    diffs = {enc_m: cls.scores_m.s_m - cls.scores_m.s_w,
             enc_w: cls.scores_w.s_m - cls.scores_w.s_w}
    swapped = profile.swap_sides()
    down = [enc_m]
    up = [enc_w]
    sign_flip = best_cost == 0

    for _ in range(depth_limit):
        if sign_flip or (not down and not up):
            break
        next_down: list[tuple] = []
        next_up: list[tuple] = []
        for frontier, neighbors, sink in (
            (down, lambda e: _downward_neighbors(profile, e), next_down),
            (up, lambda e: _upward_neighbors(swapped, e), next_up),
        ):
            for enc in frontier:
                for child in neighbors(enc):
                    if child in visited:
                        continue
                    visited.add(child)
                    d = signed_diff(child)
                    diffs[child] = d
                    cost = abs(d)
                    if (cost, child) < (best_cost, best_enc):
                        best_cost, best_enc = cost, child
                    if d == 0 or d * diffs[enc] < 0:
                        sign_flip = True
                    sink.append(child)
        next_down.sort(key=lambda e: (abs(diffs[e]), e))
        next_up.sort(key=lambda e: (abs(diffs[e]), e))
        down = next_down[:width_limit]
        up = next_up[:width_limit]

    return SearchResult(Matching(best_enc), best_cost, best_cost == 0, visited=len(visited))
