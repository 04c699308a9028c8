"""Gale-Shapley deferred acceptance with either side proposing, plus the
dispersion-aware proposer selection (the side with the more concentrated
preferences proposes).
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass

from .core import Matching, PreferenceProfile
from .errors import InvalidInputError
from .mallows import estimate_phi


class ProposingSide(enum.Enum):
    MEN = "men"
    WOMEN = "women"


@dataclass(frozen=True)
class DaTrace:
    """Work accounting: with one proposer processed at a time, rounds and
    proposals coincide; each proposal advances the proposer one rank, so
    proposal_count equals the proposing side's total partner rank."""

    proposal_count: int
    rounds: int


def _propose(prefs: list[list[int]], receiver_rank: list[list[int]], n: int,
             order_rng: random.Random | None) -> tuple[list[int], int]:
    """Core proposal loop. Returns (partner per receiver, proposal count).

    Receivers start held by the virtual proposer ``n``, whose rank-table
    sentinel entry loses every comparison, so the loop needs no
    unmatched-receiver branch. The proposal count is the sum of final list
    positions: every proposal advanced exactly one proposer by one rank.
    """
    partner = [n] * n  # receiver -> current proposer (n = virtual placeholder)
    nxt = [0] * n      # proposer -> next list position to try
    free = list(range(n))
    if order_rng is not None:
        order_rng.shuffle(free)
    while free:
        if order_rng is None:
            p = free.pop()
        else:
            p = free.pop(order_rng.randrange(len(free)))
        plist = prefs[p]
        i = nxt[p]
        while True:
            w = plist[i]
            i += 1
            wr = receiver_rank[w]
            cur = partner[w]
            if wr[p] < wr[cur]:
                partner[w] = p
                if cur != n:
                    free.append(cur)
                break
        nxt[p] = i
    return partner, sum(nxt)


def deferred_acceptance(profile: PreferenceProfile, side: ProposingSide,
                        order_rng: random.Random | None = None) -> tuple[Matching, DaTrace]:
    """Proposer-optimal, receiver-pessimal stable matching.

    ``order_rng`` shuffles which free proposer moves next; the outcome is
    invariant to that order (a property the test suite exercises), so the
    hook exists purely to exercise it.
    """
    n = profile.n
    if side is ProposingSide.MEN:
        partner, proposals = _propose(profile._men_prefs_l, profile._women_rank_l, n, order_rng)
        pom = [0] * n
        for w, m in enumerate(partner):
            pom[m] = w
        mu = Matching(tuple(pom))
    elif side is ProposingSide.WOMEN:
        partner, proposals = _propose(profile._women_prefs_l, profile._men_rank_l, n, order_rng)
        mu = Matching(tuple(partner))  # partner[m] is already the woman holding m
    else:
        raise InvalidInputError(f"unknown proposing side: {side!r}")
    return mu, DaTrace(proposal_count=proposals, rounds=proposals)


def choose_proposing_side(phi_m: float, phi_w: float) -> ProposingSide:
    """Lower dispersion proposes; ties go to the men deterministically."""
    if not (0.0 <= phi_m <= 1.0 and 0.0 <= phi_w <= 1.0):
        raise InvalidInputError(f"dispersion parameters must lie in [0,1]: {phi_m}, {phi_w}")
    return ProposingSide.MEN if phi_m <= phi_w else ProposingSide.WOMEN


def da_star(profile: PreferenceProfile, phi_m: float, phi_w: float) -> tuple[Matching, ProposingSide]:
    """Deferred acceptance with the proposer picked from known dispersions."""
    side = choose_proposing_side(phi_m, phi_w)
    mu, _ = deferred_acceptance(profile, side)
    return mu, side


def da_star_estimated(profile: PreferenceProfile,
                      reference_m: list[int] | None = None,
                      reference_w: list[int] | None = None) -> tuple[Matching, ProposingSide]:
    """Like :func:`da_star` but with dispersions estimated from the profile.

    References default to the identity ranking on each side.
    """
    n = profile.n
    ref_m = list(range(n)) if reference_m is None else list(reference_m)
    ref_w = list(range(n)) if reference_w is None else list(reference_w)
    phi_m = estimate_phi(profile._men_prefs_l, ref_m)
    phi_w = estimate_phi(profile._women_prefs_l, ref_w)
    return da_star(profile, phi_m, phi_w)
