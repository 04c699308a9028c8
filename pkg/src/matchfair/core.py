"""Domain types for marriage-market instances plus stability and welfare scoring.

All agent indices are dense 0-based integers inside the library; 1-based ids
exist only at the file/CLI boundary. Ranks reported by :func:`rank` and the
welfare scores are 1-based (best partner = rank 1), matching the usual
convention for preference lists.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidAgentError, InvalidMatchingError, InvalidInputError


def _as_permutation_matrix(rows: Sequence[Sequence[int]], n: int, what: str) -> np.ndarray:
    arr = np.asarray(rows, dtype=np.int32)
    if arr.shape != (n, n):
        raise InvalidInputError(f"{what}: expected {n} lists of length {n}, got shape {arr.shape}")
    expected = np.arange(n, dtype=np.int32)
    sorted_rows = np.sort(arr, axis=1)
    if not (sorted_rows == expected).all():
        bad = int(np.nonzero((sorted_rows != expected).any(axis=1))[0][0])
        raise InvalidInputError(f"{what}: list {bad} is not a permutation of 0..{n - 1}")
    return arr


class PreferenceProfile:
    """A two-sided market instance: n men and n women with strict complete lists.

    ``men_prefs[m]`` lists woman indices from most to least preferred, and
    ``women_prefs[w]`` lists man indices likewise. Rank lookup tables are built
    eagerly at construction (O(n^2) space) so that rank queries are O(1);
    deferred acceptance and rotation extraction rely on that. Instances are
    immutable after construction and safe to share between workers.
    """

    __slots__ = (
        "n",
        "men_prefs",
        "women_prefs",
        "men_rank",
        "women_rank",
        "_men_prefs_l",
        "_women_prefs_l",
        "_men_rank_l",
        "_women_rank_l",
    )

    def __init__(self, men_prefs: Sequence[Sequence[int]], women_prefs: Sequence[Sequence[int]]):
        n = len(men_prefs)
        if n == 0:
            raise InvalidInputError("profile needs at least one agent per side")
        if len(women_prefs) != n:
            raise InvalidInputError(
                f"unbalanced market: {n} men vs {len(women_prefs)} women"
            )
        men = _as_permutation_matrix(men_prefs, n, "men_prefs")
        women = _as_permutation_matrix(women_prefs, n, "women_prefs")

        # men_rank[m, w] = 0-based position of w in m's list (argsort inverts each row)
        men_rank = np.argsort(men, axis=1).astype(np.int32)
        women_rank = np.argsort(women, axis=1).astype(np.int32)
        for a in (men, women, men_rank, women_rank):
            a.setflags(write=False)

        self.n = n
        self.men_prefs = men
        self.women_prefs = women
        self.men_rank = men_rank
        self.women_rank = women_rank
        # Plain nested lists mirror the arrays; scalar indexing on lists is much
        # faster than on numpy arrays, which dominates the proposal loops.
        # Entries reference one canonical int object per value so the boxed-int
        # working set stays small enough to cache even at n=1000. Rank rows
        # carry one sentinel entry at index n (value n, worse than any real
        # rank) for the proposal loops' virtual unmatched placeholder.
        canon = np.empty(n + 1, dtype=object)
        canon[:] = list(range(n + 1))
        sentinel = np.full((n, 1), n, dtype=np.int32)
        self._men_prefs_l = canon[men].tolist()
        self._women_prefs_l = canon[women].tolist()
        self._men_rank_l = canon[np.hstack([men_rank, sentinel])].tolist()
        self._women_rank_l = canon[np.hstack([women_rank, sentinel])].tolist()

    @classmethod
    def identity(cls, n: int) -> "PreferenceProfile":
        """Profile where every agent ranks the other side by index."""
        base = [list(range(n)) for _ in range(n)]
        return cls(base, [list(range(n)) for _ in range(n)])

    def swap_sides(self) -> "PreferenceProfile":
        """The mirrored instance: women become the 'men' side."""
        return PreferenceProfile(self.women_prefs, self.men_prefs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PreferenceProfile):
            return NotImplemented
        return self.n == other.n and (
            (self.men_prefs == other.men_prefs).all()
            and (self.women_prefs == other.women_prefs).all()
        )

    def __repr__(self) -> str:
        return f"PreferenceProfile(n={self.n})"


@dataclass(frozen=True)
class Matching:
    """A perfect matching, encoded as the woman index assigned to each man."""

    partner_of_man: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.partner_of_man)

    @property
    def partner_of_woman(self) -> tuple[int, ...]:
        inv = [0] * len(self.partner_of_man)
        for m, w in enumerate(self.partner_of_man):
            inv[w] = m
        return tuple(inv)

    def __post_init__(self):
        pom = tuple(int(w) for w in self.partner_of_man)
        object.__setattr__(self, "partner_of_man", pom)
        if sorted(pom) != list(range(len(pom))):
            raise InvalidMatchingError(f"not a perfect matching: {pom}")

    @classmethod
    def from_partner_of_woman(cls, partner_of_woman: Iterable[int]) -> "Matching":
        pow_ = list(partner_of_woman)
        pom = [0] * len(pow_)
        for w, m in enumerate(pow_):
            pom[m] = w
        return cls(tuple(pom))

    def one_based(self) -> list[int]:
        """Partner list as 1-based woman ids, the notation used for display."""
        return [w + 1 for w in self.partner_of_man]


@dataclass(frozen=True)
class WelfareScores:
    """Sum of partner ranks per side; smaller means a happier side."""

    s_m: int
    s_w: int

    def swapped(self) -> "WelfareScores":
        return WelfareScores(self.s_w, self.s_m)


def _check_agent(profile: PreferenceProfile, idx: int, side: str):
    if not 0 <= idx < profile.n:
        raise InvalidAgentError(f"{side} index {idx} out of range for n={profile.n}")


def rank(profile: PreferenceProfile, of: int, in_list_of: int, *, side_of_owner: str = "man") -> int:
    """1-based rank of agent ``of`` in the list of ``in_list_of``.

    ``side_of_owner`` names the side that owns the list: ``"man"`` ranks a
    woman in a man's list, ``"woman"`` ranks a man in a woman's list.
    """
    if side_of_owner == "man":
        _check_agent(profile, in_list_of, "man")
        _check_agent(profile, of, "woman")
        return int(profile.men_rank[in_list_of, of]) + 1
    if side_of_owner == "woman":
        _check_agent(profile, in_list_of, "woman")
        _check_agent(profile, of, "man")
        return int(profile.women_rank[in_list_of, of]) + 1
    raise InvalidAgentError(f"side_of_owner must be 'man' or 'woman', got {side_of_owner!r}")


def _matching_array(profile: PreferenceProfile, mu: Matching) -> np.ndarray:
    if mu.n != profile.n:
        raise InvalidMatchingError(f"matching over {mu.n} agents, profile has {profile.n}")
    return np.asarray(mu.partner_of_man, dtype=np.int32)


def find_blocking_pairs(profile: PreferenceProfile, mu: Matching) -> set[tuple[int, int]]:
    """All pairs (m, w) who mutually prefer each other to their partners.

    Empty result is exactly the stability condition.
    """
    pom = _matching_array(profile, mu)
    n = profile.n
    idx = np.arange(n)
    pow_ = np.asarray(mu.partner_of_woman, dtype=np.int32)
    # man_better[m, w]: m strictly prefers w to mu(m)
    man_better = profile.men_rank < profile.men_rank[idx, pom][:, None]
    # woman_better[w, m]: w strictly prefers m to mu(w)
    woman_better = profile.women_rank < profile.women_rank[idx, pow_][:, None]
    pairs = np.argwhere(man_better & woman_better.T)
    return {(int(m), int(w)) for m, w in pairs}


def is_stable(profile: PreferenceProfile, mu: Matching) -> bool:
    return not find_blocking_pairs(profile, mu)


def welfare(profile: PreferenceProfile, mu: Matching) -> WelfareScores:
    """Total 1-based partner ranks for men (s_m) and women (s_w)."""
    pom = _matching_array(profile, mu)
    idx = np.arange(profile.n)
    pow_ = np.asarray(mu.partner_of_woman, dtype=np.int32)
    s_m = int(profile.men_rank[idx, pom].sum()) + profile.n
    s_w = int(profile.women_rank[idx, pow_].sum()) + profile.n
    return WelfareScores(s_m, s_w)


def welfare_many(profile: PreferenceProfile, partner_rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized welfare for a (k, n) stack of partner_of_man rows."""
    rows = np.asarray(partner_rows, dtype=np.int32)
    n = profile.n
    idx = np.arange(n)
    s_m = profile.men_rank[idx[None, :], rows].sum(axis=1) + n
    inv = np.empty_like(rows)
    np.put_along_axis(inv, rows, idx[None, :].repeat(rows.shape[0], axis=0), axis=1)
    s_w = profile.women_rank[idx[None, :], inv].sum(axis=1) + n
    return s_m.astype(np.int64), s_w.astype(np.int64)


def sex_equality_cost(scores: WelfareScores) -> int:
    """Absolute welfare difference between the sides; 0 is perfectly balanced."""
    return abs(scores.s_m - scores.s_w)


def egalitarian_cost(scores: WelfareScores) -> int:
    """Total rank over all agents; lower means higher overall welfare."""
    return scores.s_m + scores.s_w
