"""Kendall-tau metric, Mallows permutation model, and profile generation.

The model places probability phi^d / Z on a permutation at Kendall distance d
from a reference ranking, where Z is the product (1)(1+phi)...(1+...+phi^(n-1)).
phi = 1 is the uniform (Impartial Culture) limit; phi = 0 degenerates to the
reference ranking itself and is allowed for sampling but not for probability
queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import PreferenceProfile
from .errors import DegenerateDistributionError, InvalidInputError

PHI_MIN_ESTIMATE = 1e-3
_BISECT_TOL = 1e-6


@dataclass(frozen=True)
class MallowsParams:
    """Per-side dispersion and (optional) reference rankings.

    ``reference_m`` orders the women as seen by every man, ``reference_w`` the
    men as seen by every woman; ``None`` means the identity ranking, which is
    the usual convention since one side can always be relabelled.
    """

    phi_m: float
    phi_w: float
    reference_m: tuple[int, ...] | None = None
    reference_w: tuple[int, ...] | None = None

    def __post_init__(self):
        for name, phi in (("phi_m", self.phi_m), ("phi_w", self.phi_w)):
            if not 0.0 <= phi <= 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1], got {phi}")
        for name in ("reference_m", "reference_w"):
            ref = getattr(self, name)
            if ref is not None:
                ref = tuple(int(x) for x in ref)
                if sorted(ref) != list(range(len(ref))):
                    raise InvalidInputError(f"{name} is not a permutation of 0..n-1: {ref}")
                object.__setattr__(self, name, ref)

    @property
    def phi_delta(self) -> float:
        """Correlation disparity between the sides."""
        return abs(self.phi_m - self.phi_w)


@dataclass(frozen=True)
class RngSeed:
    """Master seed plus a substream id; same pair, same bit stream."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        return substream_rng(self.seed, self.stream_id)


def substream_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent, reproducible generator for (seed, stream...) tuples."""
    return np.random.default_rng((int(seed),) + tuple(int(s) for s in stream))


def _check_permutation_pair(pi: Sequence[int], ref: Sequence[int]):
    if len(pi) != len(ref):
        raise InvalidInputError(f"length mismatch: {len(pi)} vs {len(ref)}")
    if sorted(pi) != sorted(ref):
        raise InvalidInputError("sequences are not permutations of the same items")
    if len(set(ref)) != len(ref):
        raise InvalidInputError("items must be distinct")


def kendall_tau(pi: Sequence[int], ref: Sequence[int]) -> int:
    """Number of item pairs ranked in opposite relative order; O(n log n)."""
    _check_permutation_pair(pi, ref)
    pos = {item: i for i, item in enumerate(ref)}
    seq = [pos[item] for item in pi]
    return _count_inversions(seq)


def _count_inversions(seq: list[int]) -> int:
    # bottom-up merge sort counting cross-pair swaps
    n = len(seq)
    inv = 0
    width = 1
    a = list(seq)
    b = [0] * n
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if a[i] <= a[j]:
                    b[k] = a[i]
                    i += 1
                else:
                    b[k] = a[j]
                    j += 1
                    inv += mid - i
                k += 1
            b[k:hi] = a[i:mid] if i < mid else a[j:hi]
        a, b = b, a
        width *= 2
    return inv


def normalization_constant(n: int, phi: float) -> float:
    """Z = prod_{i=1..n} (1 + phi + ... + phi^(i-1))."""
    z = 1.0
    term = 1.0
    power = 1.0
    for _ in range(1, n):
        power *= phi
        term += power
        z *= term
    return z


def mallows_probability(pi: Sequence[int], ref: Sequence[int], phi: float) -> float:
    """Exact model probability of ``pi`` given reference ``ref``; phi in (0, 1]."""
    if phi == 0.0:
        raise DegenerateDistributionError(
            "phi=0 places all mass on the reference ranking; probability queries are undefined"
        )
    if not 0.0 < phi <= 1.0:
        raise InvalidInputError(f"phi must lie in (0, 1], got {phi}")
    d = kendall_tau(pi, ref)
    return phi**d / normalization_constant(len(ref), phi)


def _sample_inversion_counts(n: int, phi: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """(size, n) matrix; column k holds the insertion displacement of item k+1.

    Column k is a truncated geometric on {0..k}: P(v) proportional to phi^v.
    Sampled by closed-form CDF inversion, so one uniform draw per entry.
    """
    if n == 0:
        return np.zeros((size, 0), dtype=np.int64)
    i_arr = np.arange(1, n + 1, dtype=np.float64)  # items count at insertion time
    u = rng.random((size, n))
    if phi == 0.0:
        return np.zeros((size, n), dtype=np.int64)
    if phi == 1.0:
        v = np.floor(u * i_arr).astype(np.int64)
    else:
        limit = 1.0 - phi**i_arr
        v = np.floor(np.log(1.0 - u * limit) / math.log(phi)).astype(np.int64)
    return np.clip(v, 0, (i_arr - 1).astype(np.int64))


def _insert_by_counts(ref: Sequence[int], counts: Sequence[int]) -> list[int]:
    out: list[int] = []
    for i, item in enumerate(ref):
        # placing the (i+1)-th reference item ahead of counts[i] earlier items
        out.insert(i - counts[i], item)
    return out


def sample_permutation(ref: Sequence[int], phi: float, rng: np.random.Generator) -> list[int]:
    """One draw via repeated insertion; exact for any phi in [0, 1].

    Items are inserted in reference order; each lands ``v`` places above the
    bottom-extension position with probability proportional to phi^v, which
    reproduces phi^(kendall distance) mass exactly.
    """
    if not 0.0 <= phi <= 1.0:
        raise InvalidInputError(f"phi must lie in [0, 1], got {phi}")
    ref = list(ref)
    if phi == 0.0:
        return ref
    counts = _sample_inversion_counts(len(ref), phi, rng, 1)[0]
    return _insert_by_counts(ref, counts)


def sample_permutations(ref: Sequence[int], phi: float, rng: np.random.Generator, count: int) -> list[list[int]]:
    """Batch draw; one vectorized uniform block, then per-row insertion."""
    if not 0.0 <= phi <= 1.0:
        raise InvalidInputError(f"phi must lie in [0, 1], got {phi}")
    ref = list(ref)
    if phi == 0.0:
        return [list(ref) for _ in range(count)]
    all_counts = _sample_inversion_counts(len(ref), phi, rng, count)
    return [_insert_by_counts(ref, row) for row in all_counts.tolist()]


def generate_profile(n: int, params: MallowsParams, rng: np.random.Generator) -> PreferenceProfile:
    """Draw every agent's list i.i.d. from the side's Mallows distribution."""
    if n < 1:
        raise InvalidInputError(f"n must be positive, got {n}")
    ref_m = list(params.reference_m) if params.reference_m is not None else list(range(n))
    ref_w = list(params.reference_w) if params.reference_w is not None else list(range(n))
    if len(ref_m) != n or len(ref_w) != n:
        raise InvalidInputError("reference ranking length does not match n")
    men = sample_permutations(ref_m, params.phi_m, rng, n)
    women = sample_permutations(ref_w, params.phi_w, rng, n)
    return PreferenceProfile(men, women)


def expected_kendall_distance(n: int, phi: float) -> float:
    """E[kendall_tau] under the model; monotone increasing in phi."""
    if phi == 0.0:
        return 0.0
    if phi == 1.0:
        return n * (n - 1) / 4.0
    i_arr = np.arange(1, n + 1, dtype=np.float64)
    phi_i = phi**i_arr
    terms = phi / (1.0 - phi) - i_arr * phi_i / (1.0 - phi_i)
    return float(terms.sum())


def estimate_phi(lists: Sequence[Sequence[int]], ref: Sequence[int]) -> float:
    """Moment-match phi to the sample mean Kendall distance from ``ref``.

    The unique phi with E[distance](phi) equal to the sample mean is found by
    bisection (E is strictly increasing); the result is clamped to
    [1e-3, 1] so downstream ratios stay finite.
    """
    if len(lists) == 0:
        raise InvalidInputError("need at least one preference list")
    n = len(ref)
    mean_tau = sum(kendall_tau(l, ref) for l in lists) / len(lists)
    if mean_tau <= expected_kendall_distance(n, PHI_MIN_ESTIMATE):
        return PHI_MIN_ESTIMATE
    if mean_tau >= expected_kendall_distance(n, 1.0):
        return 1.0
    lo, hi = PHI_MIN_ESTIMATE, 1.0
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if expected_kendall_distance(n, mid) < mean_tau:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
