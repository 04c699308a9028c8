import itertools

import numpy as np
import pytest

from matchfair import (
    DegenerateDistributionError,
    InvalidInputError,
    MallowsParams,
    estimate_phi,
    expected_kendall_distance,
    generate_profile,
    kendall_tau,
    mallows_probability,
    normalization_constant,
    sample_permutation,
    sample_permutations,
    substream_rng,
)


class TestKendallTau:
    def test_identity_distance_zero(self):
        assert kendall_tau((1, 2, 3), (1, 2, 3)) == 0

    def test_full_reversal(self):
        assert kendall_tau((3, 2, 1), (1, 2, 3)) == 3

    def test_mixed_pair(self):
        # exhaustive check over the 3 item pairs: (1,2) and (2,3) invert
        assert kendall_tau((2, 1, 3), (1, 3, 2)) == 2

    def test_length_mismatch_raises(self):
        with pytest.raises(InvalidInputError):
            kendall_tau((1, 2), (1, 2, 3))
        with pytest.raises(InvalidInputError):
            kendall_tau((1, 2, 4), (1, 2, 3))

    def test_agrees_with_quadratic_count(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(1, 12))
            pi = rng.permutation(n).tolist()
            sigma = rng.permutation(n).tolist()
            pos = {x: i for i, x in enumerate(sigma)}
            naive = sum(
                1
                for a in range(n)
                for b in range(a + 1, n)
                if (pos[pi[a]] > pos[pi[b]])
            )
            assert kendall_tau(pi, sigma) == naive

    def test_metric_properties_on_random_triples(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(2, 10))
            a, b, c = (rng.permutation(n).tolist() for _ in range(3))
            assert kendall_tau(a, a) == 0
            assert kendall_tau(a, b) == kendall_tau(b, a)
            assert kendall_tau(a, c) <= kendall_tau(a, b) + kendall_tau(b, c)
            assert 0 <= kendall_tau(a, b) <= n * (n - 1) // 2


class TestMallowsProbability:
    def test_reference_probability_n3(self):
        # Z = 1 * 1.5 * 1.75 = 2.625
        p = mallows_probability([0, 1, 2], [0, 1, 2], 0.5)
        assert p == pytest.approx(1 / 2.625, abs=1e-12)

    def test_uniform_limit(self):
        for perm in itertools.permutations(range(3)):
            assert mallows_probability(list(perm), [0, 1, 2], 1.0) == pytest.approx(1 / 6)

    def test_reversal_n2(self):
        assert mallows_probability([1, 0], [0, 1], 0.5) == pytest.approx(1 / 3)

    def test_phi_zero_rejected(self):
        with pytest.raises(DegenerateDistributionError):
            mallows_probability([0, 1], [0, 1], 0.0)

    @pytest.mark.parametrize("phi", [0.2, 0.5, 0.9, 1.0])
    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_total_mass_is_one(self, n, phi):
        ref = list(range(n))
        total = sum(
            mallows_probability(list(p), ref, phi) for p in itertools.permutations(ref)
        )
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_normalization_matches_product_formula(self):
        z = normalization_constant(4, 0.3)
        assert z == pytest.approx(1 * (1 + 0.3) * (1 + 0.3 + 0.09) * (1 + 0.3 + 0.09 + 0.027))


class TestSampler:
    def test_phi_zero_returns_reference(self):
        rng = substream_rng(11)
        ref = [3, 0, 2, 1]
        for _ in range(5):
            assert sample_permutation(ref, 0.0, rng) == ref

    def test_reference_frequency_matches_mass(self):
        rng = substream_rng(12)
        ref = [0, 1, 2]
        hits = sum(1 for s in sample_permutations(ref, 0.5, rng, 60_000) if s == ref)
        assert hits / 60_000 == pytest.approx(0.380952, abs=0.01)

    def test_uniform_frequencies(self):
        rng = substream_rng(13)
        counts = {}
        for s in sample_permutations([0, 1, 2], 1.0, rng, 60_000):
            counts[tuple(s)] = counts.get(tuple(s), 0) + 1
        assert len(counts) == 6
        for c in counts.values():
            assert c / 60_000 == pytest.approx(1 / 6, abs=0.01)

    def test_empirical_distribution_tracks_mass_n4(self):
        # coarse sampler-vs-mass agreement; the acceptance suite runs the
        # full chi-square version
        rng = substream_rng(14)
        ref = list(range(4))
        counts = {p: 0 for p in itertools.permutations(ref)}
        draws = 40_000
        for s in sample_permutations(ref, 0.7, rng, draws):
            counts[tuple(s)] += 1
        for p, c in counts.items():
            expected = mallows_probability(list(p), ref, 0.7)
            assert c / draws == pytest.approx(expected, abs=0.012)

    def test_same_stream_same_sample(self):
        a = sample_permutations(list(range(10)), 0.6, substream_rng(9, 4), 20)
        b = sample_permutations(list(range(10)), 0.6, substream_rng(9, 4), 20)
        assert a == b


class TestGenerateProfile:
    def test_phi_zero_gives_reference_everywhere(self):
        params = MallowsParams(0.0, 0.0, reference_m=(2, 0, 1, 3, 4), reference_w=(4, 3, 2, 1, 0))
        p = generate_profile(5, params, substream_rng(1))
        for m in range(5):
            assert p._men_prefs_l[m] == [2, 0, 1, 3, 4]
        for w in range(5):
            assert p._women_prefs_l[w] == [4, 3, 2, 1, 0]

    def test_uniform_first_choices_look_uniform(self):
        # chi-square on the first-choice distribution at phi=1
        from scipy import stats

        n = 150
        p = generate_profile(n, MallowsParams(1.0, 1.0), substream_rng(2))
        firsts = [row[0] for row in p._men_prefs_l] + [row[0] for row in p._women_prefs_l]
        counts = np.bincount(firsts, minlength=n)
        _, pval = stats.chisquare(counts)
        assert pval > 0.01

    def test_fixed_seed_reproducible(self):
        a = generate_profile(20, MallowsParams(0.4, 0.8), substream_rng(3, 7))
        b = generate_profile(20, MallowsParams(0.4, 0.8), substream_rng(3, 7))
        assert a == b

    def test_invalid_phi_rejected(self):
        with pytest.raises(InvalidInputError):
            MallowsParams(1.2, 0.5)
        with pytest.raises(InvalidInputError):
            MallowsParams(-0.1, 0.5)


class TestRngSeed:
    def test_same_seed_and_stream_bit_identical(self):
        from matchfair import RngSeed

        a = RngSeed(12345, 6).generator().integers(0, 2**32, size=32)
        b = RngSeed(12345, 6).generator().integers(0, 2**32, size=32)
        assert (a == b).all()

    def test_distinct_streams_differ(self):
        from matchfair import RngSeed

        a = RngSeed(12345, 6).generator().integers(0, 2**32, size=32)
        c = RngSeed(12345, 7).generator().integers(0, 2**32, size=32)
        assert (a != c).any()


class TestEstimatePhi:
    def test_zero_distance_clamps_to_minimum(self):
        ref = list(range(8))
        assert estimate_phi([ref, ref, ref], ref) == pytest.approx(1e-3)

    def test_uniform_mean_distance_maps_to_one(self):
        n = 9
        assert expected_kendall_distance(n, 1.0) == pytest.approx(n * (n - 1) / 4)
        # a synthetic sample whose mean distance hits the uniform expectation
        ref = list(range(4))
        lists = [[0, 1, 2, 3], [3, 2, 1, 0]]  # distances 0 and 6, mean 3 = n(n-1)/4
        assert estimate_phi(lists, ref) == pytest.approx(1.0)

    def test_recovers_phi_half_at_n150(self):
        rng = substream_rng(21)
        ref = list(range(150))
        lists = sample_permutations(ref, 0.5, rng, 1000)
        assert estimate_phi(lists, ref) == pytest.approx(0.5, abs=0.05)

    def test_monotone_in_mean_distance(self):
        ref = list(range(12))
        rng = substream_rng(22)
        samples = [sample_permutations(ref, phi, rng, 200) for phi in (0.2, 0.5, 0.8)]
        estimates = [estimate_phi(s, ref) for s in samples]
        assert estimates[0] < estimates[1] < estimates[2]

    def test_empty_input_raises(self):
        with pytest.raises(InvalidInputError):
            estimate_phi([], [0, 1, 2])

    def test_expected_distance_closed_form_matches_direct_sum(self):
        for n in (2, 5, 9):
            for phi in (0.1, 0.6, 0.95):
                direct = 0.0
                for i in range(2, n + 1):
                    w = [phi**j for j in range(i)]
                    direct += sum(j * wj for j, wj in enumerate(w)) / sum(w)
                assert expected_kendall_distance(n, phi) == pytest.approx(direct, rel=1e-9)
