"""Baseline hasher behavior: determinism, widths, distributions."""

from __future__ import annotations

import math
import random
import statistics

import pytest
from hypothesis import given
from hypothesis import strategies as st

from multijoin.corpus import CorpusStats
from multijoin.errors import CompatibilityError, InputError
from multijoin.hashers import (
    DEFAULT_SEED,
    BloomHasher,
    BloomParams,
    HtHasher,
    LhbfHasher,
    UniformHasher,
    XashHasher,
    _lhbf_positions,
    bloom_hash,
    hasher_from_config,
    make_hasher,
    optimal_bf_hash_count,
)
from multijoin.index import super_key
from multijoin.xash import DEFAULT_FREQUENCY_ORDER, compute_params

RNG_WORDS = [f"word{i:05d}" for i in range(512)]


class TestOptimalHashCount:
    def test_webtable_average(self):
        assert optimal_bf_hash_count(128, 5) == 18

    def test_opendata_average(self):
        assert optimal_bf_hash_count(128, 26) == 3

    def test_floor_at_one(self):
        assert optimal_bf_hash_count(128, 128 / math.log(2)) == 1

    def test_rejects_fractional_column_counts(self):
        with pytest.raises(InputError):
            optimal_bf_hash_count(128, 0.5)


class TestDeterminismAndWidth:
    @pytest.mark.parametrize("bits", [128, 256, 512])
    def test_all_hashers(self, bits):
        stats = CorpusStats(unique_value_count=1000, total_rows=10, avg_columns=5.0)
        for name in ("xash", "bf", "lhbf", "ht", "uniform"):
            hasher = make_hasher(name, bits, corpus_stats=stats)
            a = hasher.hash("some value")
            b = hasher.hash("some value")
            assert a == b
            assert a.width == bits
            assert hasher.hash("") .width == bits

    def test_seed_changes_output(self):
        a = HtHasher(128, seed=1).hash("x")
        b = HtHasher(128, seed=2).hash("x")
        assert a != b


class TestBloom:
    def test_single_function_reduces_to_ht(self):
        bloom = BloomHasher(128, hash_count=1, seed=DEFAULT_SEED)
        ht = HtHasher(128, seed=DEFAULT_SEED)
        for value in ("a", "b", "longer value"):
            assert bloom.hash(value) == ht.hash(value)

    def test_popcount_bounded_by_hash_count(self):
        bloom = BloomHasher(128, hash_count=18)
        for value in RNG_WORDS[:50]:
            assert bloom.hash(value).popcount() <= 18

    def test_hash_count_validated(self):
        with pytest.raises(CompatibilityError):
            BloomParams(128, 0)
        with pytest.raises(CompatibilityError):
            BloomParams(128, 129)

    def test_bloom_hash_helper(self):
        params = BloomParams(128, 4, seed=7)
        assert bloom_hash("v", params) == BloomHasher(128, 4, seed=7).hash("v")

    def test_fp_rate_tracks_closed_form(self):
        # Rows of V random values, OR-aggregated; probe with non-members.
        bits, inserted = 128, 20
        hash_count = optimal_bf_hash_count(bits, inserted)
        expected = (1 - math.exp(-inserted * hash_count / bits)) ** hash_count
        bloom = BloomHasher(bits, hash_count)
        rng = random.Random(1234)
        trials = 0
        false_positives = 0
        for row_index in range(150):
            members = [f"member-{row_index}-{i}" for i in range(inserted)]
            aggregate = super_key(members, bloom)
            for probe_index in range(60):
                probe = bloom.hash(f"probe-{row_index}-{probe_index}")
                trials += 1
                false_positives += aggregate.covers(probe)
        del rng
        observed = false_positives / trials
        sigma = math.sqrt(expected * (1 - expected) / trials)
        assert abs(observed - expected) < max(5 * sigma, 0.01)


class TestLhbf:
    def test_position_arithmetic(self):
        assert _lhbf_positions(3, 5, 2, 128) == [3, 8]

    def test_degenerate_second_hash(self):
        assert set(_lhbf_positions(7, 0, 6, 128)) == {7}

    def test_same_hash_count_as_bloom(self):
        stats = CorpusStats(unique_value_count=100, total_rows=10, avg_columns=5.0)
        bloom = make_hasher("bf", 128, corpus_stats=stats)
        lhbf = make_hasher("lhbf", 128, corpus_stats=stats)
        assert bloom.config.hash_count == lhbf.config.hash_count == 18

    def test_popcount_bounded(self):
        lhbf = LhbfHasher(128, hash_count=18)
        for value in RNG_WORDS[:50]:
            assert lhbf.hash(value).popcount() <= 18


class TestHt:
    def test_always_one_bit(self):
        ht = HtHasher(128)
        for value in RNG_WORDS:
            assert ht.hash(value).popcount() == 1

    def test_uniform_occupancy(self):
        bits = 128
        ht = HtHasher(bits)
        counts = [0] * bits
        n = 100_000
        for i in range(n):
            for index in ht.hash(f"occupancy-{i}").indices():
                counts[index] += 1
        expected = n / bits
        sigma = math.sqrt(n * (1 / bits) * (1 - 1 / bits))
        for count in counts:
            assert abs(count - expected) < 5 * sigma


class TestUniform:
    def test_mean_popcount_near_half(self):
        uniform = UniformHasher(128)
        mean = statistics.mean(
            uniform.hash(f"sample-{i}").popcount() for i in range(10_000)
        )
        assert abs(mean - 64) < 64 * 0.03

    def test_distinct_values_rarely_collide(self):
        uniform = UniformHasher(128)
        outputs = {uniform.hash(w).value for w in RNG_WORDS}
        assert len(outputs) == len(RNG_WORDS)

    def test_sets_far_more_bits_than_xash(self):
        params = compute_params(128, 10_000)
        structured = XashHasher(params)
        uniform = UniformHasher(128)
        xash_mean = statistics.mean(structured.hash(w).popcount() for w in RNG_WORDS)
        uniform_mean = statistics.mean(uniform.hash(w).popcount() for w in RNG_WORDS)
        assert xash_mean <= params.ones_budget
        assert uniform_mean > 10 * xash_mean


class TestCovering:
    @given(st.data())
    def test_or_aggregation_covers_members(self, data):
        stats = CorpusStats(unique_value_count=500, total_rows=10, avg_columns=4.0)
        name = data.draw(st.sampled_from(("xash", "bf", "lhbf", "ht", "uniform")))
        hasher = make_hasher(name, 128, corpus_stats=stats)
        row = data.draw(st.lists(st.text(max_size=12), min_size=1, max_size=8))
        aggregate = super_key(row, hasher)
        for value in row:
            assert aggregate.covers(hasher.hash(value))
            assert (hasher.hash(value) | aggregate) == aggregate


class TestFactory:
    def test_unknown_name(self):
        with pytest.raises(InputError):
            make_hasher("sha", 128)

    def test_bf_requires_sizing_information(self):
        with pytest.raises(InputError):
            make_hasher("bf", 128)

    def test_explicit_hash_count(self):
        hasher = make_hasher("bf", 128, hash_count=4)
        assert hasher.config.hash_count == 4

    @pytest.mark.parametrize("name", ["xash", "bf", "lhbf", "ht", "uniform"])
    def test_config_round_trip(self, name):
        stats = CorpusStats(unique_value_count=5000, total_rows=50, avg_columns=6.0)
        original = make_hasher(name, 128, corpus_stats=stats)
        rebuilt = hasher_from_config(original.config)
        assert rebuilt.config == original.config
        for value in ("alpha", "beta gamma", ""):
            assert rebuilt.hash(value) == original.hash(value)

    def test_xash_digest_mismatch_detected(self):
        stats = CorpusStats(unique_value_count=5000, total_rows=50, avg_columns=6.0)
        original = make_hasher("xash", 128, corpus_stats=stats)
        with pytest.raises(CompatibilityError):
            hasher_from_config(original.config, DEFAULT_FREQUENCY_ORDER[::-1])

    def test_uniform_popcount_dwarfs_structured(self):
        # guard for the FP explanation: OR of a wide row under uniform
        # hashing saturates the array.
        uniform = UniformHasher(128)
        aggregate = super_key([f"c{i}" for i in range(6)], uniform)
        assert aggregate.popcount() > 0.95 * 128
