"""Synthetic generator, experiment matrix, and the analytic comparison."""

from __future__ import annotations

import json
from dataclasses import replace
from fractions import Fraction

import pytest

from multijoin.bench import (
    ABLATION_LADDER,
    ComponentXashHasher,
    PlantedJoin,
    SyntheticSpec,
    VocabSpec,
    ablate_xash,
    aggregate_records,
    analytic_collision_check,
    generate_corpus,
    key_size_sweep,
    run_matrix,
    spec_from_json,
)
from multijoin.discovery import QueryKey, brute_force_topk
from multijoin.errors import InputError
from multijoin.xash import compute_params, xash

SMALL_SPEC = SyntheticSpec(
    n_tables=12,
    rows_per_table=(8, 20),
    cols_per_table=(3, 5),
    vocabulary=VocabSpec(pool_size=400, domains=4, categorical_domains=1, categorical_pool=40),
    planted_joins=(
        PlantedJoin(query_rows=10, target_table=2, key_size=3, joinable_fraction=0.5),
        PlantedJoin(query_rows=8, target_table=7, key_size=2, joinable_fraction=0.25),
        PlantedJoin(query_rows=6, target_table=9, key_size=3, joinable_fraction=0.0),
    ),
    seed=7,
)


class TestGenerator:
    def test_deterministic_under_seed(self, tmp_path):
        generate_corpus(SMALL_SPEC, tmp_path / "a")
        generate_corpus(SMALL_SPEC, tmp_path / "b")
        files_a = sorted((tmp_path / "a").rglob("*.*"))
        files_b = sorted((tmp_path / "b").rglob("*.*"))
        assert [f.name for f in files_a] == [f.name for f in files_b]
        for fa, fb in zip(files_a, files_b):
            assert fa.read_bytes() == fb.read_bytes()

    def test_seed_changes_corpus(self, tmp_path):
        a = generate_corpus(SMALL_SPEC)
        b = generate_corpus(replace(SMALL_SPEC, seed=8))
        assert a.catalog.tables[0].rows != b.catalog.tables[0].rows

    def test_planted_truth_matches_oracle(self):
        corpus = generate_corpus(SMALL_SPEC)
        assert corpus.truth_is_exact
        for query in corpus.queries:
            result = brute_force_topk(
                QueryKey(query.table, query.key_columns, 12), corpus.catalog
            )
            scores = {e.table_id: e.joinability for e in result.entries}
            if query.true_joinability == 0:
                assert len(result) == 0
            else:
                assert scores == {query.target_table: query.true_joinability}

    def test_zero_fraction_plants_nothing(self):
        corpus = generate_corpus(SMALL_SPEC)
        empty = [q for q in corpus.queries if q.true_joinability == 0]
        assert empty
        assert all((q.query_id, q.target_table) not in corpus.truth for q in empty)

    def test_ground_truth_sidecar_format(self, tmp_path):
        corpus = generate_corpus(SMALL_SPEC, tmp_path)
        lines = (tmp_path / "ground_truth.jsonl").read_text().splitlines()
        assert len(lines) == len(corpus.truth)
        record = json.loads(lines[0])
        assert set(record) == {"query_id", "table_id", "true_j"}

    def test_unrealizable_specs_rejected(self):
        with pytest.raises(InputError):
            SyntheticSpec(
                n_tables=2,
                planted_joins=(PlantedJoin(5, 9, 2, 0.5),),
            ).validate()
        with pytest.raises(InputError):
            SyntheticSpec(
                n_tables=2,
                rows_per_table=(3, 5),
                planted_joins=(PlantedJoin(40, 1, 2, 1.0),),
            ).validate()

    def test_singleton_floor_reached(self):
        spec = replace(SMALL_SPEC, singleton_floor=900)
        corpus = generate_corpus(spec)
        cells = sum(t.n_rows * t.n_cols for t in corpus.catalog.tables)
        expected = min(900, cells)
        assert corpus.catalog.stats.unique_value_count >= expected * 0.95

    def test_written_corpus_reingests_identically(self, tmp_path):
        from multijoin.corpus import Catalog

        corpus = generate_corpus(SMALL_SPEC, tmp_path)
        reloaded = Catalog()
        for path in sorted((tmp_path / "tables").glob("*.csv")):
            reloaded.ingest_csv(path)
        assert [t.rows for t in reloaded.tables] == [t.rows for t in corpus.catalog.tables]

    def test_spec_json_round_trip(self):
        obj = {
            "n_tables": 12,
            "rows_per_table": [8, 20],
            "cols_per_table": [3, 5],
            "vocabulary": {"pool_size": 400, "domains": 4},
            "planted_joins": [
                {"query_rows": 10, "target_table": 2, "key_size": 3, "joinable_fraction": 0.5}
            ],
            "seed": 7,
        }
        spec = spec_from_json(obj)
        assert spec.n_tables == 12
        assert spec.planted_joins[0].key_size == 3

    def test_non_unique_mode_truth_is_floor(self):
        corpus = generate_corpus(replace(SMALL_SPEC, unique_key_component=False))
        assert not corpus.truth_is_exact
        for query in corpus.queries:
            if query.true_joinability == 0:
                continue
            result = brute_force_topk(
                QueryKey(query.table, query.key_columns, 12), corpus.catalog
            )
            scores = {e.table_id: e.joinability for e in result.entries}
            assert scores.get(query.target_table, 0) >= query.true_joinability


class TestComponentHasher:
    def test_full_variant_reproduces_production_hash(self):
        params = compute_params(128, 5000)
        full = ComponentXashHasher(params)
        for value in ("muhammad", "lee", "us", "", "a b c", "zq9"):
            assert full.hash(value) == xash(value, params)

    def test_ladder_popcounts(self):
        params = compute_params(128, 5000)
        length_only = ComponentXashHasher(
            params, use_chars=False, use_positions=False, use_length=True, use_rotation=False
        )
        assert length_only.hash("muhammad").popcount() == 1
        chars_only = ComponentXashHasher(
            params, use_chars=True, use_positions=False, use_length=False, use_rotation=False
        )
        assert chars_only.hash("muhammad").popcount() == params.ones_budget - 1

    def test_position_flag_changes_offsets(self):
        params = compute_params(128, 5000)
        with_pos = ComponentXashHasher(params, use_length=False, use_rotation=False)
        without_pos = ComponentXashHasher(
            params, use_positions=False, use_length=False, use_rotation=False
        )
        assert with_pos.hash("muhammad") != without_pos.hash("muhammad")


class TestMatrix:
    def test_modes_agree_and_aggregate(self):
        corpus = generate_corpus(SMALL_SPEC)
        records = run_matrix(
            corpus.catalog,
            corpus.queries,
            hasher_names=("xash", "ht"),
            bits_list=(128,),
            modes=("mate", "scr", "mcr"),
            k=5,
        )
        assert len(records) == 2 * 3 * len(corpus.queries)
        cells = aggregate_records(records)
        assert "xash-128-mate-min_cardinality" in cells
        for metrics in cells.values():
            assert 0.0 <= metrics["precision_mean"] <= 1.0

    def test_ablation_runs_full_ladder(self):
        corpus = generate_corpus(SMALL_SPEC)
        table = ablate_xash(corpus.catalog, corpus.queries, k=5)
        assert list(table) == [label for label, _ in ABLATION_LADDER]
        for metrics in table.values():
            assert 0.0 <= metrics["precision"] <= 1.0

    def test_key_size_sweep_shapes(self):
        spec = replace(
            SMALL_SPEC,
            cols_per_table=(4, 6),
            planted_joins=(PlantedJoin(8, 3, 4, 0.5),),
            unique_key_component=False,
        )
        table = key_size_sweep(spec, key_sizes=(2, 3, 4), seeds=(0,))
        assert set(table) == {"m=2", "m=3", "m=4"}

    def test_sweep_needs_wide_enough_plants(self):
        with pytest.raises(InputError):
            key_size_sweep(SMALL_SPEC, key_sizes=(2, 3, 4, 5, 6), seeds=(0,))


class TestAnalyticCheck:
    def test_character_only_crossover(self):
        holds = {k: analytic_collision_check(128, k).char_only_holds for k in range(1, 11)}
        assert holds == {k: k > 3 for k in range(1, 11)}

    def test_with_length_crossover(self):
        holds = {k: analytic_collision_check(128, k).with_length_holds for k in range(1, 11)}
        assert holds == {k: k > 2 for k in range(1, 11)}

    def test_single_character_fails(self):
        check = analytic_collision_check(128, 1)
        assert not check.char_only_holds
        assert check.lhbf_side == Fraction(2, 128 * 127)

    def test_exact_rational_sides(self):
        check = analytic_collision_check(128, 2)
        assert check.xash_side == Fraction(1, 3) * Fraction(1, 36)
        assert check.xash_side_with_length == check.xash_side / 17

    def test_input_validation(self):
        with pytest.raises(InputError):
            analytic_collision_check(64, 2)
        with pytest.raises(InputError):
            analytic_collision_check(128, 0)
