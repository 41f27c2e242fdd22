"""Ingestion, preprocessing fixpoint, splitting, and bundle I/O."""

from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genrec.data import (
    FileFormat,
    RawEvent,
    compute_stats,
    ingest,
    load_bundle,
    load_events_frame,
    preprocess,
    save_bundle,
    split,
)
from genrec.errors import EmptyDatasetError, IngestionError, SplitError
from genrec.synthetic import log_from_sequences


def ev(user, item, ts):
    return RawEvent(str(user), str(item), ts)


def brute_force_fixpoint(events, min_user_len, min_item_count):
    """Independent oracle: alternate the two filters on plain lists."""
    evs = list(events)
    while True:
        item_counts = Counter(e.item for e in evs)
        kept = [e for e in evs if item_counts[e.item] >= min_item_count]
        changed = len(kept) != len(evs)
        evs = kept
        user_counts = Counter(e.user for e in evs)
        kept = [e for e in evs if user_counts[e.user] >= min_user_len]
        changed |= len(kept) != len(evs)
        evs = kept
        if not changed:
            return evs


def log_as_events(log):
    """Map a preprocessed log back to (user, item) raw-ID event tuples."""
    out = []
    for u, seq in enumerate(log.sequences):
        user = log.catalog.user_ids[u]
        for t, item in enumerate(seq):
            out.append(RawEvent(user, log.catalog.item_ids[item], t))
    return out


class TestIngest:
    def test_three_row_csv_preserves_order(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_text("user,item,ts\nu2,iA,5\nu1,iB,3\nu2,iC,9\n")
        events = ingest(path)
        assert events == [ev("u2", "iA", 5), ev("u1", "iB", 3),
                          ev("u2", "iC", 9)]

    def test_missing_column_names_the_column(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_text("user,item\nu1,i1\n")
        with pytest.raises(IngestionError, match="'ts'"):
            ingest(path)

    def test_unparsable_timestamp_reports_row(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_text("user,item,ts\nu1,i1,5\nu1,i2,oops\n")
        with pytest.raises(IngestionError, match="row 2"):
            ingest(path)

    def test_tab_delimiter_and_custom_columns(self, tmp_path):
        path = tmp_path / "events.tsv"
        path.write_text("uid\tmid\twhen\na\tx\t1\nb\ty\t2\n")
        fmt = FileFormat(user_col="uid", item_col="mid", time_col="when",
                         delimiter="\t")
        assert ingest(path, fmt) == [ev("a", "x", 1), ev("b", "y", 2)]

    def test_headerless_positional_columns(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_text("u1,i1,1\nu1,i2,2\n")
        fmt = FileFormat(user_col=0, item_col=1, time_col=2, header=False)
        assert ingest(path, fmt) == [ev("u1", "i1", 1), ev("u1", "i2", 2)]

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestionError):
            ingest(tmp_path / "nope.csv")


class TestPreprocess:
    def test_already_clean_data_is_unchanged(self):
        events = []
        for u in range(3):
            for t in range(6):
                events.append(ev(f"u{u}", f"i{t % 4}", t))
        log = preprocess(events, min_user_len=5, min_item_count=3)
        assert log.catalog.user_count == 3
        assert log.interaction_count == 18

    def test_cascading_fixpoint_matches_hand_trace(self):
        # q is rare -> u1 shrinks below 3 -> a, b become rare -> u2 goes;
        # the survivors then satisfy both constraints simultaneously
        events = [
            ev("u1", "q", 0), ev("u1", "a", 1), ev("u1", "b", 2),
            ev("u2", "a", 0), ev("u2", "b", 1), ev("u2", "c", 2),
            ev("u3", "c", 0), ev("u3", "d", 1), ev("u3", "d", 2),
            ev("u3", "e", 3), ev("u3", "e", 4),
            ev("u4", "c", 0), ev("u4", "d", 1), ev("u4", "e", 2),
        ]
        log = preprocess(events, min_user_len=3, min_item_count=2)
        assert [log.catalog.user_ids[u] for u in range(log.catalog.user_count)] \
            == ["u3", "u4"]
        raw = [[log.catalog.item_ids[i] for i in seq] for seq in log.sequences]
        assert raw == [["c", "d", "d", "e", "e"], ["c", "d", "e"]]
        # constraints hold simultaneously on the result
        counts = Counter(x for seq in raw for x in seq)
        assert min(counts.values()) >= 2
        assert all(len(seq) >= 3 for seq in raw)
        # and the independent oracle agrees on the surviving multiset
        want = brute_force_fixpoint(events, 3, 2)
        assert sorted((e.user, e.item) for e in want) \
            == sorted((log.catalog.user_ids[u], x)
                      for u, seq in enumerate(raw) for x in seq)

    @given(st.lists(
        st.tuples(st.integers(0, 5), st.integers(0, 7)),
        min_size=1, max_size=60))
    @settings(max_examples=60, deadline=None)
    def test_fixpoint_matches_brute_force_oracle(self, pairs):
        events = [ev(f"u{u}", f"i{i}", t) for t, (u, i) in enumerate(pairs)]
        want = brute_force_fixpoint(events, 3, 2)
        if not want:
            with pytest.raises(EmptyDatasetError):
                preprocess(events, min_user_len=3, min_item_count=2)
            return
        log = preprocess(events, min_user_len=3, min_item_count=2)
        got = sorted((log.catalog.user_ids[u], log.catalog.item_ids[i])
                     for u, seq in enumerate(log.sequences) for i in seq)
        assert got == sorted((e.user, e.item) for e in want)

    def test_preprocess_is_idempotent(self):
        rng = np.random.default_rng(8)
        events = [ev(f"u{rng.integers(0, 6)}", f"i{rng.integers(0, 9)}", t)
                  for t in range(200)]
        log = preprocess(events, min_user_len=5, min_item_count=4)
        again = preprocess(log_as_events(log), min_user_len=5,
                           min_item_count=4)
        # same users, same raw item streams
        assert again.catalog.user_ids == log.catalog.user_ids
        assert [[again.catalog.item_ids[i] for i in seq]
                for seq in again.sequences] == \
            [[log.catalog.item_ids[i] for i in seq]
             for seq in log.sequences]

    def test_dense_ids_contiguous_and_first_appearance_ordered(self):
        events = [
            ev("b", "z", 0), ev("b", "y", 1), ev("b", "z", 2),
            ev("a", "x", 0), ev("a", "z", 1), ev("a", "x", 2),
        ]
        log = preprocess(events, min_user_len=1, min_item_count=1)
        # user b appeared first in the file; item z is b's earliest event
        assert log.catalog.user_ids == ["b", "a"]
        assert log.catalog.item_ids[1:] == ["z", "y", "x"]
        dense = sorted(set(i for seq in log.sequences for i in seq))
        assert dense == list(range(1, log.catalog.item_count + 1))

    def test_timestamp_ties_break_by_input_order(self):
        events = [ev("u", "first", 7), ev("u", "second", 7),
                  ev("u", "third", 7)] * 2
        log = preprocess(events, min_user_len=2, min_item_count=1)
        raw = [log.catalog.item_ids[i] for i in log.sequences[0]]
        assert raw == ["first", "second", "third", "first", "second", "third"]

    def test_chronological_sorting_within_user(self):
        events = [ev("u", "late", 9), ev("u", "early", 1), ev("u", "mid", 5)]
        log = preprocess(events, min_user_len=1, min_item_count=1)
        raw = [log.catalog.item_ids[i] for i in log.sequences[0]]
        assert raw == ["early", "mid", "late"]

    def test_drop_repeated_items_keeps_first(self):
        events = [ev("u", "a", 1), ev("u", "b", 2), ev("u", "a", 3),
                  ev("u", "c", 4)]
        log = preprocess(events, min_user_len=1, min_item_count=1,
                         drop_repeated_items=True)
        raw = [log.catalog.item_ids[i] for i in log.sequences[0]]
        assert raw == ["a", "b", "c"]

    def test_everything_filtered_raises(self):
        with pytest.raises(EmptyDatasetError):
            preprocess([ev("u", "i", 0)], min_user_len=5, min_item_count=5)

    def test_stats_hand_counted(self):
        events = [ev(f"u{u}", f"i{i}", t)
                  for t, (u, i) in enumerate(
                      [(0, 0), (0, 1), (0, 0), (1, 1), (1, 0), (1, 1)])]
        log = preprocess(events, min_user_len=3, min_item_count=3)
        stats = compute_stats(log)
        assert (stats.users, stats.items, stats.interactions) == (2, 2, 6)
        assert stats.avg_length == pytest.approx(3.0)
        assert stats.density == pytest.approx(6 / (2 * 2))
        assert "%" in stats.table()

    def test_density_printed_to_four_significant_digits(self):
        log = log_from_sequences(
            [np.arange(1, 8), np.arange(1, 8)], item_count=7)
        stats = compute_stats(log)
        shown = stats.table().splitlines()[1].split()[-1].rstrip("%")
        assert float(shown) == pytest.approx(stats.density * 100, rel=5e-4)


class TestSplit:
    def test_leave_last_ten(self):
        log = log_from_sequences([np.arange(1, 31)], item_count=30)
        ds = split(log, n_holdout=10, val_fraction=0.5, seed=0)
        np.testing.assert_array_equal(ds.train_sequences[0], np.arange(1, 21))
        np.testing.assert_array_equal(ds.ground_truth[0], np.arange(21, 31))

    def test_determinism(self):
        log = log_from_sequences(
            [np.arange(1, 31) for _ in range(50)], item_count=30)
        a = split(log, seed=7)
        b = split(log, seed=7)
        np.testing.assert_array_equal(a.is_validation, b.is_validation)
        c = split(log, seed=8)
        assert not np.array_equal(a.is_validation, c.is_validation)

    def test_validation_count_within_binomial_bounds(self):
        log = log_from_sequences(
            [np.arange(1, 13) for _ in range(1000)], item_count=12)
        ds = split(log, n_holdout=2, val_fraction=0.5, seed=123)
        n_val = int(ds.is_validation.sum())
        assert 400 <= n_val <= 600
        assert ds.users_of("validation").size + ds.users_of("test").size \
            == 1000

    def test_partition_reconstructs_sequences(self):
        rng = np.random.default_rng(4)
        seqs = [rng.integers(1, 20, size=rng.integers(8, 15))
                for _ in range(20)]
        log = log_from_sequences(seqs, item_count=19)
        ds = split(log, n_holdout=5, seed=0)
        for u, seq in enumerate(seqs):
            rebuilt = np.concatenate([ds.train_sequences[u],
                                      ds.ground_truth[u]])
            np.testing.assert_array_equal(rebuilt, seq)

    def test_too_short_user_is_named(self):
        log = log_from_sequences([np.arange(1, 31), np.arange(1, 9)],
                                 item_count=30)
        with pytest.raises(SplitError, match="u1"):
            split(log, n_holdout=10)


class TestBundle:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        seqs = [rng.integers(1, 9, size=rng.integers(3, 8))
                for _ in range(7)]
        log = log_from_sequences(seqs, item_count=8)
        save_bundle(log, tmp_path / "bundle", extra_meta={"split": {
            "n_holdout": 2, "val_fraction": 0.5, "seed": 3}})
        loaded, meta = load_bundle(tmp_path / "bundle")
        assert meta["split"]["n_holdout"] == 2
        assert loaded.catalog.item_ids == log.catalog.item_ids
        assert loaded.catalog.user_ids == log.catalog.user_ids
        for a, b in zip(loaded.sequences, log.sequences):
            np.testing.assert_array_equal(a, b)

    def test_write_is_byte_deterministic(self, tmp_path):
        log = log_from_sequences([np.arange(1, 6)] * 3, item_count=5)
        save_bundle(log, tmp_path / "a")
        save_bundle(log, tmp_path / "b")
        for name in ("metadata.json", "sequences.bin", "offsets.bin"):
            assert (tmp_path / "a" / name).read_bytes() \
                == (tmp_path / "b" / name).read_bytes()

    def test_corrupt_bundle_detected(self, tmp_path):
        log = log_from_sequences([np.arange(1, 6)] * 3, item_count=5)
        save_bundle(log, tmp_path / "bundle")
        (tmp_path / "bundle" / "sequences.bin").write_bytes(b"\x01\x00\x00\x00")
        with pytest.raises(IngestionError):
            load_bundle(tmp_path / "bundle")

    def test_not_a_bundle(self, tmp_path):
        with pytest.raises(IngestionError):
            load_bundle(tmp_path)


class TestEndToEndDeterminism:
    def test_ingest_preprocess_split_is_reproducible(self, tmp_path):
        rng = np.random.default_rng(10)
        lines = ["user,item,ts"]
        for t in range(400):
            lines.append(f"u{rng.integers(0, 20)},i{rng.integers(0, 15)},{t}")
        path = tmp_path / "events.csv"
        path.write_text("\n".join(lines) + "\n")

        outputs = []
        for run in ("x", "y"):
            frame = load_events_frame(path)
            log = preprocess(frame, min_user_len=10, min_item_count=5)
            ds = split(log, n_holdout=3, val_fraction=0.5, seed=99)
            save_bundle(log, tmp_path / run)
            outputs.append((
                (tmp_path / run / "metadata.json").read_bytes(),
                (tmp_path / run / "sequences.bin").read_bytes(),
                ds.is_validation.tolist(),
            ))
        assert outputs[0] == outputs[1]
