from __future__ import annotations

import numpy as np
import pytest

from moodsig.cohorts import (
    COHORT_ORDER,
    Cohort,
    CohortParams,
    CorpusFormatError,
    DatasetSplit,
    SynthConfig,
    generate_synthetic,
    load_csv,
    split,
    write_csv,
)
from moodsig.streams import corpus_windows

HEADER = "participant_id,date,cohort,anxious,elated,sad,angry,irritable,energetic"


def write_lines(tmp_path, lines, name="corpus.csv"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return path


def test_cohort_encoding_and_labels():
    assert [int(c) for c in COHORT_ORDER] == [0, 1, 2]
    assert Cohort.from_label("borderline") is Cohort.BORDERLINE
    assert Cohort.BIPOLAR.label == "bipolar"
    with pytest.raises(ValueError):
        Cohort.from_label("manic")


def test_load_csv_groups_and_sorts(tmp_path):
    path = write_lines(
        tmp_path,
        [
            HEADER,
            "p2,2014-01-02,healthy,1,2,3,4,5,6",
            "p1,2014-01-05,bipolar,4,4,4,4,4,4",
            "p2,2014-01-01,healthy,7,6,5,4,3,2",
            "p1,2014-01-04,bipolar,1,1,1,1,1,1",
        ],
    )
    records = load_csv(path)
    assert [r.participant_id for r in records] == ["p1", "p2"]
    assert records[0].cohort is Cohort.BIPOLAR
    assert [r.seq for r in records[0].reports] == [0, 1]
    assert records[0].reports[0].scores == (1, 1, 1, 1, 1, 1)  # earlier date first
    assert records[1].reports[0].scores == (7, 6, 5, 4, 3, 2)


def test_load_csv_undated_rows_keep_file_order(tmp_path):
    path = write_lines(
        tmp_path,
        [HEADER, "p1,,healthy,1,1,1,1,1,1", "p1,,healthy,2,2,2,2,2,2"],
    )
    (rec,) = load_csv(path)
    assert rec.reports[0].scores[0] == 1
    assert rec.reports[1].scores[0] == 2


def test_load_csv_header_only_is_empty_corpus(tmp_path):
    assert load_csv(write_lines(tmp_path, [HEADER])) == []


def test_load_csv_error_messages_name_line_and_field(tmp_path):
    bad_score = write_lines(
        tmp_path, [HEADER, "p1,,healthy,1,1,1,1,1,9"], "a.csv"
    )
    with pytest.raises(CorpusFormatError, match="line 2.*energetic.*9"):
        load_csv(bad_score)
    bad_cohort = write_lines(
        tmp_path, [HEADER, "p1,,manic,1,1,1,1,1,1"], "b.csv"
    )
    with pytest.raises(CorpusFormatError, match="line 2.*cohort"):
        load_csv(bad_cohort)
    bad_date = write_lines(
        tmp_path, [HEADER, "p1,Jan 5,healthy,1,1,1,1,1,1"], "c.csv"
    )
    with pytest.raises(CorpusFormatError, match="line 2.*date"):
        load_csv(bad_date)
    not_int = write_lines(
        tmp_path, [HEADER, "p1,,healthy,1,1,one,1,1,1"], "d.csv"
    )
    with pytest.raises(CorpusFormatError, match="line 2.*sad"):
        load_csv(not_int)
    short_row = write_lines(tmp_path, [HEADER, "p1,,healthy,1,1"], "e.csv")
    with pytest.raises(CorpusFormatError, match="line 2"):
        load_csv(short_row)


def test_load_csv_rejects_wrong_header(tmp_path):
    path = write_lines(tmp_path, ["id,date,cohort,a,b,c,d,e,f"])
    with pytest.raises(CorpusFormatError, match="header"):
        load_csv(path)


def test_load_csv_rejects_cohort_flips(tmp_path):
    path = write_lines(
        tmp_path,
        [
            HEADER,
            "p1,,healthy,1,1,1,1,1,1",
            "p1,,bipolar,1,1,1,1,1,1",
        ],
    )
    with pytest.raises(CorpusFormatError, match="line 3.*p1"):
        load_csv(path)


def test_csv_round_trip(tmp_path):
    cfg = SynthConfig(participants=(2, 2, 2), reports_per_participant=25, seed=3)
    records = generate_synthetic(cfg)
    path = tmp_path / "out.csv"
    write_csv(records, path)
    assert load_csv(path) == records


def test_generate_is_deterministic():
    cfg = SynthConfig(participants=(2, 1, 2), reports_per_participant=40, seed=11)
    assert generate_synthetic(cfg) == generate_synthetic(cfg)


def test_generate_default_scale():
    records = generate_synthetic(SynthConfig())
    assert len(records) == 130
    by_cohort = {c: 0 for c in COHORT_ORDER}
    for r in records:
        by_cohort[r.cohort] += 1
    assert by_cohort[Cohort.BIPOLAR] == 48
    assert by_cohort[Cohort.BORDERLINE] == 31
    assert by_cohort[Cohort.HEALTHY] == 51
    assert len(corpus_windows(records, 20)) == 733


def test_generate_window_target_holds_for_any_seed():
    for seed in (0, 1, 99):
        records = generate_synthetic(SynthConfig(seed=seed))
        assert len(corpus_windows(records, 20)) == 733


def test_generate_fixed_report_counts():
    cfg = SynthConfig(participants=(1, 1, 1), reports_per_participant=20, seed=5)
    records = generate_synthetic(cfg)
    assert [len(r.reports) for r in records] == [20, 20, 20]
    assert len(corpus_windows(records, 20)) == 3


def test_generate_zero_volatility_is_constant_baseline():
    quiet = CohortParams(
        means=(2.0, 4.6, 1.6, 1.4, 1.7, 5.2), volatility=0.0, persistence=0.0
    )
    cfg = SynthConfig(
        participants=(0, 0, 2),
        reports_per_participant=30,
        seed=1,
        healthy=quiet,
    )
    for record in generate_synthetic(cfg):
        for report in record.reports:
            assert report.scores == (2, 5, 2, 1, 2, 5)


def test_generate_borderline_anger_irritability_correlation():
    records = generate_synthetic(SynthConfig())
    angry, irritable = [], []
    for r in records:
        if r.cohort is Cohort.BORDERLINE:
            for rep in r.reports:
                angry.append(rep.scores[3])
                irritable.append(rep.scores[4])
    r = np.corrcoef(angry, irritable)[0, 1]
    assert r >= 0.8


def test_split_sizes_and_partition(rng):
    records = generate_synthetic(
        SynthConfig(participants=(4, 4, 4), reports_per_participant=60, seed=2)
    )
    windows = corpus_windows(records, 20)
    result = split(windows, 0.7, seed=9)
    assert isinstance(result, DatasetSplit)
    assert len(result.train) == int(np.floor(0.7 * len(windows)))
    assert len(result.train) + len(result.test) == len(windows)
    seen = {id(w) for w in result.train} | {id(w) for w in result.test}
    assert seen == {id(w) for w in windows}


def test_split_is_seed_deterministic():
    records = generate_synthetic(
        SynthConfig(participants=(2, 2, 2), reports_per_participant=60, seed=2)
    )
    windows = corpus_windows(records, 20)
    a = split(windows, 0.5, seed=4)
    b = split(windows, 0.5, seed=4)
    assert a == b
    c = split(windows, 0.5, seed=5)
    assert c != a


def test_split_reproduces_study_counts():
    windows = corpus_windows(generate_synthetic(SynthConfig()), 20)
    result = split(windows, 0.7, seed=0)
    assert (len(result.train), len(result.test)) == (513, 220)


def test_split_label_balance_is_stable():
    records = generate_synthetic(
        SynthConfig(participants=(5, 5, 5), reports_per_participant=80, seed=6)
    )
    windows = corpus_windows(records, 20)
    overall = np.array(
        [sum(w.cohort == c for w in windows) for c in COHORT_ORDER],
        dtype=float,
    ) / len(windows)
    for seed in (0, 1, 2):
        result = split(windows, 0.7, seed=seed)
        frac = np.array(
            [sum(w.cohort == c for w in result.train) for c in COHORT_ORDER],
            dtype=float,
        ) / len(result.train)
        assert np.all(np.abs(frac - overall) <= 0.10)


def test_split_stratified_keeps_per_cohort_floor():
    records = generate_synthetic(
        SynthConfig(participants=(3, 3, 3), reports_per_participant=100, seed=8)
    )
    windows = corpus_windows(records, 20)
    result = split(windows, 0.6, seed=1, stratify=True)
    for cohort in COHORT_ORDER:
        total = sum(w.cohort == cohort for w in windows)
        got = sum(w.cohort == cohort for w in result.train)
        assert got == int(np.floor(0.6 * total))


def test_split_rejects_bad_ratio_and_empty_sides():
    records = generate_synthetic(
        SynthConfig(participants=(1, 1, 1), reports_per_participant=20, seed=2)
    )
    windows = corpus_windows(records, 20)
    with pytest.raises(ValueError):
        split(windows, 0.0, seed=0)
    with pytest.raises(ValueError):
        split(windows, 1.0, seed=0)
    with pytest.raises(ValueError):
        split(windows, 0.1, seed=0)  # floor(0.3) = 0 train windows


def test_synth_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(participants=(1, 1))
    with pytest.raises(ValueError):
        SynthConfig(participants=(0, 0, 0))
    with pytest.raises(ValueError):
        SynthConfig(reports_per_participant=0)
    with pytest.raises(ValueError):
        CohortParams(means=(4,) * 6, volatility=-1.0, persistence=0.0)
    with pytest.raises(ValueError):
        CohortParams(means=(4,) * 6, volatility=1.0, persistence=1.0)
    with pytest.raises(ValueError):
        CohortParams(
            means=(4,) * 6,
            volatility=1.0,
            persistence=0.5,
            anger_irritability_corr=2.0,
        )
