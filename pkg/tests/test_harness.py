import json
import math

import numpy as np
import pytest

from noisyrcs.errors import ParameterError
from noisyrcs.harness import (ARTIFACT_VERSION, CSV_COLUMNS, SUITES,
                              ExperimentConfig, RunningStats,
                              estimate_logprob_stats, estimate_tail,
                              pairwise_reduce, records_to_rows, rows_to_csv,
                              run_experiment, sample_rng, sidecar_json,
                              verify_suite, wilson_interval)

CHANNEL = {"kind": "amp_then_dep", "q": 0.2, "p": 0.1}


def _config(**kw):
    base = dict(n=2, depth=2, channel=CHANNEL, samples=200, seed=5,
                targets=("p_x",), bitstrings="all")
    base.update(kw)
    return ExperimentConfig(**base)


# ---------------------------------------
# Streaming statistics
# ---------------------------------------

def test_running_stats_matches_numpy_two_pass():
    rng = np.random.default_rng(0)
    values = rng.lognormal(size=1_000_000)
    acc = RunningStats()
    for chunk in np.array_split(values, 100):
        part = RunningStats()
        for v in chunk:
            part.add(v)
        acc = acc.merge(part)
    assert acc.count == values.size
    assert acc.mean == pytest.approx(values.mean(), rel=1e-9)
    assert acc.variance == pytest.approx(values.var(ddof=1), rel=1e-9)


def test_running_stats_skips_nan():
    acc = RunningStats()
    for v in (1.0, math.nan, 3.0):
        acc.add(v)
    assert acc.count == 2
    assert acc.mean == pytest.approx(2.0)


def test_pairwise_reduce_is_order_deterministic():
    leaves = []
    rng = np.random.default_rng(1)
    for v in rng.random(37):
        leaf = RunningStats()
        leaf.add(float(v))
        leaves.append(leaf)
    a = pairwise_reduce(list(leaves), RunningStats.merge)
    b = pairwise_reduce(list(leaves), RunningStats.merge)
    assert a.mean == b.mean and a.m2 == b.m2  # bitwise, not approx


def test_pairwise_reduce_empty_rejected():
    with pytest.raises(ParameterError):
        pairwise_reduce([], RunningStats.merge)


def test_wilson_interval():
    center, half = wilson_interval(50, 100)
    assert center == pytest.approx(0.5, abs=1e-12)
    assert 0.0 < half < 0.1
    c0, h0 = wilson_interval(0, 100)
    assert c0 > 0.0  # shrinkage away from the boundary


# ---------------------------------------
# Seeding
# ---------------------------------------

def test_sample_rng_streams_are_stable_and_distinct():
    a = sample_rng(42, 3).random(4)
    b = sample_rng(42, 3).random(4)
    c = sample_rng(42, 4).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


# ---------------------------------------
# Config
# ---------------------------------------

def test_config_json_round_trip():
    cfg = _config(workers=2)
    back = ExperimentConfig.from_json(cfg.to_json())
    assert back == cfg
    assert back.run_id() == cfg.run_id()


def test_config_rejects_unknown_keys():
    with pytest.raises(ParameterError):
        ExperimentConfig.from_json({"n": 2, "depth": 1, "samples": 100,
                                    "bogus": True})


@pytest.mark.parametrize("kw", [
    {"samples": 10}, {"n": 0}, {"n": 13}, {"seed": -1},
    {"targets": ("nope",)}, {"alpha": 0.0}])
def test_config_validation(kw):
    with pytest.raises(ParameterError):
        _config(**kw)


def test_bitstring_selectors():
    cfg = _config(n=4, bitstrings="hamming_ge_half")
    strings = cfg.bitstring_list()
    assert all(s.count("1") >= 2 for s in strings)
    assert len(strings) == 11
    cfg = _config(bitstrings=["01", 2])
    assert cfg.bitstring_list() == ["01", "10"]


# ---------------------------------------
# Experiment runner
# ---------------------------------------

def test_run_experiment_references_within_tolerance():
    cfg = _config(samples=2000, targets=("p_x", "collision", "z"))
    records = run_experiment(cfg)
    by_name = {}
    for rec in records:
        by_name.setdefault(rec.estimator, []).append(rec)
    assert len(by_name["p_x"]) == 4
    for rec in by_name["p_x"]:
        assert rec.reference is not None
        assert abs(rec.value - rec.reference) <= 5 * rec.std_error
    (z_rec,) = by_name["z"]
    assert z_rec.bound is not None
    assert z_rec.reference == pytest.approx(
        4 * by_name["collision"][0].reference - 1, abs=1e-12)


def test_run_experiment_worker_invariance():
    cfg = _config(samples=300, targets=("p_x", "collision"))
    csv_one = rows_to_csv(records_to_rows(run_experiment(cfg), cfg))
    cfg_many = _config(samples=300, targets=("p_x", "collision"), workers=3)
    csv_many = rows_to_csv(records_to_rows(run_experiment(cfg_many), cfg))
    assert csv_one == csv_many


def test_csv_format():
    cfg = _config(targets=("p_x", "collision"))
    rows = records_to_rows(run_experiment(cfg), cfg)
    text = rows_to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    first = lines[1].split(",")
    assert len(first) == len(CSV_COLUMNS)
    # floats are emitted with %.17g so they round-trip exactly
    value = float(first[CSV_COLUMNS.index("value")])
    assert format(value, ".17g") == first[CSV_COLUMNS.index("value")]
    # per-ensemble estimators carry the '-' bitstring placeholder
    collision_line = next(l for l in lines if ",collision," in l)
    parts = collision_line.split(",")
    assert parts[CSV_COLUMNS.index("bitstring")] == "-"
    # bound is unset for the raw collision estimator: empty field
    assert parts[CSV_COLUMNS.index("bound")] == ""


def test_sidecar_json():
    cfg = _config()
    meta = json.loads(sidecar_json(cfg))
    assert meta["version"] == ARTIFACT_VERSION
    assert meta["config"]["n"] == 2
    assert meta["config"]["seed"] == 5


# ---------------------------------------
# Tail and lightcone estimators
# ---------------------------------------

def test_estimate_tail_bound_and_verdict():
    cfg = _config(n=4, depth=4, samples=300,
                  channel={"kind": "amp_then_dep", "q": 0.3, "p": 0.1},
                  bitstrings=["1111"])
    rec = estimate_tail(cfg, "1111")
    assert 0.0 <= rec.value <= 1.0
    assert rec.bound is not None
    assert rec.verdict == "pass"


def test_estimate_logprob_stats_exact_permutation_average():
    cfg = _config(n=2, depth=2, samples=300)
    records = estimate_logprob_stats(cfg, "10")
    names = {rec.estimator for rec in records}
    assert {"mean_neg_log_p", "var_neg_log_p", "a_sigma_mean",
            "exclusion_rate"} <= names
    a_rec = next(r for r in records if r.estimator == "a_sigma_mean")
    # E[A] = 2 w_x r - n r with r = 0.2, n = 2, w_x = 1
    assert a_rec.reference == pytest.approx(0.0, abs=1e-12)
    assert abs(a_rec.value - a_rec.reference) <= 5 * a_rec.std_error
    excl = next(r for r in records if r.estimator == "exclusion_rate")
    assert excl.value <= 0.1


def test_estimate_logprob_stats_size_limit():
    cfg = _config(n=10, depth=1, samples=100, bitstrings="hamming_ge_half",
                  layout="parallel")
    with pytest.raises(ParameterError):
        estimate_logprob_stats(cfg, "1" * 10)


# ---------------------------------------
# Verification suite plumbing
# ---------------------------------------

def test_verify_suite_unknown_id():
    with pytest.raises(ParameterError):
        verify_suite("nonsense")


def test_verify_suite_ids_complete():
    assert len(SUITES) == 9


def test_verify_suite_quick_pass():
    rows, ok = verify_suite("uniform_identity", samples=25)
    assert ok
    assert all(row["verdict"] in ("pass", "na") for row in rows)
