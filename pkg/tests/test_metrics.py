"""Metric suite and KS test checks, including hand-computed fixed pairs."""

from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from adnplan.forecast.metrics import (
    MetricReport,
    NoAdmissibleModelError,
    feature_metrics,
    forecast_metrics,
    ks_two_sample,
    select_dominant,
)


def test_perfect_forecast_is_all_zero():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    rep = forecast_metrics(x, x)
    f = rep.features[0]
    assert f.mape == f.smape == f.msa == f.mpe == f.sspb == 0.0
    assert f.plcc == 1.0
    assert rep.correlation == 0.0
    assert rep.score == 0.0


def test_double_forecast_hand_values():
    x = np.ones(4)
    y = 2 * np.ones(4)
    f = feature_metrics(x, y)
    assert f.mape == pytest.approx(100.0, abs=1e-12)
    assert f.mpe == pytest.approx(100.0, abs=1e-12)
    assert f.mdlq == pytest.approx(math.log(2.0), abs=1e-12)
    assert f.sspb == pytest.approx(100.0, abs=1e-12)
    assert f.msa == pytest.approx(100.0, abs=1e-12)
    # sMAPE with |eps|: 100 * 1 / 1.5
    assert f.smape == pytest.approx(200.0 / 3.0, abs=1e-12)


def test_unit_weights_add_aggregates():
    rng = np.random.default_rng(0)
    x = rng.random(50) + 0.5
    y = x + 0.1 * rng.random(50)
    rep = forecast_metrics(x, y, weights=(1.0, 1.0, 1.0))
    assert rep.score == pytest.approx(rep.accuracy + rep.bias + rep.correlation)


def test_weighted_score_identity():
    rng = np.random.default_rng(1)
    x = rng.random(40) + 1.0
    y = x * 1.2
    rep = forecast_metrics(x, y, weights=(2.0, 0.5, 3.0))
    assert rep.score == pytest.approx(
        2.0 * rep.accuracy + 0.5 * rep.bias + 3.0 * rep.correlation
    )


def test_zero_observations_are_skipped_and_counted():
    x = np.array([0.0, 1.0, 2.0])
    y = np.array([0.5, 1.0, 2.0])
    f = feature_metrics(x, y)
    assert f.skipped["ratio"] == 1
    assert f.mape == 0.0


def test_all_zero_observations_rejected():
    with pytest.raises(ValueError, match="zero"):
        feature_metrics(np.zeros(3), np.ones(3))


def test_smape_symmetric_and_sspb_sign_flips():
    rng = np.random.default_rng(3)
    x = rng.random(30) + 0.5
    y = x * rng.uniform(1.1, 1.6, size=30)
    fxy = feature_metrics(x, y)
    fyx = feature_metrics(y, x)
    assert fxy.smape == pytest.approx(fyx.smape, rel=1e-12)
    assert fxy.msa == pytest.approx(fyx.msa, rel=1e-12)
    assert fxy.sspb == pytest.approx(-fyx.sspb, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(min_value=0.1, max_value=50.0), min_size=3, max_size=40),
    st.floats(min_value=0.2, max_value=4.0),
)
def test_score_nonnegative_and_zero_on_identity(values, factor):
    x = np.asarray(values)
    rep_same = forecast_metrics(x, x)
    assert rep_same.score == 0.0
    rep = forecast_metrics(x, factor * x)
    assert rep.score >= 0.0
    assert rep.accuracy >= 0.0 and rep.bias >= 0.0 and rep.correlation >= 0.0


class TestKsTwoSample:
    def test_identical_samples_pass(self):
        x = np.arange(20.0)
        res = ks_two_sample(x, x.copy())
        assert res.statistic == 0.0
        assert res.passed

    def test_matches_scipy_statistic_and_pvalue(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=400)
        y = rng.normal(0.1, 1.1, size=350)
        res = ks_two_sample(x, y)
        ref = scipy.stats.ks_2samp(x, y, method="asymp")
        assert res.statistic == pytest.approx(ref.statistic, abs=1e-12)
        assert res.p_value == pytest.approx(ref.pvalue, abs=0.02)

    def test_level_calibration(self):
        rng = np.random.default_rng(11)
        passes = sum(
            ks_two_sample(rng.normal(size=1000), rng.normal(size=1000)).passed
            for _ in range(100)
        )
        assert passes >= 90

    def test_power_against_shifted_mean(self):
        rng = np.random.default_rng(13)
        res = ks_two_sample(rng.normal(0, 1, 1000), rng.normal(5, 1, 1000))
        assert not res.passed

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            ks_two_sample(np.array([]), np.array([1.0]))


def _report(score, ks=True, params=10, label=""):
    return MetricReport(
        features=(),
        accuracy=score,
        bias=0.0,
        correlation=0.0,
        score=score,
        weights=(1, 1, 1),
        ks_passed=ks,
        n_parameters=params,
        label=label,
    )


class TestSelectDominant:
    def test_single_passing_model(self):
        assert select_dominant(["a"], [_report(3.0)]) == 0

    def test_argmin_of_passing(self):
        reports = [_report(5.1), _report(3.2)]
        assert select_dominant(["a", "b"], reports) == 1

    def test_none_passing_raises(self):
        with pytest.raises(NoAdmissibleModelError):
            select_dominant(["a"], [_report(1.0, ks=False)])

    def test_ks_gate_excludes_better_score(self):
        reports = [_report(1.0, ks=False), _report(4.0)]
        assert select_dominant(["a", "b"], reports) == 1

    def test_parsimony_breaks_near_ties(self):
        reports = [_report(10.0, params=50), _report(10.2, params=5)]
        assert select_dominant(["big", "small"], reports, parsimony_band=0.05) == 1
        # outside the band the raw score wins
        reports = [_report(10.0, params=50), _report(12.0, params=5)]
        assert select_dominant(["big", "small"], reports, parsimony_band=0.05) == 0
