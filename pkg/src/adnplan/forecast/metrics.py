"""Forecast quality metrics and the weighted model-selection score.

Per-feature metrics split into accuracy (MAPE, sMAPE, MSA), bias (MPE,
MdLQ, SSPB) and correlation (PLCC), aggregated into three nonnegative
summary numbers and a weighted total used to rank candidate models.
Ratio metrics skip zero-valued observation entries (the skip count is
recorded); log-ratio metrics likewise skip non-positive ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FeatureMetrics:
    mape: float
    smape: float
    msa: float
    mpe: float
    mdlq: float
    sspb: float
    plcc: float
    skipped: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class MetricReport:
    """Aggregated forecast metrics for one model over M features."""

    features: tuple[FeatureMetrics, ...]
    accuracy: float  # mean of (|MAPE| + |sMAPE| + |MSA|) / 3
    bias: float  # mean of (|MPE| + |SSPB|) / 2
    correlation: float  # mean of |100 (1 - PLCC)|
    score: float  # w1 * accuracy + w2 * bias + w3 * correlation
    weights: tuple[float, float, float]
    ks_pvalue: float = math.nan
    ks_passed: bool = True
    n_parameters: int = 0
    label: str = ""


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if np.array_equal(x, y):
        return 1.0  # exact identity, keeps score(x, x) == 0
    sx, sy = np.std(x), np.std(y)
    if sx == 0.0 or sy == 0.0:
        return 0.0  # degenerate constant column against a differing forecast
    r = float(np.corrcoef(x, y)[0, 1])
    if math.isnan(r):
        return 0.0
    return min(1.0, max(-1.0, r))


def feature_metrics(x: np.ndarray, y: np.ndarray) -> FeatureMetrics:
    """Table of error metrics for one observation/forecast column pair."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size == 0:
        raise ValueError("observation and forecast must be equal-length 1-D vectors")
    eps = y - x
    skipped: dict[str, int] = {}

    nz = x != 0.0
    skipped["ratio"] = int(np.sum(~nz))
    if not np.any(nz):
        raise ValueError("all observation entries are zero; ratio metrics undefined")
    mape = 100.0 * float(np.mean(np.abs(eps[nz] / x[nz])))
    mpe = 100.0 * float(np.mean(eps[nz] / x[nz]))

    denom = 0.5 * (x + y)
    ok = denom != 0.0
    skipped["smape"] = int(np.sum(~ok))
    smape = 100.0 * float(np.mean(np.abs(eps[ok]) / denom[ok])) if np.any(ok) else 0.0

    ratio = np.divide(y, x, out=np.full_like(x, np.nan), where=x != 0)
    pos = np.isfinite(ratio) & (ratio > 0)
    skipped["log_ratio"] = int(x.size - np.sum(pos))
    if np.any(pos):
        logq = np.log(ratio[pos])
        mdlq = float(np.median(logq))
        msa = 100.0 * (math.exp(float(np.median(np.abs(logq)))) - 1.0)
        sspb = 100.0 * math.copysign(1.0, mdlq) * (math.exp(abs(mdlq)) - 1.0) if mdlq else 0.0
    else:
        mdlq, msa, sspb = 0.0, 0.0, 0.0

    return FeatureMetrics(
        mape=mape,
        smape=smape,
        msa=msa,
        mpe=mpe,
        mdlq=mdlq,
        sspb=sspb,
        plcc=_pearson(x, y),
        skipped=skipped,
    )


def forecast_metrics(
    observation: np.ndarray,
    forecast: np.ndarray,
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> MetricReport:
    """Score a forecast against observations, column = feature.

    1-D inputs are treated as a single feature.  The default unit weights
    add the three aggregates without preference.
    """
    x = np.atleast_2d(np.asarray(observation, dtype=float).T).T
    y = np.atleast_2d(np.asarray(forecast, dtype=float).T).T
    if x.shape != y.shape:
        raise ValueError("observation and forecast shapes differ")
    feats = tuple(feature_metrics(x[:, m], y[:, m]) for m in range(x.shape[1]))
    acc = float(np.mean([(abs(f.mape) + abs(f.smape) + abs(f.msa)) / 3.0 for f in feats]))
    bias = float(np.mean([(abs(f.mpe) + abs(f.sspb)) / 2.0 for f in feats]))
    corr = float(np.mean([abs(100.0 * (1.0 - f.plcc)) for f in feats]))
    w1, w2, w3 = weights
    return MetricReport(
        features=feats,
        accuracy=acc,
        bias=bias,
        correlation=corr,
        score=w1 * acc + w2 * bias + w3 * corr,
        weights=(w1, w2, w3),
    )


# --- two-sample Kolmogorov-Smirnov test -----------------------------------


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    passed: bool


def _kolmogorov_sf(lam: float) -> float:
    """Survival function of the Kolmogorov distribution (asymptotic)."""
    if lam < 1e-8:
        return 1.0
    total = 0.0
    for k in range(1, 101):
        term = 2.0 * (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
        total += term
        if abs(term) < 1e-12:
            break
    return min(max(total, 0.0), 1.0)


def ks_two_sample(x: np.ndarray, y: np.ndarray, significance: float = 0.05) -> KsResult:
    """Two-sample KS test; the null passes when p >= significance.

    Uses the asymptotic p-value with the small-sample correction
    lam = (sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) * D, ne = n1 n2 / (n1 + n2).
    """
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    if x.size == 0 or y.size == 0:
        raise ValueError("both samples must be nonempty")
    grid = np.concatenate([x, y])
    cdf_x = np.searchsorted(x, grid, side="right") / x.size
    cdf_y = np.searchsorted(y, grid, side="right") / y.size
    stat = float(np.max(np.abs(cdf_x - cdf_y)))
    ne = math.sqrt(x.size * y.size / (x.size + y.size))
    p = _kolmogorov_sf((ne + 0.12 + 0.11 / ne) * stat)
    return KsResult(statistic=stat, p_value=p, passed=p >= significance)


class NoAdmissibleModelError(RuntimeError):
    """No candidate model passed the goodness-of-fit gate."""


def select_dominant(
    labels: list[str],
    reports: list[MetricReport],
    parsimony_band: float = 0.05,
) -> int:
    """Index of the dominant model among KS-passing candidates.

    Primary rule: smallest weighted score among models passing the KS
    gate.  Candidates whose score lies within `parsimony_band` (relative,
    with a small absolute floor) of the best are considered tied; ties go
    to the model with the fewest parameters, then to the earlier label.
    """
    if not reports:
        raise NoAdmissibleModelError("no candidate models")
    admissible = [k for k, rep in enumerate(reports) if rep.ks_passed]
    if not admissible:
        raise NoAdmissibleModelError(
            "no model passed the two-sample Kolmogorov-Smirnov gate"
        )
    best = min(reports[k].score for k in admissible)
    band = max(parsimony_band * abs(best), 1e-9)
    tied = [k for k in admissible if reports[k].score <= best + band]
    tied.sort(key=lambda k: (reports[k].n_parameters, labels[k]))
    return tied[0]
