"""Evaluation metrics and plot artifacts: RMSE/R2/MAE, 45-degree point sets
with a spread scalar, prediction-difference histograms, and the cross-model
comparison report."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class RegressionMetrics:
    rmse: float
    mae: float
    r2: float | None  # None when the target variance is zero

    @property
    def r2_defined(self) -> bool:
        return self.r2 is not None


def metrics(y_true: np.ndarray, y_pred: np.ndarray) -> RegressionMetrics:
    """rmse = sqrt(mean squared error); mae = mean |error|;
    r2 = 1 - SSE/SST with SST about the mean of y_true."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.shape != y_pred.shape or y_true.size == 0:
        raise ValueError("y_true and y_pred must be equal-length and nonempty")
    err = y_pred - y_true
    rmse = float(np.sqrt(np.mean(err * err)))
    mae = float(np.mean(np.abs(err)))
    sst = float(np.sum((y_true - y_true.mean()) ** 2))
    if y_true.size < 2 or sst == 0.0:
        r2 = None
    else:
        r2 = 1.0 - float(np.sum(err * err)) / sst
    return RegressionMetrics(rmse=rmse, mae=mae, r2=r2)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray  # length n_bins + 1 (or 2 for the degenerate case)
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def prediction_difference_histogram(
    y_true: np.ndarray, y_pred: np.ndarray, n_bins: int = 50
) -> Histogram:
    """Histogram of differences y_true - y_pred over equal-width bins;
    bins are left-closed, the last bin right-closed."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    diffs = y_true - y_pred
    lo, hi = float(diffs.min()), float(diffs.max())
    # collapse ranges float64 cannot slice into n_bins finite bins
    if hi - lo <= np.spacing(max(abs(lo), abs(hi), 1e-300)) * n_bins:
        return Histogram(
            edges=np.array([lo, hi]), counts=np.array([diffs.size], dtype=np.int64)
        )
    counts, edges = np.histogram(diffs, bins=n_bins, range=(lo, hi))
    return Histogram(edges=edges, counts=counts.astype(np.int64))


@dataclass(frozen=True)
class FortyFiveDegreeData:
    y_true: np.ndarray
    y_pred: np.ndarray
    spread: float  # RMS perpendicular distance to the identity line


def forty_five_degree_data(
    y_true: np.ndarray, y_pred: np.ndarray
) -> FortyFiveDegreeData:
    """Paired points plus their RMS perpendicular distance to y = x."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred must be equal-length")
    perp = (y_pred - y_true) / np.sqrt(2.0)
    spread = float(np.sqrt(np.mean(perp * perp)))
    return FortyFiveDegreeData(y_true=y_true, y_pred=y_pred, spread=spread)


@dataclass(frozen=True)
class ModelEvaluation:
    family: str
    train: RegressionMetrics
    test: RegressionMetrics
    fortyfive_train: FortyFiveDegreeData
    fortyfive_test: FortyFiveDegreeData
    diff_histogram: Histogram  # test-split differences


@dataclass(frozen=True)
class EvaluationReport:
    entries: tuple[ModelEvaluation, ...]
    ranking: tuple[str, ...]  # families by ascending test RMSE
    n_train: int
    n_test: int
    unseen_categories: dict[str, int]

    def entry(self, family: str) -> ModelEvaluation:
        for e in self.entries:
            if e.family == family:
                return e
        raise KeyError(family)

    def to_json_dict(self) -> dict:
        return {
            "ranking": list(self.ranking),
            "n_train": self.n_train,
            "n_test": self.n_test,
            "unseen_categories": dict(self.unseen_categories),
            "models": {
                e.family: {
                    "train_rmse": e.train.rmse,
                    "test_rmse": e.test.rmse,
                    "train_r2": e.train.r2,
                    "test_r2": e.test.r2,
                    "test_mae": e.test.mae,
                    "spread_train": e.fortyfive_train.spread,
                    "spread_test": e.fortyfive_test.spread,
                }
                for e in self.entries
            },
        }


def comparison_report(
    models: Sequence,
    train_matrix: np.ndarray,
    train_targets: np.ndarray,
    test_matrix: np.ndarray,
    test_targets: np.ndarray,
    fingerprint: str | None = None,
    unseen_categories: dict[str, int] | None = None,
    n_bins: int = 50,
) -> EvaluationReport:
    """Evaluate fitted models on both splits and rank by test RMSE.

    Every model must carry the fingerprint of the datasets' column layout.
    """
    entries = []
    for model in models:
        if fingerprint is not None and model.fingerprint != fingerprint:
            raise ValueError(
                f"model {model.family} was fitted on a different column "
                f"layout (fingerprint {model.fingerprint} != {fingerprint})"
            )
        pred_train = model.predict(train_matrix)
        pred_test = model.predict(test_matrix)
        m_train = metrics(train_targets, pred_train)
        m_test = metrics(test_targets, pred_test)
        assert m_train.rmse >= m_train.mae - 1e-12
        assert m_test.rmse >= m_test.mae - 1e-12
        hist = prediction_difference_histogram(test_targets, pred_test, n_bins)
        assert hist.total == len(test_targets)
        entries.append(
            ModelEvaluation(
                family=model.family,
                train=m_train,
                test=m_test,
                fortyfive_train=forty_five_degree_data(train_targets, pred_train),
                fortyfive_test=forty_five_degree_data(test_targets, pred_test),
                diff_histogram=hist,
            )
        )
    ranking = tuple(
        e.family for e in sorted(entries, key=lambda e: e.test.rmse)
    )
    return EvaluationReport(
        entries=tuple(entries),
        ranking=ranking,
        n_train=len(train_targets),
        n_test=len(test_targets),
        unseen_categories=dict(unseen_categories or {}),
    )


def write_forty_five_csv(data: FortyFiveDegreeData, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y_true", "y_pred"])
        for t, p in zip(data.y_true, data.y_pred):
            writer.writerow([repr(float(t)), repr(float(p))])


def write_histogram_csv(hist: Histogram, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "count"])
        if len(hist.edges) == 2 and len(hist.counts) == 1:
            writer.writerow(
                [repr(float(hist.edges[0])), repr(float(hist.edges[1])), int(hist.counts[0])]
            )
            return
        for i, count in enumerate(hist.counts):
            writer.writerow(
                [repr(float(hist.edges[i])), repr(float(hist.edges[i + 1])), int(count)]
            )


def _svg_header(width: int, height: int) -> str:
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
    )


def write_forty_five_svg(
    data: FortyFiveDegreeData, path, title: str, max_points: int = 2000
) -> None:
    """Self-contained scatter with the 45-degree reference line."""
    side, margin = 480, 48
    lo = min(float(data.y_true.min()), float(data.y_pred.min()))
    hi = max(float(data.y_true.max()), float(data.y_pred.max()))
    if hi == lo:
        hi = lo + 1.0
    span = hi - lo

    def sx(v: float) -> float:
        return margin + (v - lo) / span * (side - 2 * margin)

    def sy(v: float) -> float:
        return side - margin - (v - lo) / span * (side - 2 * margin)

    parts = [_svg_header(side, side)]
    parts.append(
        f'<text x="{side/2:.1f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{title}</text>\n'
    )
    parts.append(
        f'<line x1="{sx(lo):.2f}" y1="{sy(lo):.2f}" x2="{sx(hi):.2f}" '
        f'y2="{sy(hi):.2f}" stroke="#888" stroke-dasharray="4 3"/>\n'
    )
    step = max(1, len(data.y_true) // max_points)
    for t, p in zip(data.y_true[::step], data.y_pred[::step]):
        parts.append(
            f'<circle cx="{sx(float(t)):.2f}" cy="{sy(float(p)):.2f}" '
            f'r="1.6" fill="#1f6fb2" fill-opacity="0.45"/>\n'
        )
    parts.append(
        f'<text x="{side/2:.1f}" y="{side - 10}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="11">actual days '
        f'(spread {data.spread:.3f})</text>\n'
    )
    parts.append("</svg>\n")
    with open(path, "w") as fh:
        fh.write("".join(parts))


def write_histogram_svg(hist: Histogram, path, title: str) -> None:
    width, height, margin = 480, 320, 40
    counts = hist.counts
    peak = max(int(counts.max()), 1)
    n = len(counts)
    bar_w = (width - 2 * margin) / n
    parts = [_svg_header(width, height)]
    parts.append(
        f'<text x="{width/2:.1f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{title}</text>\n'
    )
    for i, count in enumerate(counts):
        h = (height - 2 * margin) * int(count) / peak
        x = margin + i * bar_w
        parts.append(
            f'<rect x="{x:.2f}" y="{height - margin - h:.2f}" '
            f'width="{bar_w:.2f}" height="{h:.2f}" fill="#1f6fb2"/>\n'
        )
    lo, hi = float(hist.edges[0]), float(hist.edges[-1])
    parts.append(
        f'<text x="{margin}" y="{height - 12}" font-family="sans-serif" '
        f'font-size="11">{lo:.1f}</text>\n'
    )
    parts.append(
        f'<text x="{width - margin}" y="{height - 12}" text-anchor="end" '
        f'font-family="sans-serif" font-size="11">{hi:.1f}</text>\n'
    )
    parts.append("</svg>\n")
    with open(path, "w") as fh:
        fh.write("".join(parts))
