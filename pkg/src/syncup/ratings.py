"""Human-rating datasets: aggregation, CSV interchange and cross-validation.

Raters score frames on a five-level scale mapped to {1, 0.75, 0.5, 0.25, 0};
per frame, ratings beyond three standard deviations from the mean are
dropped once and the survivors' mean becomes the label. Evaluation uses
leave-one-source-out cross-validation pooled over held-out predictions.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import SingleSource, TooFewRatings, TooFewSamples
from .metrics import pearson_r, rmse
from .regressors import (
    NN_ARCHS,
    RegressorModel,
    make_addition_model,
    train_nn,
    train_svr,
)

RATING_SCALE = {
    "Excellent": 1.0,
    "Good": 0.75,
    "Fair": 0.5,
    "Poor": 0.25,
    "Very Bad": 0.0,
}

MIN_RATINGS_PER_FRAME = 3


@dataclass(frozen=True)
class RatingSample:
    bpd: np.ndarray      # (13,)
    rating: float        # mean human rating in [0, 1]
    source_id: str


@dataclass(frozen=True)
class RatingDataset:
    samples: tuple[RatingSample, ...]

    def __post_init__(self):
        for s in self.samples:
            if not 0.0 <= s.rating <= 1.0:
                raise ValueError(f"rating {s.rating} outside [0, 1]")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def x(self) -> np.ndarray:
        return np.stack([s.bpd for s in self.samples])

    @property
    def y(self) -> np.ndarray:
        return np.array([s.rating for s in self.samples])

    @property
    def sources(self) -> tuple[str, ...]:
        return tuple(s.source_id for s in self.samples)

    def source_ids(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for s in self.samples:
            seen.setdefault(s.source_id, None)
        return tuple(seen)


@dataclass(frozen=True)
class CvResult:
    method: str
    rmse: float
    pearson: float
    p_value: float
    n_folds: int
    n_samples: int


def aggregate_ratings(raw: Sequence[Sequence[float]]) -> tuple[float, ...]:
    """Per-frame label: 3-SD outlier removal (single pass), then the mean.

    Each inner sequence holds one frame's numeric ratings, already mapped
    from the verbal scale. Requires at least MIN_RATINGS_PER_FRAME each.
    """
    labels = []
    for i, ratings in enumerate(raw):
        arr = np.asarray(ratings, dtype=float)
        if len(arr) < MIN_RATINGS_PER_FRAME:
            raise TooFewRatings(f"frame {i} has {len(arr)} ratings; need >= {MIN_RATINGS_PER_FRAME}")
        mean = arr.mean()
        sd = arr.std()
        # Chebyshev guarantees survivors: at most 1/9 of points sit beyond 3 SD.
        keep = np.abs(arr - mean) <= 3.0 * sd
        labels.append(float(arr[keep].mean()))
    return tuple(labels)


def save_ratings_csv(data: RatingDataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["source_id", "frame"] + [f"bpd_{i}" for i in range(1, 14)] + ["rating"])
    for frame, s in enumerate(data.samples):
        writer.writerow([s.source_id, frame] + [repr(float(v)) for v in s.bpd] + [repr(float(s.rating))])
    return buf.getvalue()


def load_ratings_csv(text: str) -> RatingDataset:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    expected = ["source_id", "frame"] + [f"bpd_{i}" for i in range(1, 14)] + ["rating"]
    if [h.strip() for h in header] != expected:
        raise ValueError(f"unexpected ratings header {header}")
    samples = []
    for row in reader:
        if not row:
            continue
        samples.append(RatingSample(
            bpd=np.array([float(v) for v in row[2:15]]),
            rating=float(row[15]),
            source_id=row[0],
        ))
    return RatingDataset(samples=tuple(samples))


def train_method(method: str, x: np.ndarray, y: np.ndarray, *, lam: float,
                 seed: int = 0, **hyper) -> RegressorModel:
    if method == "addition":
        return make_addition_model(lam)
    if method == "svr":
        return train_svr(x, y, lam=lam, seed=seed, **hyper)
    if method in NN_ARCHS:
        return train_nn(x, y, arch=method, lam=lam, seed=seed, **hyper)
    raise ValueError(f"unknown method {method!r}")


def cross_validate(data: RatingDataset, methods: Iterable[str], *, lam: float,
                   seed: int = 0, hyper: dict | None = None) -> dict[str, CvResult]:
    """Leave-one-source-out CV; pooled RMSE and Pearson r per method."""
    sources = data.source_ids()
    if len(sources) < 2:
        raise SingleSource(f"need >= 2 distinct source_ids, got {len(sources)}")
    hyper = hyper or {}

    x = data.x
    y = data.y
    src = np.array(data.sources)
    results = {}
    for method in methods:
        preds = np.empty(len(data))
        for held_out in sources:
            test_mask = src == held_out
            if method == "addition":
                model = make_addition_model(lam)
            else:
                x_tr, y_tr = x[~test_mask], y[~test_mask]
                if len(x_tr) < MIN_RATINGS_PER_FRAME:
                    raise TooFewSamples("fold too small to train")
                model = train_method(method, x_tr, y_tr, lam=lam, seed=seed,
                                     **hyper.get(method, {}))
            preds[test_mask] = np.clip(model.predict(x[test_mask]), 0.0, 1.0)
        r, p = pearson_r(preds, y)
        results[method] = CvResult(
            method=method,
            rmse=rmse(preds, y),
            pearson=r,
            p_value=p,
            n_folds=len(sources),
            n_samples=len(data),
        )
    return results
