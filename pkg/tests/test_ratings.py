import numpy as np
import pytest

from syncup.errors import SingleSource, TooFewRatings
from syncup.pose_similarity import bpd_max
from syncup.ratings import (
    RATING_SCALE,
    RatingDataset,
    RatingSample,
    aggregate_ratings,
    cross_validate,
    load_ratings_csv,
    save_ratings_csv,
)
from syncup.regressors import make_addition_model


def make_dataset(rng, n_sources=16, per_source=15, lam=0.885, labeler=None):
    if labeler is None:
        model = make_addition_model(lam)
        labeler = lambda x: float(np.clip(model.predict(x), 0.0, 1.0))
    samples = []
    for s in range(n_sources):
        for _ in range(per_source):
            x = rng.uniform(0.0, bpd_max(lam), size=13)
            samples.append(RatingSample(bpd=x, rating=labeler(x), source_id=f"src{s:02d}"))
    return RatingDataset(samples=tuple(samples))


def test_rating_scale_mapping():
    assert RATING_SCALE["Excellent"] == 1.0
    assert RATING_SCALE["Very Bad"] == 0.0
    assert sorted(RATING_SCALE.values()) == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_aggregate_zero_variance_keeps_all():
    assert aggregate_ratings([[0.75, 0.75, 0.75]]) == (0.75,)


def test_aggregate_three_sd_rule_hand_computed():
    """Oracle: hand evaluation of the single-pass 3-SD rule.

    20 ratings of 0.75 plus one 0.0: mean 15/21, population SD ~0.1597,
    so the 0.0 deviates by 0.714 > 3 * SD and is removed; survivors mean 0.75.
    """
    ratings = [0.75] * 20 + [0.0]
    arr = np.array(ratings)
    mean, sd = arr.mean(), arr.std()
    assert abs(0.0 - mean) > 3.0 * sd  # the outlier is beyond three SDs
    assert aggregate_ratings([ratings]) == (0.75,)


def test_aggregate_inlier_survives():
    # 5 ratings spread out: nothing beyond 3 SD, label is the plain mean
    ratings = [1.0, 0.75, 0.75, 0.5, 0.25]
    arr = np.array(ratings)
    assert np.all(np.abs(arr - arr.mean()) <= 3 * arr.std())
    assert aggregate_ratings([ratings]) == (pytest.approx(arr.mean()),)


def test_aggregate_requires_three_ratings():
    with pytest.raises(TooFewRatings):
        aggregate_ratings([[0.5, 0.75]])


def test_ratings_csv_round_trip(rng):
    data = make_dataset(rng, n_sources=3, per_source=4)
    restored = load_ratings_csv(save_ratings_csv(data))
    assert len(restored) == len(data)
    for a, b in zip(data.samples, restored.samples):
        np.testing.assert_array_equal(a.bpd, b.bpd)
        assert a.rating == b.rating and a.source_id == b.source_id


def test_cv_requires_two_sources(rng):
    data = make_dataset(rng, n_sources=1)
    with pytest.raises(SingleSource):
        cross_validate(data, ["addition"], lam=0.885)


def test_cv_perfect_predictor(rng):
    """Addition labels scored by the addition method: RMSE 0, r = 1."""
    data = make_dataset(rng, n_sources=4, per_source=10)
    res = cross_validate(data, ["addition"], lam=0.885)["addition"]
    assert res.rmse < 1e-12
    assert res.pearson == pytest.approx(1.0)
    assert res.n_folds == 4


def test_cv_16_fold_addition_self_consistency(rng):
    data = make_dataset(rng, n_sources=16, per_source=12)
    res = cross_validate(data, ["addition"], lam=0.885)["addition"]
    assert res.n_folds == 16
    assert res.rmse < 1e-6
    assert res.pearson > 0.999
    assert res.p_value < 0.05


def test_cv_trains_per_fold(rng):
    data = make_dataset(rng, n_sources=4, per_source=30)
    res = cross_validate(
        data, ["svr"], lam=0.885,
        hyper={"svr": dict(c=20.0, epsilon=0.01, epochs=2000, lr=0.08, lr_decay=0.01)},
    )["svr"]
    assert res.rmse < 0.05
    assert res.pearson > 0.9
