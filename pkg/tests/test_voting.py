from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lfselect.errors import TooFewSamples
from lfselect.voting import CalibrationCurve, fit_curve, pav, rank, vote

KINDS = ("RF", "KNN", "NB", "LD")


def flat_curve(kind, value, val_acc=0.5):
    return CalibrationCurve(kind, np.array([0.0, 1.0]), np.array([value, value]), np.array([0.0, 1.0]),
                            np.array([value]), np.array([10]), val_acc)


def identity_curve(kind, val_acc=0.5):
    return CalibrationCurve(kind, np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.array([0.0, 1.0]),
                            np.array([0.5]), np.array([10]), val_acc)


def onehot(m, top=1.0):
    s = np.full(10, (1 - top) / 9)
    s[m - 1] = top
    return s


def test_pav_examples():
    np.testing.assert_allclose(pav([1, 3, 2, 4], [1, 1, 1, 1]), [1, 2.5, 2.5, 4])
    np.testing.assert_allclose(pav([3, 1], [3, 1]), [2.5, 2.5])


def test_always_correct_gives_one():
    s = np.linspace(0.2, 0.9, 100)
    c = fit_curve(s, np.ones(100))
    assert np.all(c(np.linspace(0.2, 0.9, 50)) == 1.0)


def test_constructed_step_recovered():
    s = np.linspace(0.0, 1.0, 1000)
    correct = s > 0.8
    c = fit_curve(s, correct, n_bins=10)
    width = np.max(np.diff(c.bin_edges))
    probes = np.linspace(0, 1, 401)
    h = c(probes)
    far = np.abs(probes - 0.8) > width
    np.testing.assert_allclose(h[far], (probes[far] > 0.8).astype(float), atol=1e-12)


@given(st.lists(st.tuples(st.floats(0, 1), st.booleans()), min_size=50, max_size=300), st.integers(1, 10))
def test_curve_monotone(data, n_bins):
    s = np.array([d[0] for d in data])
    c = np.array([d[1] for d in data])
    if s.size < 5 * n_bins:
        with pytest.raises(TooFewSamples):
            fit_curve(s, c, n_bins)
        return
    curve = fit_curve(s, c, n_bins)
    h = curve(np.linspace(-0.5, 1.5, 1000))
    assert np.all(np.diff(h) >= -1e-12)
    assert np.all((h >= 0) & (h <= 1))


def test_too_few_samples():
    with pytest.raises(TooFewSamples):
        fit_curve(np.linspace(0, 1, 49), np.ones(49), n_bins=10)


def test_vote_unanimous_and_max_rule():
    curves = {k: identity_curve(k) for k in KINDS}
    assert vote({k: onehot(7, 0.6) for k in KINDS}, curves) == 7
    curves = {"RF": flat_curve("RF", 0.9), "KNN": flat_curve("KNN", 0.4),
              "NB": flat_curve("NB", 0.4), "LD": flat_curve("LD", 0.4)}
    scores = {"RF": onehot(2), "KNN": onehot(5), "NB": onehot(6), "LD": onehot(9)}
    assert vote(scores, curves) == 2


def test_hand_evaluated_fixture():
    # h_RF(s) = s, h_KNN = 0.3 flat, h_NB(s) = s/2, h_LD = 0.55 flat
    curves = {"RF": identity_curve("RF", 0.4), "KNN": flat_curve("KNN", 0.3, 0.3),
              "NB": CalibrationCurve("NB", np.array([0.0, 1.0]), np.array([0.0, 0.5]), np.array([0.0, 1.0]),
                                     np.array([0.25]), np.array([10]), 0.2),
              "LD": flat_curve("LD", 0.55, 0.45)}
    scores = {
        "RF": np.array([0.5, 0.1, 0, 0, 0, 0, 0, 0.4, 0, 0]),  # nominates 1, eta 0.5
        "KNN": onehot(3),  # nominates 3, eta 0.3
        "NB": np.array([0, 0, 0, 0, 0.9, 0.1, 0, 0, 0, 0]),  # nominates 5, eta 0.45
        "LD": np.array([0, 0, 0, 0, 0, 0, 0.3, 0.2, 0.5, 0]),  # nominates 9, eta 0.55
    }
    assert vote(scores, curves) == 9
    rec = rank(scores, curves, 10)
    # A(b) = max over learners: flat LD curve gives 0.55 to every model, RF beats it nowhere (max 0.5)
    assert rec.models[0] == 9
    assert sorted(rec.models) == list(range(1, 11))
    assert all(a == pytest.approx(0.55) for a in rec.accuracy)
    # equal A: ties by the largest raw score across learners, then id
    raw_max = np.max(np.vstack(list(scores.values())), axis=0)
    rest = sorted([b for b in range(1, 11) if b != 9], key=lambda b: (-raw_max[b - 1], b))
    assert list(rec.models[1:]) == rest


def test_rank_matches_brute_force_sort():
    rng = np.random.default_rng(0)
    curves = {k: identity_curve(k, 0.3 + 0.1 * i) for i, k in enumerate(KINDS)}
    for _ in range(50):
        scores = {k: rng.dirichlet(np.ones(10)) for k in KINDS}
        rec = rank(scores, curves, 10)
        A = np.max(np.vstack(list(scores.values())), axis=0)
        w = vote(scores, curves)
        brute = [w] + sorted([b for b in range(1, 11) if b != w], key=lambda b: (-A[b - 1], b))
        assert list(rec.models) == brute
        assert rank(scores, curves, 1).models == (w,)
        top3 = rank(scores, curves, 3)
        assert len(set(top3.models)) == 3
        assert list(top3.accuracy[1:]) == sorted(top3.accuracy[1:], reverse=True)


def test_rank_masks_infeasible():
    curves = {k: identity_curve(k) for k in KINDS}
    scores = {k: onehot(3, 0.7) for k in KINDS}
    mask = np.ones(10, bool)
    mask[2] = False
    rec = rank(scores, curves, 5, mask)
    assert 3 not in rec.models and len(rec.models) == 5
    with pytest.raises(ValueError):
        rank(scores, curves, 11)


def test_curve_round_trip():
    c = fit_curve(np.linspace(0, 1, 100), np.linspace(0, 1, 100) > 0.5, 5, "RF")
    d = CalibrationCurve.from_dict(c.to_dict())
    p = np.linspace(0, 1, 33)
    assert np.array_equal(c(p), d(p))
