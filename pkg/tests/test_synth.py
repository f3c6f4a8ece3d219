import numpy as np
import pytest

from mida import synth
from mida.predict import fit_logistic, metrics


def gen(kind, seed=0, n=100, **kw):
    return synth.generate(synth.SynthScenario(kind, n, seed, **kw))


@pytest.mark.parametrize("kind", sorted(synth.KINDS))
def test_deterministic_balanced_finite(kind):
    X1, r1, y1 = gen(kind, seed=7)
    X2, r2, y2 = gen(kind, seed=7)
    np.testing.assert_array_equal(X1, X2)
    np.testing.assert_array_equal(y1, y2)
    assert r1 == r2
    assert np.all(np.isfinite(X1))
    assert np.sum(y1 == 0) == np.sum(y1 == 1)
    src = np.array([r.role == "source-labeled" for r in r1])
    assert src.sum() == (~src).sum()
    assert np.sum(y1[src] == 0) == np.sum(y1[src] == 1)
    assert not np.array_equal(gen(kind, seed=8)[0], X1)


def test_sizes():
    assert gen("fig2", n=200)[0].shape == (2, 800)
    assert gen("fig3", n=10)[0].shape == (3, 40)
    with pytest.raises(ValueError):
        synth.SynthScenario("fig5")
    with pytest.raises(ValueError):
        synth.SynthScenario("fig1", n_per_class_per_domain=5)


def test_long_names_accepted():
    assert synth.SynthScenario("nonlinear-shift").kind == synth.SynthScenario("fig4").kind


def test_fig1_domains_are_separable():
    X, recs, _ = gen("fig1")
    dom = np.array([r.device for r in recs])
    clf = fit_logistic(X.T, dom)
    assert metrics(clf.predict(X.T).astype(int), dom) >= 0.9


def test_fig2_drift_tracks_index():
    X, recs, _ = gen("fig2")
    t = np.array([r.time for r in recs])
    assert np.corrcoef(t, X[0] + X[1])[0, 1] >= 0.8
    np.testing.assert_array_equal([r.batch for r in recs], np.arange(1, 401))


@pytest.mark.parametrize("kind", ["fig1", "fig4"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_raw_transfer_is_near_chance(kind, seed):
    X, recs, y = gen(kind, seed=seed)
    src = np.array([r.role == "source-labeled" for r in recs])
    clf = fit_logistic(X[:, src].T, y[src])
    acc = metrics(clf.predict(X[:, ~src].T).astype(int), y[~src])
    assert 0.45 <= acc <= 0.65


def test_table_view():
    t = synth.generate_table(synth.SynthScenario("fig3", 10, 0))
    assert t.columns == ["x1", "x2", "x3"]
    assert set(t.label) == {"0", "1"}
    assert t.n == 40
