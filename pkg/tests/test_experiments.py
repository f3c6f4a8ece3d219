from dataclasses import replace

import numpy as np
import pytest

from fixtures import fake_corn, fake_gas
from mida import dataio, experiments
from mida.dataio import ConfigError, parse_config


def gas_cfg(**model):
    text = '[data]\nsource = "gas"\n[kernel]\nfamily = "polynomial"\n[protocol]\nname = "gas"\n'
    cfg = parse_config(text)
    return replace(cfg, model=replace(cfg.model, h=8, **model))


CORN = ('[data]\nsource = "corn"\n[kernel]\nfamily = "rbf"\nsigma = 1.0\n[model]\nh = 10\n'
        '[predictor]\nkind = "ridge"\n[metric]\nkind = "rmse"\n[protocol]\nname = "corn"\n')


def test_transfer_rows_and_sweep():
    cfg = parse_config('[data]\nscenario = "fig1"\nn = 30\n')
    rows, models = experiments.run_transfer(cfg)
    assert [r[:2] for r in rows] == [("target", "accuracy")]
    assert models[0]["h"] == 2
    swept = replace(cfg, protocol=replace(cfg.protocol, sweep_h=[1, 2]))
    rows2, _ = experiments.run_transfer(swept)
    assert [r[0] for r in rows2] == ["target@h=1", "target@h=2"]
    assert rows2[1][2] == rows[0][2]  # truncation == direct fit at the top h


@pytest.mark.parametrize("method", ["none", "kpca", "mida", "smida"])
def test_transfer_methods(method):
    cfg = parse_config(f'[data]\nscenario = "fig3"\nn = 20\n[model]\nmethod = "{method}"\n'
                       f'gamma = {2.0 if method == "smida" else 0.0}\n')
    rows, _ = experiments.run_transfer(cfg)
    assert 0.0 <= rows[0][2] <= 1.0


def test_transfer_f1_metric():
    cfg = parse_config('[data]\nscenario = "fig1"\nn = 20\n[metric]\nkind = "f1"\n')
    rows, _ = experiments.run_transfer(cfg)
    assert rows[0][1] == "f1" and 0.0 < rows[0][2] <= 1.0


def test_gas_layout():
    table = fake_gas()
    for variant in ("continuous", "discrete"):
        cfg = gas_cfg()
        cfg = replace(cfg, protocol=replace(cfg.protocol, variant=variant))
        rows, models = experiments.run_gas(cfg, table)
        assert [r[0] for r in rows] == [f"batch{b}" for b in range(2, 11)] + ["average"]
        assert rows[-1][2] == pytest.approx(np.mean([r[2] for r in rows[:-1]]))
        assert len(models) == 9


def test_gas_pool_is_capped():
    table = dataio.zscore_per_batch(fake_gas(per_batch=24))
    table = table.subset(np.concatenate([np.flatnonzero(table.batch == 1)[:6], np.flatnonzero(table.batch > 1)]))
    cfg = gas_cfg()
    pool, _ = experiments._gas_pool(cfg, table, 5, 6)
    assert np.sum(pool.batch == 1) == 6
    assert np.sum(pool.batch > 1) == 12
    assert set(np.unique(pool.batch[pool.batch > 1])) <= {2, 3, 4, 5}
    disc = replace(cfg, protocol=replace(cfg.protocol, variant="discrete"))
    pool, _ = experiments._gas_pool(disc, table, 5, 6)
    assert set(np.unique(pool.batch)) == {1, 5}
    with pytest.raises(ConfigError):
        experiments._gas_pool(replace(cfg, protocol=replace(cfg.protocol, variant="weekly")), table, 5, 6)


def test_gas_deterministic():
    table = fake_gas()
    cfg = gas_cfg(method="smida", gamma=1.0)
    assert experiments.run_gas(cfg, table) == experiments.run_gas(cfg, table)


@pytest.mark.parametrize("variant", ["single", "multi", "train-on-target"])
def test_corn_layout(variant):
    cfg = parse_config(CORN + f'variant = "{variant}"\n')
    rows, _ = experiments.run_corn(cfg, fake_corn())
    names = [r[0] for r in rows]
    props = ["moisture", "oil", "protein", "starch", "average"]
    assert names == [f"{t}/{p}" for t in ("mp5", "mp6") for p in props]
    assert all(r[1] == "rmse" and r[2] >= 0 for r in rows)


def test_corn_smida_and_none():
    data = fake_corn()
    none = parse_config(CORN.replace("h = 10", 'method = "none"'))
    smida = parse_config(CORN.replace("h = 10", 'method = "smida"\ngamma = 1.0\nh = 10'))
    raw = dict((r[0], r[2]) for r in experiments.run_corn(none, data)[0])
    sm = dict((r[0], r[2]) for r in experiments.run_corn(smida, data)[0])
    assert raw.keys() == sm.keys()
    with pytest.raises(ConfigError):
        experiments.run_corn(replace(none, protocol=replace(none.protocol, targets=["m5"])), data)


def test_grid_search_picks_best_and_reports_trials():
    cfg = parse_config('[data]\nscenario = "fig1"\nn = 20\n[grid]\nh = [1, 2]\nmu = [0.1, 10.0]\n')
    report = experiments.run_experiment(cfg)
    grid = report["grid"]
    assert len(grid) == 4
    best = max(grid, key=lambda t: t["score"])
    assert report["selected"]["h"] == best["h"] and report["selected"]["mu"] == best["mu"]


def test_corn_grid_uses_cv():
    cfg = parse_config(CORN + '[grid]\nh = [2, 5]\nsigma = [0.5, 2.0]\n')
    best, trials = experiments.grid_search(cfg, fake_corn())
    assert {t["selection"] for t in trials} == {"cv3"}
    pick = min(trials, key=lambda t: t["score"])
    assert (best.model.h, best.kernel.sigma) == (pick["h"], pick["sigma"])


def test_report_reproducible_except_timing():
    cfg = parse_config('[data]\nscenario = "fig2"\nn = 20\n[encoding]\nscheme = "batch-index"\nsize = 1\n')
    a, b = experiments.run_experiment(cfg), experiments.run_experiment(cfg)
    a.pop("timing"), b.pop("timing")
    assert a == b
    assert a["config"]["model"]["mu"] == 1.0  # defaults are materialised


def test_default_grid_declared():
    g = experiments.DEFAULT_GRID
    assert g["h"] == list(range(2, 61))
    assert g["mu"] == [0.1, 1.0, 10.0] and g["gamma"] == [0.1, 1.0, 10.0]
    assert g["sigma"] == [0.5, 1.0, 2.0, 5.0, 10.0]
