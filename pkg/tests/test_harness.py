import csv
import json
import math
import os
from dataclasses import replace

import numpy as np
import pytest

from rcvar.core import CovarianceSpec, derive_rng, generate_design
from rcvar.errors import ConfigurationError, OutputError
from rcvar.harness import (
    METRIC_COLUMNS,
    ExperimentConfig,
    aggregate,
    emit,
    fit_sweep,
    ingest_csv,
    load_config,
    load_json,
    parse_method,
    preset,
    read_csv_dataset,
    replay,
    run_experiment,
    simulate_dataset,
    sweep_model_size,
)

SMALL = ExperimentConfig(
    "small",
    n=60,
    p=120,
    beta={0: 1.0, 1: 1.0},
    b=1.5,
    reps=6,
    seed=99,
    parallelism=1,
    methods=("oracle", "naive-sis:s=5", "rcv-sis:s=5", "wrcv-sis:s=4", "naive-lasso", "plugin-lasso", "cv-lasso"),
)


@pytest.fixture(scope="module")
def small_result():
    return run_experiment(SMALL)


class TestConfig:
    def test_presets(self):
        e1, e2, e3 = preset("example1"), preset("example2"), preset("example3")
        assert (e1.n, e1.p, e1.true_beta) == (200, 1000, {})
        assert (e2.n, e2.p, e2.b, e2.support) == (200, 2000, 2.0, (0, 1, 2))
        assert (e3.n, e3.p, e3.cov.kind, e3.cov.rho) == (400, 1000, "ar1", 0.5)
        assert e3.support == (0, 1, 2, 4, 6, 10, 12, 16, 18, 22)
        assert e3.true_beta[1] == pytest.approx(-0.06)

    def test_rho_override(self):
        cfg = preset("example2", rho=0.5, b=1.0, reps=7)
        assert cfg.cov == CovarianceSpec("equicorrelated", 0.5)
        assert (cfg.b, cfg.reps) == (1.0, 7)

    def test_unknown_preset(self):
        with pytest.raises(ConfigurationError):
            preset("example9")

    def test_invalid(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig("x", n=10, p=5, beta={7: 1.0})
        with pytest.raises(ConfigurationError):
            ExperimentConfig("x", n=10, p=5, reps=0)

    def test_toml(self, tmp_path):
        path = tmp_path / "exp.toml"
        path.write_text(
            'name = "mine"\nn = 50\np = 80\nreps = 3\nmethods = ["oracle", "rcv-sis:s=4"]\n'
            '[beta]\n0 = 1.5\n3 = -2.0\n[cov]\nkind = "ar1"\nrho = 0.3\n'
        )
        cfg = load_config(str(path), reps=4)
        assert cfg.beta == {0: 1.5, 3: -2.0}
        assert cfg.cov == CovarianceSpec("ar1", 0.3)
        assert cfg.reps == 4

    def test_toml_preset(self, tmp_path):
        path = tmp_path / "exp.toml"
        path.write_text('preset = "example2"\nb = 1.0\nreps = 12\n')
        cfg = load_config(str(path))
        assert (cfg.name, cfg.b, cfg.reps) == ("example2", 1.0, 12)

    def test_toml_errors(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("n = = 3")
        with pytest.raises(ConfigurationError):
            load_config(str(bad))
        with pytest.raises(ConfigurationError):
            load_config(str(tmp_path / "missing.toml"))


class TestMethodTags:
    def test_parse(self):
        ms = parse_method("rcv-isis:s=25:steps=5")
        assert (ms.estimator, ms.selector.kind, ms.selector.s, ms.selector.steps) == ("rcv", "isis", 25, 5)
        assert parse_method("rrcv-sis:s=3:R=10").R == 10
        assert parse_method("plugin-scad:a=3.0").selector.a == 3.0
        assert parse_method("naive-sis:s=0").selector.kind == "fixed"
        assert parse_method("oracle").estimator == "oracle"

    def test_default_size_from_config(self):
        assert parse_method("naive-sis", preset("example1")).selector.s == 5
        assert parse_method("naive-sis", preset("example2")).selector.s == 50

    @pytest.mark.parametrize("tag", ["magic-sis", "rcv-forest", "plugin-sis", "rcv-sis:q=3", "rcv-sis:s=x", "oracle:s=1"])
    def test_bad(self, tag):
        with pytest.raises(ConfigurationError):
            parse_method(tag)


class TestExperiment:
    def test_metrics_shape(self, small_result):
        rows = {m.method: m for m in small_result.metrics}
        assert list(rows) == list(SMALL.methods)
        for m in rows.values():
            assert m.reps_used + m.failures == SMALL.reps
            assert round(m.ssp * SMALL.reps) == pytest.approx(m.ssp * SMALL.reps, abs=1e-9)
        assert rows["naive-sis:s=5"].ams == 5.0
        assert rows["rcv-sis:s=5"].ams == 5.0
        assert rows["oracle"].ssp == 1.0

    def test_rcv_ssp_needs_both_halves(self, small_result):
        recs = [r for r in small_result.records if r.method == "rcv-sis:s=5"]
        row = next(m for m in small_result.metrics if m.method == "rcv-sis:s=5")
        assert row.ssp == pytest.approx(np.mean([all(r.sure_screen) for r in recs]))
        assert len(row.ssp_halves) == 2
        assert row.ssp <= min(row.ssp_halves)

    def test_shared_cv_run(self, small_result):
        # naive, plug-in and CV LASSO reuse one tuning run per replication
        by = {}
        for r in small_result.records:
            by.setdefault(r.rep, {})[r.method] = r
        for recs in by.values():
            assert recs["naive-lasso"].models == recs["plugin-lasso"].models == recs["cv-lasso"].models

    def test_bias_and_se(self, small_result):
        vals = small_result.values("naive-sis:s=5")
        row = next(m for m in small_result.metrics if m.method == "naive-sis:s=5")
        assert row.bias == pytest.approx(vals.mean() - 1.0, abs=1e-14)
        assert row.se == pytest.approx(vals.std(ddof=1), abs=1e-14)

    def test_single_rep(self):
        res = run_experiment(replace(SMALL, reps=1, methods=("rcv-sis:s=5",)))
        row, rec = res.metrics[0], res.records[0]
        assert row.bias == rec.sigma2 - 1.0
        assert row.se == 0.0 and not row.se_defined
        assert row.ams == rec.model_size

    def test_replay(self, small_result):
        again = replay(SMALL, 4)
        orig = [r for r in small_result.records if r.rep == 4]
        assert again == orig

    def test_parallel_determinism(self, small_result):
        par = run_experiment(replace(SMALL, parallelism=2))
        assert par.records == small_result.records
        assert par.metrics == small_result.metrics

    def test_simulated_data_reproducible(self):
        (a, ea), (b, eb) = simulate_dataset(SMALL, 3), simulate_dataset(SMALL, 3)
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y) and np.array_equal(ea, eb)
        c, _ = simulate_dataset(SMALL, 4)
        assert not np.array_equal(a.y, c.y)

    def test_failures_counted(self):
        cfg = replace(SMALL, n=20, reps=2, methods=("rcv-sis:s=12", "oracle"))
        res = run_experiment(cfg)
        row = res.metrics[0]
        assert row.reps_used == 0 and row.failures == 2
        assert math.isnan(row.bias)
        assert not res.records[0].ok and "ConfigurationError" in res.records[0].error

    def test_aggregate_order_independent(self, small_result):
        shuffled = list(small_result.records)
        np.random.default_rng(0).shuffle(shuffled)
        assert aggregate(shuffled, SMALL.methods, 1.0) == small_result.metrics


class TestSweep:
    def test_zero_size_rows_agree(self):
        cfg = replace(SMALL, reps=3)
        rows = sweep_model_size(cfg, ["naive-sis", "rcv-sis"], [0, 2])
        zero = [r for r in rows if r.s == 0]
        assert zero[0].median == pytest.approx(zero[1].median, rel=1e-12)

    def test_naive_decreasing(self):
        cfg = ExperimentConfig("null", n=50, p=300, reps=20, seed=3, parallelism=1)
        rows = sweep_model_size(cfg, ["naive-stepwise"], [1, 2, 5, 10])
        med = [r.median for r in rows]
        assert all(a > b for a, b in zip(med, med[1:]))


class TestEmit:
    def test_csv_schema(self, small_result, tmp_path):
        path = tmp_path / "out.csv"
        emit(small_result, "csv", str(path))
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == METRIC_COLUMNS
        assert set(rows[0]) == {"method", "bias", "se", "ams", "ssp", "vmv", "reps_used", "fallback_count"}
        assert len(rows) == 1 + len(SMALL.methods)
        bias = rows[1][1]
        assert len(bias.lstrip("-").replace(".", "").split("e")[0].lstrip("0")) <= 6

    def test_empty(self, tmp_path):
        path = tmp_path / "empty.csv"
        emit([], "csv", str(path))
        assert path.read_text() == ",".join(METRIC_COLUMNS) + "\n"

    def test_json_round_trip(self, small_result, tmp_path):
        path = tmp_path / "out.json"
        emit(small_result, "json", str(path))
        back = load_json(str(path))
        assert back.metrics == small_result.metrics
        assert back.records == small_result.records
        doc = json.loads(path.read_text())
        assert all(r["seed"] == SMALL.seed and "rep" in r for r in doc["records"])
        # every record replays from its stored seed and replication index
        r0 = doc["records"][len(SMALL.methods) * 2]
        cfg = replace(back.config, seed=r0["seed"])
        assert any(rec.sigma2 == r0["sigma2"] for rec in replay(cfg, r0["rep"]))

    def test_long(self, small_result, tmp_path):
        path = tmp_path / "long.csv"
        emit(small_result, "long", str(path))
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["method", "value"]
        assert len(rows) - 1 == sum(r.ok for r in small_result.records)
        assert float(rows[1][1]) == small_result.records[0].sigma2

    def test_io_error(self, small_result, tmp_path):
        bad = tmp_path / "missing-dir" / "x.csv"
        with pytest.raises(OutputError) as exc:
            emit(small_result, "csv", str(bad))
        assert str(bad) in str(exc.value)

    def test_unknown_format(self, small_result, tmp_path):
        with pytest.raises(ConfigurationError):
            emit(small_result, "xml", str(tmp_path / "x"))
        assert not os.listdir(tmp_path)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


class TestCsvIngestion:
    def test_three_columns(self, tmp_path):
        path = tmp_path / "d.csv"
        g = np.random.default_rng(0)
        write_csv(path, ["y", "a", "b"], g.standard_normal((10, 3)).round(4))
        data = ingest_csv(str(path), "y")
        assert data.p == 3
        assert data.labels == ("a", "b", "intercept")
        assert data.keep == (2,)
        assert np.all(data.X[:, 2] == 1.0)

    def test_keep_by_name(self, tmp_path):
        path = tmp_path / "d.csv"
        write_csv(path, ["x1", "y", "xN"], np.arange(15).reshape(5, 3))
        data = ingest_csv(str(path), "y", ["xN", "x1"])
        assert data.keep == (0, 1, 2)
        assert np.array_equal(data.y, [1, 4, 7, 10, 13])

    def test_missing_keep_named(self, tmp_path):
        path = tmp_path / "d.csv"
        write_csv(path, ["y", "a"], [[1, 2], [3, 4]])
        with pytest.raises(ConfigurationError, match="zz.*ww|ww.*zz"):
            ingest_csv(str(path), "y", ["zz", "a", "ww"])

    def test_row_drop(self, tmp_path):
        path = tmp_path / "d.csv"
        write_csv(path, ["y", "a"], [[1, 2], ["", 4], [5, "nan"], [7, 8], [9, 1]])
        with pytest.warns(RuntimeWarning, match="dropped 2"):
            data, dropped = read_csv_dataset(str(path), "y")
        assert dropped == 2 and data.n == 3

    def test_non_numeric_named(self, tmp_path):
        path = tmp_path / "d.csv"
        write_csv(path, ["y", "city"], [[1, "SF"], [2, "LA"]])
        with pytest.raises(ConfigurationError, match="city"):
            ingest_csv(str(path), "y")

    def test_missing_response(self, tmp_path):
        path = tmp_path / "d.csv"
        write_csv(path, ["a", "b"], [[1, 2]])
        with pytest.raises(ConfigurationError, match="price"):
            ingest_csv(str(path), "price")

    def test_synthetic_sweep_structure(self, tmp_path):
        g = derive_rng(2024)
        n, p = 119, 383
        X = generate_design(n, p, CovarianceSpec.equicorrelated(0.3), g)
        beta = np.zeros(p)
        beta[[0, 1, 4, 9, 20]] = [1.5, -1.0, 0.8, 1.2, -0.7]
        y = X @ beta + 0.5 * g.standard_normal(n)
        path = tmp_path / "houses.csv"
        names = ["xN"] + [f"x{j}" for j in range(1, p)]
        write_csv(path, ["price"] + names, np.column_stack([y, X]))
        data = ingest_csv(str(path), "price", ["xN"])
        sizes = [2, 3, 5, 10, 15, 20, 30]
        rows = fit_sweep(data, "rcv-scad", sizes, seed=1)
        naive = [r.sigma for r in rows if r.method == "naive-scad"]
        rcv_ = [r.sigma for r in rows if r.method == "rcv-scad"]
        assert all(a > b for a, b in zip(naive, naive[1:]))
        big = slice(sizes.index(5), None)
        assert np.ptp(rcv_[big]) < np.ptp(naive[big])
        assert rcv_[-1] > naive[-1]
        r2 = [r.r2 for r in rows if r.method == "naive-scad"]
        assert all(a < b for a, b in zip(r2, r2[1:]))
