import dataclasses
import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from sais.algorithms import run_standard_sais
from sais.bench import (CSV_HEADER, CellResult, ConfigError, ExperimentConfig,
                        SummaryRow, _sais_estimate, cell_seed, read_csv,
                        read_summary, run_cell, run_experiment, summarize,
                        write_csv, write_summary)
from sais.cli import main
from sais.plotting import PLOT_KINDS, render_plot
from sais.policy import Schedules
from sais.targets import gaussian_mixture_target
from sais.util import mix_seed


def _tiny_config(**overrides):
    base = dict(target="gaussian-mixture", dim=1, methods=["sais", "mh"],
                budgets=[400], replicates=2,
                schedules={"batch_size": 100, "burn_in_stages": 2},
                mcmc_burn_in=100)
    base.update(overrides)
    return ExperimentConfig.from_json(base)


class TestExperimentConfig:
    def test_from_json_dict_and_file(self, tmp_path):
        config = _tiny_config()
        assert config.target == "gaussian-mixture"
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config.to_dict()))
        loaded = ExperimentConfig.from_json(str(path))
        assert loaded == config

    def test_unreadable_or_malformed_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            ExperimentConfig.from_json(str(tmp_path / "missing.json"))
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError, match="cannot read"):
            ExperimentConfig.from_json(str(bad))
        array = tmp_path / "array.json"
        array.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="JSON object"):
            ExperimentConfig.from_json(str(array))

    def test_key_validation(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            ExperimentConfig.from_json({"target": "cold-start", "dim": 1,
                                        "methods": ["mh"], "budgets": [200],
                                        "mcmc_burn_in": 10, "bogus": 1})
        with pytest.raises(ConfigError, match="missing config keys"):
            ExperimentConfig.from_json({"target": "cold-start"})

    @pytest.mark.parametrize("overrides,message", [
        (dict(target="unknown"), "unknown target"),
        (dict(dim=0), "dim"),
        (dict(methods=[]), "at least one method"),
        (dict(methods=["sais", "bogus"]), "unknown method"),
        (dict(methods=["mh", "mh"]), "duplicate"),
        (dict(budgets=[]), "at least one budget"),
        (dict(budgets=[0]), "positive integers"),
        (dict(budgets=[400.0]), "positive integers"),
        (dict(replicates=0), "replicates"),
        (dict(rng="xorshift"), "rng family"),
        (dict(mu_start=[0.0, 1.0]), "mu_start length"),
        (dict(schedules={"batch_size": 100, "burn_in_stages": 2,
                         "unknown": 3}), "unknown schedules keys"),
        (dict(safe={"radius": 2}), "unknown safe keys"),
        (dict(amh={"gamma": 0.1}), "unknown amh keys"),
        (dict(mcmc_burn_in=-1), "mcmc_burn_in"),
        (dict(budgets=[450]), "not a multiple"),
        (dict(budgets=[200]), "burn-in"),
        (dict(methods=["mh"], mcmc_burn_in=400), "MCMC burn-in"),
    ])
    def test_validate_rejects(self, overrides, message):
        base = dict(target="gaussian-mixture", dim=1,
                    methods=["sais", "mh"], budgets=[400], replicates=2,
                    schedules={"batch_size": 100, "burn_in_stages": 2},
                    mcmc_burn_in=100)
        base.update(overrides)
        with pytest.raises(ConfigError, match=message):
            ExperimentConfig.from_json(base)

    def test_effective_mcmc_burn_in(self):
        assert _tiny_config(mcmc_burn_in=250).effective_mcmc_burn_in() == 250
        no_override = ExperimentConfig(
            target="cold-start", dim=1, methods=["amh"], budgets=[30_000])
        assert no_override.effective_mcmc_burn_in() == 10_000
        adapted = ExperimentConfig(
            target="cold-start", dim=1, methods=["amh"], budgets=[30_000],
            amh={"adapt_start": 500})
        assert adapted.effective_mcmc_burn_in() == 500

    def test_cell_seed_is_mix_seed(self):
        assert cell_seed(9, 1, 2, 3) == mix_seed(9, 1, 2, 3)
        grid = {cell_seed(0, m, b, r)
                for m in range(3) for b in range(3) for r in range(10)}
        assert len(grid) == 90


class TestRunCell:
    def test_sais_cell(self):
        config = _tiny_config()
        row = run_cell(config, "sais", 400, 0, cell_seed(0, 0, 0, 0))
        assert row.error == ""
        assert row.method == "sais"
        assert math.isfinite(row.sq_error) and row.sq_error >= 0.0
        assert row.op_count > 0
        assert row.wall_time_ns > 0
        assert row.ess_final > 1.0

    def test_mcmc_cell(self):
        config = _tiny_config()
        row = run_cell(config, "mh", 400, 1, 123)
        assert row.error == ""
        assert row.op_count == 400
        assert math.isnan(row.ess_final)
        assert math.isfinite(row.sq_error)

    def test_failure_is_captured_not_raised(self):
        config = _tiny_config()
        # 50 particles cannot fill one 100-particle batch: the schedule
        # constructor refuses, and the cell must absorb that
        row = run_cell(config, "sais", 50, 0, 7)
        assert row.error != ""
        assert math.isnan(row.sq_error)
        assert row.op_count == 0

    def test_deterministic_given_seed(self):
        config = _tiny_config()
        a = run_cell(config, "sais", 400, 0, 99)
        b = run_cell(config, "sais", 400, 0, 99)
        assert a.sq_error == b.sq_error
        assert a.op_count == b.op_count

    def test_rng_family_changes_draws(self):
        pcg = _tiny_config()
        philox = _tiny_config(rng="philox")
        a = run_cell(pcg, "sais", 400, 0, 99)
        b = run_cell(philox, "sais", 400, 0, 99)
        assert a.sq_error != b.sq_error


class TestRunExperiment:
    def test_grid_order_and_determinism(self):
        config = _tiny_config(budgets=[300, 400])
        rows = run_experiment(config)
        keys = [(r.method, r.budget, r.replicate) for r in rows]
        assert keys == [(m, b, r) for m in ["sais", "mh"]
                        for b in [300, 400] for r in range(2)]
        again = run_experiment(config)
        for a, b in zip(rows, again):
            assert a.seed == b.seed
            assert a.sq_error == b.sq_error or (
                math.isnan(a.sq_error) and math.isnan(b.sq_error))
            assert a.op_count == b.op_count

    def test_parallel_matches_serial(self):
        config = _tiny_config()
        serial = run_experiment(config, jobs=1)
        parallel = run_experiment(config, jobs=2)
        for a, b in zip(serial, parallel):
            assert (a.method, a.budget, a.replicate, a.seed) == \
                (b.method, b.budget, b.replicate, b.seed)
            assert a.sq_error == b.sq_error
            assert a.op_count == b.op_count

    def test_progress_and_output_file(self, tmp_path):
        config = _tiny_config()
        seen = []
        out = tmp_path / "results.csv"
        rows = run_experiment(config, out_path=str(out),
                              progress=seen.append)
        assert len(seen) == len(rows) == 4
        assert out.exists()
        assert read_csv(str(out)) == rows


class TestCsvRoundTrip:
    def test_round_trip_with_failures_and_nan(self, tmp_path):
        rows = [
            CellResult(method="sais", target="cold-start", d=2, budget=1000,
                       replicate=0, seed=42, sq_error=0.125,
                       wall_time_ns=10, op_count=99, ess_final=12.5),
            CellResult(method="mh", target="cold-start", d=2, budget=1000,
                       replicate=1, seed=43, sq_error=math.nan,
                       wall_time_ns=0, op_count=0, ess_final=math.nan,
                       error="boom: bad state"),
        ]
        path = tmp_path / "cells.csv"
        write_csv(rows, str(path))
        text = path.read_text().splitlines()
        assert text[0] == ",".join(CSV_HEADER)
        back = read_csv(str(path))
        assert back[0] == rows[0]
        assert back[1].error == "boom: bad state"
        assert math.isnan(back[1].sq_error)

    def test_read_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="unexpected header"):
            read_csv(str(path))

    def test_read_reports_line_numbers(self, tmp_path):
        path = tmp_path / "bad.csv"
        good = "sais,cold-start,2,1000,0,42,0.5,10,99,12.5,"
        path.write_text(",".join(CSV_HEADER) + "\n"
                        + good + "\n"
                        + "sais,cold-start,2\n")
        with pytest.raises(ValueError, match="line 3"):
            read_csv(str(path))
        path.write_text(",".join(CSV_HEADER) + "\n"
                        + good.replace("1000", "one-thousand") + "\n")
        with pytest.raises(ValueError, match="line 2"):
            read_csv(str(path))


class TestSummarize:
    def _row(self, method="sais", budget=1000, sq_error=1e-4, rep=0,
             op_count=50, wall=1000, error=""):
        return CellResult(method=method, target="t", d=2, budget=budget,
                          replicate=rep, seed=rep, sq_error=sq_error,
                          wall_time_ns=wall, op_count=op_count,
                          ess_final=1.0, error=error)

    def test_median_of_logs(self):
        rows = [self._row(sq_error=v, rep=i, op_count=c)
                for i, (v, c) in enumerate([(1e-2, 10), (1e-4, 20),
                                            (1e-6, 30)])]
        summary = summarize(rows)
        assert len(summary) == 1
        assert summary[0].n_used == 3
        assert summary[0].median_log10_sq_error == pytest.approx(-4.0)
        assert summary[0].median_op_count == 20

    def test_failed_and_nan_rows_excluded(self):
        rows = [self._row(sq_error=1e-2, rep=0),
                self._row(sq_error=math.nan, rep=1),
                self._row(sq_error=1e-2, rep=2, error="exploded")]
        summary = summarize(rows)
        assert summary[0].n_used == 1
        assert summarize([self._row(sq_error=math.nan)]) == []
        assert summarize([]) == []

    def test_zero_error_becomes_negative_infinity(self):
        summary = summarize([self._row(sq_error=0.0)])
        assert summary[0].median_log10_sq_error == -math.inf

    def test_groups_sorted_and_separate(self):
        rows = [self._row(method="mh", budget=2000),
                self._row(method="sais", budget=1000),
                self._row(method="mh", budget=1000)]
        summary = summarize(rows)
        assert [(s.method, s.budget) for s in summary] == [
            ("mh", 1000), ("mh", 2000), ("sais", 1000)]

    def test_summary_csv_round_trip(self, tmp_path):
        summary = summarize([self._row(sq_error=v, rep=i)
                             for i, v in enumerate([1e-3, 1e-5])])
        path = tmp_path / "summary.csv"
        write_summary(summary, str(path))
        assert read_summary(str(path)) == summary
        path.write_text("x,y\n")
        with pytest.raises(ValueError, match="unexpected header"):
            read_summary(str(path))


class TestBurnInExclusion:
    def test_excluded_estimate_drops_prefix(self):
        target = gaussian_mixture_target(1)
        sched = Schedules(total_stages=8, batch_size=100, dim=1,
                          burn_in_stages=2)
        run = run_standard_sais(target, sched, rng=np.random.default_rng(5))
        kept = _sais_estimate(run, exclude_burn_in=True)
        skip = run.burn_in_particles
        assert skip == 300
        w = np.exp(run.cloud.log_weights[skip:]
                   - run.cloud.log_weights[skip:].max())
        manual = (w @ run.cloud.positions[skip:]) / w.sum()
        np.testing.assert_allclose(kept, manual, rtol=1e-12)
        np.testing.assert_array_equal(
            _sais_estimate(run, exclude_burn_in=False), run.final_estimate)
        assert kept[0] != run.final_estimate[0]

    def test_config_flag_changes_cell_error(self):
        keep = _tiny_config()
        drop = _tiny_config(exclude_burn_in=True)
        a = run_cell(keep, "sais", 400, 0, 11)
        b = run_cell(drop, "sais", 400, 0, 11)
        assert a.error == b.error == ""
        assert a.sq_error != b.sq_error


def _summary_rows():
    rows = []
    for method, err0 in (("sais", 1e-3), ("mh", 1e-2)):
        for i, budget in enumerate((10_000, 100_000, 1_000_000)):
            rows.append(SummaryRow(
                method=method, target="t", d=2, budget=budget,
                n_used=50, median_log10_sq_error=math.log10(err0) - i,
                median_op_count=budget * (i + 1),
                median_wall_time_ns=10 ** (6 + i)))
    return rows


class TestPlotting:
    def test_one_polyline_per_method(self, tmp_path):
        out = tmp_path / "plot.svg"
        render_plot(_summary_rows(), "mse-vs-budget", str(out))
        root = ET.parse(out).getroot()
        ns = "{http://www.w3.org/2000/svg}"
        polylines = root.findall(f"{ns}polyline")
        assert len(polylines) == 2
        assert len(root.findall(f"{ns}circle")) == 6
        labels = [t.text for t in root.findall(f"{ns}text")]
        assert "sais" in labels and "mh" in labels
        assert any(t and t.startswith("1e") for t in labels)

    def test_both_kinds_render(self, tmp_path):
        for kind in PLOT_KINDS:
            out = tmp_path / f"{kind}.svg"
            render_plot(_summary_rows(), kind, str(out))
            assert out.read_text().startswith("<svg")

    def test_bad_inputs(self, tmp_path):
        with pytest.raises(ValueError, match="unknown plot kind"):
            render_plot(_summary_rows(), "pie", str(tmp_path / "x.svg"))
        with pytest.raises(ValueError, match="no plottable"):
            render_plot([], "mse-vs-budget", str(tmp_path / "x.svg"))
        broken = [dataclasses.replace(_summary_rows()[0],
                                      median_log10_sq_error=-math.inf)]
        with pytest.raises(ValueError, match="no plottable"):
            render_plot(broken, "mse-vs-budget", str(tmp_path / "x.svg"))


class TestCli:
    def test_full_pipeline(self, tmp_path):
        config = dict(target="gaussian-mixture", dim=1,
                      methods=["sais", "mh"], budgets=[400], replicates=2,
                      schedules={"batch_size": 100, "burn_in_stages": 2},
                      mcmc_burn_in=100)
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(config))
        results = tmp_path / "results.csv"
        summary = tmp_path / "summary.csv"
        plot = tmp_path / "plot.svg"

        assert main(["run", "--config", str(config_path),
                     "--out", str(results)]) == 0
        assert len(read_csv(str(results))) == 4
        assert main(["summarize", "--in", str(results),
                     "--out", str(summary)]) == 0
        assert len(read_summary(str(summary))) == 2
        assert main(["plot", "--in", str(summary), "--kind",
                     "mse-vs-budget", "--out", str(plot)]) == 0
        assert plot.read_text().startswith("<svg")

    def test_selftest_passes(self):
        assert main(["selftest"]) == 0

    def test_bad_usage_exit_codes(self, tmp_path):
        bad_config = tmp_path / "bad.json"
        bad_config.write_text(json.dumps({"target": "nope", "dim": 1,
                                          "methods": ["mh"],
                                          "budgets": [200],
                                          "mcmc_burn_in": 10}))
        assert main(["run", "--config", str(bad_config),
                     "--out", str(tmp_path / "r.csv")]) == 2
        assert main(["summarize", "--in", str(tmp_path / "absent.csv"),
                     "--out", str(tmp_path / "s.csv")]) == 2
        assert main(["plot", "--in", str(tmp_path / "absent.csv"),
                     "--kind", "mse-vs-budget",
                     "--out", str(tmp_path / "p.svg")]) == 2
        good = tmp_path / "good.json"
        good.write_text(json.dumps({"target": "cold-start", "dim": 1,
                                    "methods": ["mh"], "budgets": [400],
                                    "mcmc_burn_in": 100}))
        assert main(["run", "--config", str(good), "--jobs", "0",
                     "--out", str(tmp_path / "r.csv")]) == 2
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_failure_exit_codes(self, tmp_path):
        # a results file whose rows all failed summarizes to nothing
        rows = [CellResult(method="mh", target="t", d=1, budget=10,
                           replicate=0, seed=1, sq_error=math.nan,
                           wall_time_ns=0, op_count=0, ess_final=math.nan,
                           error="exploded")]
        results = tmp_path / "failed.csv"
        write_csv(rows, str(results))
        assert main(["summarize", "--in", str(results),
                     "--out", str(tmp_path / "s.csv")]) == 1
        # a summary with no finite medians cannot be plotted
        summary_rows = [SummaryRow(method="mh", target="t", d=1, budget=10,
                                   n_used=1,
                                   median_log10_sq_error=-math.inf,
                                   median_op_count=10,
                                   median_wall_time_ns=10)]
        summary = tmp_path / "summary.csv"
        write_summary(summary_rows, str(summary))
        assert main(["plot", "--in", str(summary), "--kind", "mse-vs-ops",
                     "--out", str(tmp_path / "p.svg")]) == 1
