"""Path loss, channel drawing, FLOP models, and the campaign runner."""

import json
from dataclasses import replace

import numpy as np
import pytest

import irs_ssm.harness as harness
from irs_ssm.harness import (
    ExperimentSpec,
    channel_digest,
    desk_config,
    draw_channels,
    experiment_spec_from_dict,
    flop_estimates,
    load_config,
    full_scale_config,
    path_loss_db,
    records_to_csv,
    run_experiment,
    run_method,
    system_config_from_dict,
)
from irs_ssm.model import Geometry, db_to_linear


class TestPathLoss:
    def test_reference_distance(self):
        assert path_loss_db(1.0, 2.7) == pytest.approx(-30.0)

    def test_printed_examples(self):
        assert path_loss_db(10.0, 2.7) == pytest.approx(-57.0)
        assert path_loss_db(10.0, 2.2) == pytest.approx(-52.0)

    def test_below_reference_raises(self):
        with pytest.raises(ValueError):
            path_loss_db(0.5, 2.7)


class TestDrawChannels:
    def test_deterministic(self):
        cfg = desk_config()
        a = draw_channels(cfg, 12)
        b = draw_channels(cfg, 12)
        for name in "hqfgm":
            assert np.array_equal(getattr(a, name), getattr(b, name))
        assert channel_digest(a) == channel_digest(b)
        c = draw_channels(cfg, 13)
        assert not np.array_equal(a.h, c.h)

    def test_entry_variance_matches_path_loss(self):
        cfg = desk_config(n_rf=2, n_k=2, n_irs=4, m_ary=2)
        n_draws = 10_000
        acc_h = 0.0
        acc_f = 0.0
        for seed in range(n_draws):
            ch = draw_channels(cfg, seed)
            acc_h += np.mean(np.abs(ch.h) ** 2)
            acc_f += np.mean(np.abs(ch.f) ** 2)
        d_ab = cfg.geometry.distance("alice", "bob")
        want_h = db_to_linear(path_loss_db(d_ab, cfg.alpha_ab))
        d_ai = cfg.geometry.distance("alice", "irs")
        want_f = db_to_linear(path_loss_db(d_ai, cfg.alpha_ai))
        assert acc_h / n_draws == pytest.approx(want_h, rel=0.03)
        assert acc_f / n_draws == pytest.approx(want_f, rel=0.03)

    def test_swapping_bob_and_eve_swaps_statistics(self):
        cfg = desk_config(n_rf=2, n_k=2, n_irs=4, m_ary=2)
        swapped = replace(cfg, geometry=Geometry(
            alice=cfg.geometry.alice,
            irs=cfg.geometry.irs,
            bob=cfg.geometry.eve,
            eve=cfg.geometry.bob,
        ))
        n_draws = 10_000
        var_h = var_q_swapped = 0.0
        for seed in range(n_draws):
            var_h += np.mean(np.abs(draw_channels(cfg, seed).h) ** 2)
            var_q_swapped += np.mean(np.abs(draw_channels(swapped, seed + n_draws).q) ** 2)
        assert var_h / n_draws == pytest.approx(var_q_swapped / n_draws, rel=0.03)

    def test_geometry_too_close_raises(self):
        cfg = desk_config(geometry=Geometry(alice=(0.0, 0.0, 0.0), irs=(0.5, 0.0, 0.0),
                                            bob=(10.0, 0.0, 0.0), eve=(20.0, 0.0, 0.0)))
        with pytest.raises(ValueError):
            draw_channels(cfg, 0)


class TestFlopModels:
    def test_admm_core_at_n50(self):
        cfg = full_scale_config()  # N = 50
        one = flop_estimates(cfg, "irs_admm", iterations=1).count
        zero = flop_estimates(cfg, "irs_admm", iterations=0).count
        assert one - zero == 184_750

    def test_complexity_ordering(self):
        for n in (25, 50, 100):
            cfg = desk_config(n_irs=n)
            bca = flop_estimates(cfg, "irs_bca", iterations=1).count
            admm = flop_estimates(cfg, "irs_admm", iterations=1).count
            sdr = flop_estimates(cfg, "irs_sdr", iterations=1).count
            assert bca < admm < sdr

    def test_degenerate_single_element(self):
        cfg = desk_config(n_irs=1)
        for method in ("irs_bca", "irs_admm", "irs_sdr", "asr_sca", "cor_ga"):
            est = flop_estimates(cfg, method, iterations=1)
            assert np.isfinite(est.count) and est.count >= 0

    def test_unknown_method_raises(self):
        with pytest.raises(ValueError):
            flop_estimates(desk_config(), "magic")

    def test_big_o_labels(self):
        cfg = desk_config()
        assert flop_estimates(cfg, "irs_bca").big_o == "O(N^2)"
        assert flop_estimates(cfg, "irs_admm").big_o == "O(N^3)"
        assert flop_estimates(cfg, "irs_sdr").big_o == "O(N^4.5)"


def _tiny_spec(tmp_path, threads=1, kind="sr_vs_power", **kw):
    defaults = dict(
        kind=kind,
        system=desk_config(n_irs=6),
        powers_dbm=(10.0, 20.0),
        n_channel_trials=3,
        base_seed=77,
        combinations=("random_phase", "irs_bca"),
        output_path=str(tmp_path / "out"),
        threads=threads,
        deterministic_timing=True,
    )
    defaults.update(kw)
    return ExperimentSpec(**defaults)


class TestRunExperiment:
    def test_structure_and_files(self, tmp_path):
        spec = _tiny_spec(tmp_path)
        records, summary = run_experiment(spec)
        assert len(records) == 2 * 3  # grid points x trials
        assert all(set(r.outputs) == {"random_phase", "irs_bca"} for r in records)
        assert summary["failure_fraction"] == 0.0
        csv_text = (tmp_path / "out.csv").read_text()
        assert csv_text.splitlines()[0] == ",".join(harness.CSV_COLUMNS)
        assert len(csv_text.splitlines()) == 1 + 2 * 3 * 2
        assert "\r" not in csv_text
        summary_loaded = json.loads((tmp_path / "out.json").read_text())
        assert summary_loaded["kind"] == "sr_vs_power"

    def test_trial_seeds_offset_from_base(self, tmp_path):
        spec = _tiny_spec(tmp_path)
        records, _ = run_experiment(spec)
        assert sorted({r.seed for r in records}) == [77, 78, 79]

    def test_byte_identical_across_thread_counts(self, tmp_path):
        spec1 = _tiny_spec(tmp_path / "a" if False else tmp_path, threads=1,
                           output_path=str(tmp_path / "t1"))
        spec2 = replace(spec1, threads=2, output_path=str(tmp_path / "t2"))
        run_experiment(spec1)
        run_experiment(spec2)
        assert (tmp_path / "t1.csv").read_bytes() == (tmp_path / "t2.csv").read_bytes()
        assert (tmp_path / "t1.json").read_bytes() == (tmp_path / "t2.json").read_bytes()

    def test_results_stable_without_timing_suppression(self, tmp_path):
        # with real timings the scientific columns still reproduce exactly
        spec1 = _tiny_spec(tmp_path, deterministic_timing=False,
                           output_path=str(tmp_path / "r1"))
        spec2 = replace(spec1, output_path=str(tmp_path / "r2"), threads=2)
        rec1, _ = run_experiment(spec1)
        rec2, _ = run_experiment(spec2)
        for a, b in zip(rec1, rec2):
            assert a.channel_digest == b.channel_digest
            for m in a.outputs:
                assert a.outputs[m].sr_bits == b.outputs[m].sr_bits
                assert a.outputs[m].iterations == b.outputs[m].iterations

    def test_failures_recorded_and_campaign_continues(self, tmp_path, monkeypatch):
        real = harness.run_method

        def flaky(method, cfg, ch, seed):
            if method == "irs_bca" and seed == 78:
                raise RuntimeError("injected fault")
            return real(method, cfg, ch, seed)

        monkeypatch.setattr(harness, "run_method", flaky)
        spec = _tiny_spec(tmp_path)
        records, summary = run_experiment(spec)
        failed = [r for r in records if r.errors]
        assert len(failed) == 2  # both grid points at trial seed 78
        assert all("injected fault" in e for r in failed for e in r.errors.values())
        assert 0 < summary["failure_fraction"] < 0.5

    def test_cdf_kind_emits_quantiles(self, tmp_path):
        spec = _tiny_spec(tmp_path, kind="cdf", powers_dbm=(),
                          n_e_values=(2, 4), n_channel_trials=4)
        _, summary = run_experiment(spec)
        assert "cdf" in summary
        key = next(iter(summary["cdf"]))
        assert "0.50" in summary["cdf"][key]["quantiles"]

    def test_convergence_kind_keeps_traces(self, tmp_path):
        spec = _tiny_spec(tmp_path, kind="convergence", powers_dbm=(20.0,),
                          combinations=("joint_II",), n_channel_trials=2)
        _, summary = run_experiment(spec)
        traces = next(iter(summary["convergence"].values()))["traces"]
        assert len(traces) == 2
        assert all(len(t) >= 1 for t in traces)

    def test_position_sweep_moves_the_irs(self, tmp_path):
        spec = _tiny_spec(tmp_path, kind="position_sweep", powers_dbm=(20.0,),
                          irs_y_values=(45.0, 36.0), n_channel_trials=2)
        records, summary = run_experiment(spec)
        assert {r.grid["irs_y"] for r in records} == {45.0, 36.0}
        # different geometry, different channels: digests must differ per trial
        by_trial = {}
        for r in records:
            by_trial.setdefault(r.trial, set()).add(r.channel_digest)
        assert all(len(digests) == 2 for digests in by_trial.values())

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            ExperimentSpec(kind="nope", combinations=("irs_bca",))
        with pytest.raises(ValueError):
            ExperimentSpec(kind="cdf", combinations=("irs_bca",), n_channel_trials=0)
        with pytest.raises(ValueError):
            ExperimentSpec(kind="cdf", combinations=("who",))

    def test_csv_deterministic_order(self, tmp_path):
        spec = _tiny_spec(tmp_path)
        records, _ = run_experiment(spec)
        text = records_to_csv(records, spec.combinations)
        rows = [line.split(",") for line in text.splitlines()[1:]]
        keys = [(float(r[1]), int(r[0]), r[5]) for r in rows]
        assert keys == sorted(keys, key=lambda k: (k[0], k[1]))

    def test_csv_round_trips_record_values(self, tmp_path):
        # parsing the emitted rows reproduces the in-memory outcomes exactly
        spec = _tiny_spec(tmp_path, deterministic_timing=False)
        records, _ = run_experiment(spec)
        text = records_to_csv(records, spec.combinations)
        rows = [line.split(",") for line in text.splitlines()[1:]]
        idx = 0
        for r in records:
            for method in spec.combinations:
                row = rows[idx]
                o = r.outputs[method]
                assert int(row[0]) == r.trial
                assert float(row[1]) == r.grid["power_dbm"]
                assert row[5] == method
                assert float(row[6]) == o.sr_bits
                assert int(row[7]) == o.iterations
                assert float(row[8]) == o.wall_ms
                assert float(row[9]) == o.flops
                idx += 1
        assert idx == len(rows)


class TestConfigIo:
    def test_round_trip(self, tmp_path):
        cfg_yaml = """
system:
  n_rf: 2
  n_k: 2
  n_irs: 6
  m_ary: 2
  p_total_dbm: 20.0
  sigma_b2_dbm: -55.0
  sigma_e2_dbm: -55.0
  beta: 0.35
  geometry:
    alice: [10.0, 0.0, 2.0]
    irs: [0.0, 45.0, 2.0]
    bob: [10.0, 45.0, 0.0]
    eve: [10.0, 35.0, 0.0]
experiment:
  kind: sr_vs_power
  powers_dbm: [10.0, 20.0]
  n_channel_trials: 2
  base_seed: 5
  combinations: [random_phase, irs_bca]
  deterministic_timing: true
"""
        path = tmp_path / "campaign.yaml"
        path.write_text(cfg_yaml)
        spec = load_config(str(path))
        assert spec.system.n_irs == 6
        assert spec.system.p_total == pytest.approx(100.0)
        assert spec.system.sigma_b2 == pytest.approx(db_to_linear(-55.0))
        assert spec.powers_dbm == (10.0, 20.0)
        records, summary = run_experiment(spec)
        assert summary["failure_fraction"] == 0.0

    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError, match="unknown system fields"):
            system_config_from_dict({"n_wigs": 3})

    def test_spec_from_dict_tuplifies(self):
        spec = experiment_spec_from_dict(
            {"kind": "cdf", "n_e_values": [2, 4], "combinations": ["irs_bca"],
             "n_channel_trials": 1},
            desk_config(),
        )
        assert spec.n_e_values == (2, 4)


class TestMethodRunners:
    def test_all_methods_run(self):
        cfg = desk_config(n_irs=6, p_total=db_to_linear(20.0))
        ch = draw_channels(cfg, 3)
        for method in harness.ALL_METHODS:
            out = run_method(method, cfg, ch, 3)
            assert np.isfinite(out.sr_bits)
            assert out.flops >= 0.0

    def test_unknown_method_raises(self):
        cfg = desk_config(n_irs=4)
        with pytest.raises(ValueError):
            run_method("nope", cfg, draw_channels(cfg, 0), 0)
