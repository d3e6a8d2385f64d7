import math

import numpy as np
import pytest

import qubitbath as qb
from qubitbath import cli, runner
from qubitbath.presets import PRESETS, format_catalogue, get_preset


TINY_CUSTOM = """
# small end-to-end run
preset = custom
bath.n = 300
bath.width = 1.0
bath.gamma0 = 0.05
grid.t_end = 30.0
grid.dt = 0.1
fit.window_lo = 5.0
fit.window_hi = 25.0
seed = 5
emit_overlays = true
"""


class TestParse:
    def test_preset_line(self):
        cfg = qb.parse_config("preset = fig2a")
        assert cfg.preset == "fig2a"
        assert cfg.overrides == {}
        merged = cfg.resolved()
        assert merged["bath.n"] == 100_000
        assert merged["bath.gamma0"] == 0.03
        assert merged["bath.width"] == 1.0
        assert merged["bath.kappa_dist"] == "none"

    def test_comments_and_blank_lines(self):
        cfg = qb.parse_config("# header\n\npreset = fig2a  # trailing\nbath.n = 1000\n")
        assert cfg.overrides == {"bath.n": 1000}

    def test_missing_preset(self):
        with pytest.raises(qb.ConfigError, match="missing preset"):
            qb.parse_config("")

    def test_unknown_key(self):
        with pytest.raises(qb.ConfigError, match="unknown key"):
            qb.parse_config("preset = fig2a\nbath.sigma = 2\n")

    def test_key_not_valid_for_preset(self):
        with pytest.raises(qb.ConfigError, match="not valid for preset"):
            qb.parse_config("preset = fig2a\nhybrid.g_bar = 0.1\n")

    def test_type_mismatch(self):
        with pytest.raises(qb.ConfigError, match="bad value"):
            qb.parse_config("preset = fig2a\nbath.n = many\n")

    def test_duplicate_key(self):
        with pytest.raises(qb.ConfigError, match="duplicate"):
            qb.parse_config("preset = fig2a\nbath.n = 1\nbath.n = 2\n")

    def test_malformed_line(self):
        with pytest.raises(qb.ConfigError, match="expected"):
            qb.parse_config("preset fig2a\n")

    def test_unknown_preset(self):
        with pytest.raises(KeyError, match="unknown preset"):
            qb.parse_config("preset = fig9")

    @pytest.mark.parametrize("text", [
        "preset = fig2a\nbath.n = 1000\nseed = 9\nemit_overlays = false\n",
        "preset = fig3\nbath.kappa_mean = 0.00015\ngrid.dt = auto\n",
        "preset = fig6\nhybrid.detuning = -0.1\nhybrid.gamma0 = 1.0\n",
        "preset = fig4_multibath\nbath.partition = 0.25,0.75\nemit_checkpoints = 1.0,2.5\n",
    ])
    def test_round_trip(self, text):
        cfg = qb.parse_config(text)
        assert qb.parse_config(qb.render_config(cfg)) == cfg


class TestResolve:
    def test_fig2a_gamma_max_derived(self):
        plan = runner.resolve_plan(qb.parse_config("preset = fig2a"))
        expect = qb.gamma_max_for_target_rate(0.03, 100_000, 1.0)
        assert plan.bath_spec.gamma_max == pytest.approx(expect, rel=1e-14)
        assert plan.mode == "bath"
        assert plan.fit_window == (10.0, 60.0)

    def test_desk_scale_override_keeps_rate(self):
        plan_a = runner.resolve_plan(qb.parse_config("preset = fig2a"))
        plan_b = runner.resolve_plan(qb.parse_config("preset = fig2a\nbath.n = 20000\n"))
        # same target rate, recomputed coupling scale: gamma_max ~ 1/sqrt(N)
        ratio = plan_b.bath_spec.gamma_max / plan_a.bath_spec.gamma_max
        assert ratio == pytest.approx(math.sqrt(5.0), rel=1e-12)
        ra = qb.sample_bath(plan_b.bath_spec)
        assert qb.gamma0_of(ra) == pytest.approx(0.03, rel=0.05)

    def test_fig3_kappa_mean_maps_to_max(self):
        plan = runner.resolve_plan(qb.parse_config("preset = fig3\nbath.kappa_mean = 0.00015\n"))
        assert plan.bath_spec.internal_coupling_dist == "uniform"
        assert plan.bath_spec.kappa_max == pytest.approx(3e-4, rel=1e-14)

    def test_fig3_zero_kappa_disables_block(self):
        plan = runner.resolve_plan(qb.parse_config("preset = fig3"))
        assert plan.bath_spec.internal_coupling_dist == "none"

    def test_variant_resolution(self):
        plan = runner.resolve_plan(qb.parse_config(
            "preset = fig_decays_a\nbath.variant = degenerate-resonant\n"))
        assert plan.bath_spec.frequency_dist == "degenerate"
        assert plan.bath_spec.omega_fix == 1.0
        assert plan.expectation.behavior == "oscillates-cos2"

    def test_variant_detuned_default_shifts_with_internal(self):
        plan_a = runner.resolve_plan(qb.parse_config(
            "preset = fig_decays_a\nbath.variant = degenerate-detuned\n"))
        plan_b = runner.resolve_plan(qb.parse_config(
            "preset = fig_decays_b\nbath.variant = degenerate-detuned\n"))
        assert plan_a.bath_spec.omega_fix == 0.4
        assert plan_b.bath_spec.omega_fix == 0.7
        assert plan_b.bath_spec.internal_coupling_dist == "uniform"

    def test_variant_explicit_override_wins(self):
        plan = runner.resolve_plan(qb.parse_config(
            "preset = fig_decays_a\nbath.variant = degenerate-detuned\nbath.omega_fix = 0.55\n"))
        assert plan.bath_spec.omega_fix == 0.55

    def test_fig6_hybrid_plan(self):
        plan = runner.resolve_plan(qb.parse_config("preset = fig6"))
        assert plan.mode == "hybrid"
        assert plan.hybrid_spec.g_bar == 0.1
        assert plan.hybrid_spec.detuning == pytest.approx(-0.25)
        expect = qb.gamma_max_for_target_rate(0.01, 10_000, 2.0)
        assert plan.bath_spec.gamma_max == pytest.approx(expect, rel=1e-14)

    def test_fig6_r_and_detuning_conflict(self):
        with pytest.raises(qb.ConfigError, match="inconsistent"):
            runner.resolve_plan(qb.parse_config(
                "preset = fig6\nhybrid.r = 0.9\nhybrid.detuning = -0.25\n"))

    def test_custom_requires_core_keys(self):
        with pytest.raises(qb.ConfigError, match="bath.n"):
            runner.resolve_plan(qb.parse_config("preset = custom\ngrid.t_end = 1\n"))
        with pytest.raises(qb.ConfigError, match="grid.t_end"):
            runner.resolve_plan(qb.parse_config(
                "preset = custom\nbath.n = 10\nbath.width = 1\nbath.gamma0 = 0.1\n"))

    def test_custom_hybrid_mode(self):
        text = ("preset = custom\nbath.n = 10\nbath.width = 2\nhybrid.gamma0 = 0.0\n"
                "hybrid.g_bar = 0.1\nhybrid.detuning = -0.25\ngrid.t_end = 5\n")
        plan = runner.resolve_plan(qb.parse_config(text))
        assert plan.mode == "hybrid"


class TestPresetCatalogue:
    def test_all_presets_present(self):
        assert set(PRESETS) == {"fig2a", "fig2b", "fig3", "fig4_multibath",
                                "fig_decays_a", "fig_decays_b", "fig6", "custom"}

    def test_fig3_sweep_list(self):
        assert get_preset("fig3").kappa_sweep == (0.0, 5e-5, 7.5e-5, 1.5e-4, 2.5e-4, 5e-4, 1.5e-3)

    def test_catalogue_text(self):
        text = format_catalogue()
        for name in PRESETS:
            assert name in text
        assert "0.084" in text          # fig4 rate
        assert "nominal" in text        # desk-scale provenance note
        assert "sweep" in text

    def test_every_preset_resolves(self):
        for name in PRESETS:
            if name == "custom":
                continue
            runner.resolve_plan(qb.ExperimentConfig(name))


class TestRun:
    def test_tiny_run_outputs(self, tmp_path):
        cfg = qb.parse_config(TINY_CUSTOM)
        report = runner.run(cfg, tmp_path / "out")
        assert report.ok
        assert (tmp_path / "out" / "trajectory.csv").exists()
        assert (tmp_path / "out" / "overlay.csv").exists()
        assert (tmp_path / "out" / "report.txt").exists()
        txt = (tmp_path / "out" / "report.txt").read_text()
        assert "gamma0_empirical" in txt and "lambda0" in txt and "wall clock" in txt
        # N = 300 leaves ~15 modes in the linewidth: the fitted rate is noisy
        # by design here; physics-grade fits are covered by the acceptance runs
        assert report.fits["p_qubit"].rate == pytest.approx(0.05, rel=0.5)
        header = (tmp_path / "out" / "trajectory.csv").read_text().splitlines()[0]
        assert header == "t,p_qubit,norm,E_bath_1"

    def test_csv_byte_determinism(self, tmp_path):
        cfg = qb.parse_config(TINY_CUSTOM)
        runner.run(cfg, tmp_path / "a", threads=1)
        runner.run(cfg, tmp_path / "b", threads=1)
        assert (tmp_path / "a" / "trajectory.csv").read_bytes() == \
               (tmp_path / "b" / "trajectory.csv").read_bytes()

    def test_seed_changes_output(self, tmp_path):
        cfg = qb.parse_config(TINY_CUSTOM)
        runner.run(cfg, tmp_path / "a", threads=1)
        runner.run(cfg, tmp_path / "b", seed=6, threads=1)
        assert (tmp_path / "a" / "trajectory.csv").read_bytes() != \
               (tmp_path / "b" / "trajectory.csv").read_bytes()

    def test_multibath_columns_and_fractions(self, tmp_path):
        text = ("preset = fig4_multibath\nbath.n = 2000\ngrid.t_end = 60\n"
                "grid.dt = 0.25\nseed = 3\n")
        report = runner.run(qb.parse_config(text), tmp_path / "mb")
        header = (tmp_path / "mb" / "trajectory.csv").read_text().splitlines()[0]
        assert header == "t,p_qubit,norm,E_bath_1,E_bath_2"
        fr = report.derived["final_energy_fractions"]
        assert fr[0] == pytest.approx(0.3, abs=0.05)

    def test_degenerate_variant_skips_rate_fit(self, tmp_path):
        text = ("preset = fig_decays_a\nbath.variant = degenerate-resonant\n"
                "bath.n = 500\ngrid.t_end = 40\nfit.window_lo = 10\nfit.window_hi = 30\n")
        report = runner.run(qb.parse_config(text), tmp_path / "dg")
        assert "p_qubit" not in report.fits
        key = "expectation (oscillates-cos2)"
        assert key in report.verdicts and report.verdicts[key].startswith("pass")

    def test_checkpoint_files(self, tmp_path):
        text = TINY_CUSTOM + "emit_checkpoints = 10.0,20.0\n"
        report = runner.run(qb.parse_config(text), tmp_path / "ck")
        files = sorted(p.name for p in (tmp_path / "ck").glob("checkpoint_*.csv"))
        assert files == ["checkpoint_000.csv", "checkpoint_001.csv"]
        body = (tmp_path / "ck" / "checkpoint_000.csv").read_text().splitlines()
        assert body[0].startswith("# t = 10")
        assert body[1] == "index,re,im"
        assert len(body) == 2 + 301

    def test_abort_removes_partial_outputs(self, tmp_path, monkeypatch):
        def boom(*a, **k):
            raise RuntimeError("disk gremlin")

        monkeypatch.setattr(runner, "_write_overlay_csv", boom)
        cfg = qb.parse_config(TINY_CUSTOM)
        with pytest.raises(RuntimeError, match="gremlin"):
            runner.run(cfg, tmp_path / "broken")
        assert list((tmp_path / "broken").glob("*.csv")) == []
        assert not (tmp_path / "broken" / "report.txt").exists()

    def test_hybrid_run_outputs(self, tmp_path):
        text = ("preset = fig6\nbath.n = 500\ngrid.t_end = 50\ngrid.dt = 0.2\n"
                "fit.window_lo = 10\nfit.window_hi = 45\n")
        report = runner.run(qb.parse_config(text), tmp_path / "hy")
        path = tmp_path / "hy" / "hybrid_trajectory.csv"
        assert path.exists()
        header = path.read_text().splitlines()[0]
        assert header == "t,p_qubit,p_cavity,rho11_tilde,rho22_tilde,rho11_master,rho22_master,norm"
        assert "rho11_tilde" in report.fits
        assert report.derived["global_rates"][0] > 0

    def test_isolated_hybrid_verdict(self, tmp_path):
        text = "preset = fig6\nhybrid.gamma0 = 0.0\nbath.n = 50\ngrid.t_end = 40\ngrid.dt = 0.05\n"
        report = runner.run(qb.parse_config(text), tmp_path / "iso")
        key = "isolated dressed populations constant"
        assert key in report.verdicts and report.verdicts[key].startswith("pass")


class TestCli:
    def test_presets_command(self, capsys):
        assert cli.main(["presets"]) == 0
        out = capsys.readouterr().out
        assert "fig2a" in out and "fig6" in out

    def test_check_valid(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(TINY_CUSTOM)
        assert cli.main(["check", "--config", str(cfg)]) == 0
        assert "config ok" in capsys.readouterr().out

    def test_check_invalid(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("preset = custom\nbath.n = 10\n")
        assert cli.main(["check", "--config", str(cfg)]) == 2
        assert "error" in capsys.readouterr().err

    def test_check_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("preset = fig2a\nbogus = 1\n")
        assert cli.main(["check", "--config", str(cfg)]) == 2

    def test_run_end_to_end(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(TINY_CUSTOM)
        out = tmp_path / "out"
        code = cli.main(["run", "--config", str(cfg), "--out", str(out), "--threads", "1"])
        assert code == 0
        assert (out / "trajectory.csv").exists()
        assert "run report" in capsys.readouterr().out

    def test_run_missing_config(self, tmp_path):
        assert cli.main(["run", "--config", str(tmp_path / "nope.cfg")]) == 2

    def test_threads_env_default(self, monkeypatch):
        monkeypatch.setenv(cli.THREADS_ENV, "2")
        assert cli._default_threads() == 2
        monkeypatch.setenv(cli.THREADS_ENV, "zero")
        with pytest.raises(qb.QubitBathError):
            cli._default_threads()
        monkeypatch.delenv(cli.THREADS_ENV)
        assert cli._default_threads() == 1
