import numpy as np
import pytest
from scipy import stats

from ch6 import ConfigurationError, GridSpec, NormSpec
from ch6 import harness
from ch6.cli import main
from ch6.diagnostics import read_records_csv
from ch6.spectral import norm, read_snapshot, transform, write_snapshot

TINY = {
    "grid.n": 8,
    "grid.box_length": "8*pi",
    "run.t_end": 2.0,
    "run.cadence": 0.5,
}


def tiny(scenario="smalldata", **extra):
    overrides = dict(TINY)
    overrides.update(extra)
    return harness.load_config(scenario=scenario, overrides=list(overrides.items()))


def test_parse_config_text():
    text = "# comment\nscenario = baseline\n\ngrid.n = 32  # trailing\ngrid.box_length = 16*pi\n"
    values = harness.parse_config_text(text)
    assert values == {"scenario": "baseline", "grid.n": "32", "grid.box_length": "16*pi"}
    with pytest.raises(ConfigurationError):
        harness.parse_config_text("grid.n 32")


def test_config_file_and_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("scenario = baseline\ngrid.n = 32\ngrid.box_length = 16*pi\n")
    cfg = harness.load_config(path, ["grid.n=16"], seed=5)
    assert cfg.scenario == "baseline"
    assert cfg.grid == GridSpec(3, 16, 16 * np.pi)
    assert cfg.seed == 5 and cfg.initial.seed == 5


def test_scenario_defaults_overlay():
    cfg = harness.load_config(scenario="decay3d")
    assert cfg.grid == GridSpec(3, 64, 32 * np.pi)
    assert cfg.params.delta == 1 and cfg.params.g0 == 1 and cfg.params.g2 == 1 and cfg.params.h0 == 0.2
    assert cfg.initial.family == "gaussian" and cfg.initial.target_h2 == 1e-2
    assert cfg.t_end == pytest.approx(6553.6)
    assert harness.load_config(scenario="contraction").grid.n == 32


@pytest.mark.parametrize(
    "override,fragment",
    [
        (("grid.n", "63"), "grid.n"),
        (("params.g2", "0"), "g2"),
        (("stepper.dt", "0"), "stepper.dt"),
        (("stepper.dt", "-1e-3"), "stepper.dt"),
        (("no.such.key", "1"), "unknown configuration keys"),
        (("grid.n", "sixty"), "grid.n"),
        (("scenario", "nope"), "unknown scenario"),
    ],
)
def test_config_validation(override, fragment):
    with pytest.raises(ConfigurationError, match=fragment):
        harness.load_config(overrides=[override])


def test_kappa_validation():
    with pytest.raises(ConfigurationError, match="kappa0"):
        harness.load_config(overrides=[("params.kappa0", "-1"), ("params.kappa1", "1"), ("params.kappa2", "0")])
    cfg = harness.load_config(overrides=[("params.kappa0", "2"), ("params.kappa1", "3"), ("params.kappa2", "1")])
    assert cfg.params.g0 == pytest.approx(-1.0)


# -- initial data --------------------------------------------------------------


def test_zero_amplitude():
    g = GridSpec(3, 8)
    spec = harness.InitialDataSpec(amplitude=0.0, target_h2=None)
    assert np.all(harness.generate_initial_data(spec, g).values == 0)
    with pytest.raises(ConfigurationError, match="unreachable"):
        harness.generate_initial_data(harness.InitialDataSpec(amplitude=0.0), g)


@pytest.mark.parametrize("family", ["gaussian", "random"])
def test_doubling_amplitude_doubles_norms(family):
    g = GridSpec(3, 16, 16 * np.pi)
    a = harness.generate_initial_data(harness.InitialDataSpec(family, amplitude=0.3, target_h2=None), g)
    b = harness.generate_initial_data(harness.InitialDataSpec(family, amplitude=0.6, target_h2=None), g)
    for spec in (NormSpec.lp(2), NormSpec.lp(np.inf), NormSpec.sobolev(2, homogeneous=False), NormSpec.sobolev(-0.5)):
        assert norm(b, spec) == pytest.approx(2 * norm(a, spec), rel=1e-13)


def test_target_norm_after_mean_removal():
    g = GridSpec(3, 16, 16 * np.pi)
    u = harness.generate_initial_data(harness.InitialDataSpec(target_h2=1e-2), g)
    assert abs(u.mean()) <= 1e-14
    assert norm(u, NormSpec.sobolev(2, homogeneous=False)) == pytest.approx(1e-2, rel=1e-12)


def test_random_spectral_slope():
    g = GridSpec(3, 32)
    spec = harness.InitialDataSpec("random", slope=0.5, k_max=8, seed=3, target_h2=None)
    c = transform(harness.generate_initial_data(spec, g))
    mags, amps = [], []
    for idx in np.ndindex(*g.shape):
        m = [i if i < g.n // 2 else i - g.n for i in idx]
        if max(abs(x) for x in m) <= 8 and any(m):
            mags.append(np.sqrt(sum(x * x for x in m)))
            amps.append(abs(c.coeffs[idx]))
    slope = stats.linregress(np.log(mags), np.log(amps)).slope
    assert slope == pytest.approx(0.5, abs=0.15)


def test_random_is_deterministic():
    g = GridSpec(3, 8)
    spec = harness.InitialDataSpec("random", seed=9)
    a = harness.generate_initial_data(spec, g)
    b = harness.generate_initial_data(spec, g)
    assert np.array_equal(a.values, b.values)


def test_from_file(tmp_path):
    g = GridSpec(3, 8, 8 * np.pi)
    u = harness.generate_initial_data(harness.InitialDataSpec("random", seed=1, target_h2=None, zero_mean=False), g)
    path = tmp_path / "u0.bin"
    write_snapshot(path, u)
    back = harness.generate_initial_data(harness.InitialDataSpec("file", path=str(path), target_h2=None, zero_mean=False), g)
    assert np.array_equal(back.values, u.values)
    with pytest.raises(ConfigurationError, match="does not match"):
        harness.generate_initial_data(harness.InitialDataSpec("file", path=str(path)), GridSpec(3, 16, 8 * np.pi))


# -- scenarios and outputs ---------------------------------------------------------


def test_cadence_longer_than_run(tmp_path):
    cfg = tiny(**{"run.cadence": 5.0, "run.t_end": 1.0})
    code, out, result = harness.run_scenario(cfg, tmp_path)
    assert [r.t for r in result.records] == [0.0, 1.0]
    assert len(read_records_csv(out / "diagnostics.csv")["t"]) == 2


def test_outputs_are_deterministic(tmp_path):
    cfg = tiny(**{"initial.family": "random"})
    harness.run_scenario(cfg, tmp_path / "a")
    harness.run_scenario(cfg, tmp_path / "b")
    for name in ("diagnostics.csv", "summary.txt", "config.resolved.txt", "u0.bin", "final.bin"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert not list((tmp_path / "a").glob(".*tmp"))


def test_snapshot_outputs_match_memory(tmp_path):
    cfg = tiny(**{"diagnostics.snapshot_every": 2})
    result = harness.execute_scenario(cfg)
    harness.write_outputs(result, cfg, tmp_path)
    for name, f in result.snapshots:
        back = read_snapshot(tmp_path / f"{name}.bin")
        assert np.array_equal(back.values, f.values)
    assert (tmp_path / "snap_00000.bin").exists()


def test_resolved_config_lists_every_key(tmp_path):
    cfg = tiny()
    harness.run_scenario(cfg, tmp_path)
    keys = harness.parse_config_text((tmp_path / "config.resolved.txt").read_text())
    assert set(keys) == set(harness.DEFAULTS)


def test_equivalence_scenario(tmp_path):
    code, out, _ = harness.run_scenario(harness.load_config(scenario="equivalence"), tmp_path)
    summary = harness.read_summary(out / "summary.txt")
    assert code == 0 and summary["status"] == "pass"
    assert float(summary["max_residual"]) <= 1e-10


def test_contraction_scenario_small(tmp_path):
    cfg = harness.load_config(scenario="contraction", overrides=[("grid.n", "16"), ("picard.n_inner", "64")])
    code, out, _ = harness.run_scenario(cfg, tmp_path)
    summary = harness.read_summary(out / "summary.txt")
    assert code == 0 and float(summary["lambda_max"]) < 1


def test_baseline_scenario(tmp_path):
    cfg = harness.load_config(scenario="baseline", overrides=[("grid.n", "16")])
    code, out, result = harness.run_scenario(cfg, tmp_path)
    assert result.checks["l2_non_increasing"]
    assert result.values["sigma1"] - result.values["sigma0"] == pytest.approx(0.25, abs=0.1)


def test_unwritable_output_reports_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match=str(blocker)):
        harness.run_scenario(tiny(), blocker / "sub")


# -- command line ---------------------------------------------------------------


def cli_args(verb, *extra):
    """TINY overrides first so that later ``--override`` flags win."""
    args = [verb]
    for k, v in TINY.items():
        args += ["--override", f"{k}={v}"]
    return args + list(extra)


def test_cli_check(capsys):
    assert main(["check", "--scenario", "smalldata"]) == 0
    assert '"grid.n": "64"' in capsys.readouterr().out


def test_cli_unknown_scenario():
    assert main(["run", "--scenario", "nope"]) == 2


def test_cli_bad_override():
    assert main(["check", "--override", "grid.n"]) == 2
    assert main(["check", "--config", "/nonexistent/run.cfg"]) == 2


def test_cli_run_and_fit(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(cli_args("run", "--scenario", "baseline", "--out", str(out), "--seed", "3",
                         "--override", "run.t_end=20", "--override", "run.cadence=1")) in (0, 1)
    assert (out / "summary.txt").exists()
    capsys.readouterr()
    assert main(["fit", str(out / "diagnostics.csv"), "--t1", "2", "--t2", "20"]) == 0
    text = capsys.readouterr().out
    assert "gradL2_0" in text and "gradL2_1" in text


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_cli_blowup_exit_code(tmp_path):
    args = cli_args("run", "--scenario", "smalldata", "--out", str(tmp_path))
    args += ["--override", "initial.target_h2=none", "--override", "initial.family=random",
             "--override", "initial.amplitude=5", "--override", "stepper.dt=1",
             "--override", "stepper.dealias=off", "--override", "run.t_end=50",
             "--override", "grid.box_length=2*pi"]
    assert main(args) == 3
    summary = harness.read_summary(tmp_path / "summary.txt")
    assert summary["status"] == "fail" and "blowup_t" in summary


def test_cli_ineq(capsys):
    assert main(["ineq", "interpolation", "--param", "l=2", "--param", "k=1", "--param", "s=0", "--n", "8", "--k-max", "3"]) == 0
    assert main(["ineq", "interpolation", "--param", "theta=0.8", "--n", "8", "--k-max", "3"]) == 1
    assert main(["ineq", "hls", "--param", "p=2", "--n", "8"]) == 2
