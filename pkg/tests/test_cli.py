import filecmp
import json

import pytest

from hardlab.cli import EXIT_ERROR, EXIT_OK, EXIT_VERDICT, main, parse_suite
from hardlab.experiments import worker_count
from hardlab.model_core import ConfigError
from hardlab.runner import ExperimentSpec, comparable, emit_plot_data, load_report, run

REVERSE_CFG = "n_discs = 10\nseed = 0\nt_rev = 5\nensemble = 2\n"


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "r.cfg"
    p.write_text(REVERSE_CFG)
    return p


def test_reverse_short_run(cfg, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["reverse", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rep = load_report(out)
    assert rep["passed"] and rep["metrics"]["median_max_error_over_a"] <= 1e-12
    assert rep["spec"]["config_text"] == REVERSE_CFG
    assert rep["spec"]["ensemble"] == 2
    assert rep["figures"] and all((out / f).read_bytes()[:4] == b"\x89PNG"
                                  for f in rep["figures"].values())
    assert "ok" in capsys.readouterr().out


def test_deterministic_outputs(cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run(ExperimentSpec("reverse", str(cfg), str(a)))
    run(ExperimentSpec("reverse", str(cfg), str(b)), figures=False)
    assert comparable(load_report(a)) != {} and comparable(load_report(a))["figures"]
    ra, rb = comparable(load_report(a)), comparable(load_report(b))
    ra.pop("figures"), rb.pop("figures")
    assert ra == rb
    for name in load_report(a)["series"].values():
        assert filecmp.cmp(a / name, b / name, shallow=False)


def test_report_is_strict_json(cfg, tmp_path):
    out = tmp_path / "o"
    run(ExperimentSpec("reverse", str(cfg), str(out)), figures=False)
    text = (out / "report.json").read_text()
    json.loads(text, parse_constant=lambda c: pytest.fail(f"non-finite {c}"))


def test_seed_override_changes_output(cfg, tmp_path):
    run(ExperimentSpec("reverse", str(cfg), str(tmp_path / "a")), figures=False)
    run(ExperimentSpec("reverse", str(cfg), str(tmp_path / "b"), seed=7), figures=False)
    assert load_report(tmp_path / "b")["spec"]["seed"] == 7
    assert not filecmp.cmp(tmp_path / "a" / "members.csv", tmp_path / "b" / "members.csv",
                           shallow=False)


def test_bad_config_line_diagnostic(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("n_discs = 10\nbogus line\n")
    assert main(["reverse", "--config", str(p), "--out", str(tmp_path / "o")]) == EXIT_ERROR
    assert "bad.cfg:2" in capsys.readouterr().err


def test_missing_config(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.cfg"),
                 "--out", str(tmp_path / "o")]) == EXIT_ERROR


def test_bad_ensemble(cfg, tmp_path):
    assert main(["reverse", "--config", str(cfg), "--out", str(tmp_path / "o"),
                 "--ensemble", "0"]) == EXIT_ERROR


def test_verdict_failure_exit(tmp_path):
    p = tmp_path / "strict.cfg"
    p.write_text(REVERSE_CFG + "max_error_tol = 1e-30\n")
    assert main(["reverse", "--config", str(p), "--out", str(tmp_path / "o"),
                 "--no-figures"]) == EXIT_VERDICT
    assert not load_report(tmp_path / "o")["passed"]


def test_unused_keys_reported(tmp_path):
    p = tmp_path / "u.cfg"
    p.write_text(REVERSE_CFG + "not_a_param = 3\n")
    run(ExperimentSpec("reverse", str(p), str(tmp_path / "o")), figures=False)
    assert load_report(tmp_path / "o")["unused_keys"] == ["not_a_param"]


def test_plot_data(cfg, tmp_path):
    out = tmp_path / "o"
    assert main(["reverse", "--config", str(cfg), "--out", str(out), "--no-figures",
                 "--plot-data"]) == EXIT_OK
    script = (out / "plot.gp").read_text()
    for name in load_report(out)["series"]:
        dat = out / f"{name}.dat"
        assert dat.exists() and dat.read_text().startswith("# ")
    assert "members.dat" in script or "ladder.dat" in script


def test_plot_data_requires_series(tmp_path):
    (tmp_path / "report.json").write_text(json.dumps({"series": {}}))
    with pytest.raises(ValueError):
        emit_plot_data(tmp_path)


def test_unknown_experiment():
    with pytest.raises(ConfigError):
        ExperimentSpec("nope", "x", "y")
    with pytest.raises(SystemExit):
        main(["nope"])


def test_parse_suite(tmp_path):
    (tmp_path / "s.suite").write_text("# c\na reverse r.cfg seed=3\n\nb simulate x.cfg ensemble=2\n")
    e = parse_suite(tmp_path / "s.suite")
    assert [x.name for x in e] == ["a", "b"]
    assert e[0].seed == 3 and e[0].config == tmp_path / "r.cfg"
    assert e[1].ensemble == 2


@pytest.mark.parametrize("text", [
    "", "a reverse", "a nope r.cfg", "a reverse r.cfg x=1", "a reverse r.cfg seed=z",
    "a reverse r.cfg\na simulate r.cfg",
])
def test_parse_suite_errors(tmp_path, text):
    (tmp_path / "s.suite").write_text(text)
    with pytest.raises(ConfigError):
        parse_suite(tmp_path / "s.suite")


def test_verify_suite(cfg, tmp_path, capsys):
    (tmp_path / "strict.cfg").write_text(REVERSE_CFG + "max_error_tol = 1e-30\n")
    (tmp_path / "s.suite").write_text(f"good reverse {cfg.name}\nbad reverse strict.cfg\n")
    out = str(tmp_path / "v")
    code = main(["verify", "--suite", str(tmp_path / "s.suite"), "--out", out,
                 "--check-determinism"])
    lines = capsys.readouterr().out.splitlines()
    assert code == EXIT_VERDICT
    assert lines[0].startswith("PASS") and "rerun identical" in lines[0]
    assert lines[1].startswith("FAIL")
    assert main(["verify", "--suite", str(tmp_path / "s.suite"), "--out", out,
                 "--only", "good"]) == EXIT_OK
    assert main(["verify", "--suite", str(tmp_path / "s.suite"), "--out", out,
                 "--only", "zzz"]) == EXIT_ERROR


def test_lab_threads(monkeypatch, cfg, tmp_path):
    monkeypatch.setenv("LAB_THREADS", "2")
    assert worker_count() == 2
    run(ExperimentSpec("reverse", str(cfg), str(tmp_path / "p")), figures=False)
    monkeypatch.setenv("LAB_THREADS", "1")
    run(ExperimentSpec("reverse", str(cfg), str(tmp_path / "s")), figures=False)
    assert filecmp.cmp(tmp_path / "p" / "members.csv", tmp_path / "s" / "members.csv",
                       shallow=False)
    for bad in ("0", "two"):
        monkeypatch.setenv("LAB_THREADS", bad)
        with pytest.raises(ConfigError):
            worker_count()
