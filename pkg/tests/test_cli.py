import json

import pytest

from hsssi.cli import PRESETS, ConfigError, ExperimentConfig, load_config, main, phi_from_dict

TINY = {
    "experiment": "fdd", "seed": 42, "regime": "first-order",
    "params": {"alpha": 1.5, "beta": 1.5}, "phi": {"type": "indicator", "a": -1.0, "b": 1.0},
    "T": [10.0, 100.0], "replicas": 40, "times": [0.5, 1.0],
    "options": {"prelimit_paths": 16, "limit_paths": 40, "prelimit_dt": 1e-3, "limit_dt": 1e-3,
                "n_theta": 4},
}


def _write(tmp_path, d, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return p


def test_config_roundtrip():
    cfg = ExperimentConfig.from_dict(TINY)
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg


@pytest.mark.parametrize("bad,key", [({"alpha_": 1.5}, "alpha_"),
                                     ({"params": {"alpha": 1.5, "beta": 1.5, "betta": 1}}, "params.betta"),
                                     ({"window": {"K": 1, "Q": 2}}, "window.Q"),
                                     ({"options": {"bogus": 1}}, "options.bogus")])
def test_unknown_keys_rejected(bad, key, tmp_path, capsys):
    d = dict(TINY, options={})
    d.update(bad)
    with pytest.raises(ConfigError, match=key):
        ExperimentConfig.from_dict(d)
    assert main(["run", str(_write(tmp_path, d))]) == 2
    assert key in capsys.readouterr().err


def test_seed_mandatory():
    d = dict(TINY)
    del d["seed"]
    with pytest.raises(ConfigError, match="seed"):
        ExperimentConfig.from_dict(d)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(dict(TINY, seed=-1))


def test_phi_from_dict():
    assert phi_from_dict({"type": "haar"}).integral == 0.0
    with pytest.raises(ConfigError):
        phi_from_dict({"type": "spline"})
    with pytest.raises(ConfigError, match="phi.q"):
        phi_from_dict({"type": "haar", "q": 1})


def test_run_twice_byte_identical(tmp_path):
    cfg = _write(tmp_path, TINY)
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        code = main(["run", str(cfg), "--output", str(out)])
        assert code in (0, 1)
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outs[0] == outs[1]
    assert "summary.json" in outs[0] and "ladder.csv" in outs[0]
    assert outs[0]["ladder.csv"].startswith(b"# schema: ")
    summ = json.loads(outs[0]["summary.json"])
    assert summ["checks"] and all("passed" in c for c in summ["checks"])


def test_worker_count_does_not_change_output(tmp_path, monkeypatch):
    outs = []
    cfg = _write(tmp_path, TINY)
    for w in (1, 3):
        monkeypatch.setenv("HSSSI_THREADS", str(w))
        out = tmp_path / f"w{w}"
        main(["run", str(cfg), "--output", str(out)])
        outs.append((out / "ladder.csv").read_bytes())
    assert outs[0] == outs[1]


def test_localtime_moments_prints_closed_form(capsys):
    assert main(["localtime-moments", "--beta", "1.5", "--t", "1", "--n", "1"]) == 0
    assert capsys.readouterr().out.strip() == "0.862058"


def test_validate_heavy_gamma_out_of_range(capsys):
    assert main(["validate", "--family", "heavy-symmetric", "--gamma1", "1.4", "--beta", "1.5",
                 "--alpha", "1.3333333333"]) == 2
    assert "violation" in capsys.readouterr().err
    assert main(["validate", "--family", "heavy-symmetric", "--gamma1", "1.1", "--beta", "1.5",
                 "--alpha", "1.3333333333"]) == 0


def test_cf_limit_theta_zero(capsys):
    assert main(["cf-limit", "--theta", "0", "--pool-paths", "20", "--dt", "1e-3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# schema:")
    assert lines[2].split(",")[1:3] == ["1.0", "0.0"]


def test_presets_load_and_print(capsys):
    for name in PRESETS:
        assert load_config(preset=name).seed == 42
    assert main(["run", "--preset", "thm1-small", "--print-config"]) == 0
    assert json.loads(capsys.readouterr().out)["experiment"] == "fdd"
    assert main(["run", "--preset", "nope"]) == 2
    d = dict(TINY, options={"workers": 2})
    with pytest.raises(ConfigError, match="options.workers"):
        ExperimentConfig.from_dict(d)


def test_simulate_path_and_samples_pipeline(tmp_path, capsys):
    assert main(["simulate-path", "--seed", "1", "--dt", "0.25"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "# schema: hsssi.path/1" and len(out) == 2 + 5
    d = tmp_path / "r"
    assert main(["rosen", "--seed", "3", "--T", "10", "--replicas", "20", "--output", str(d)]) == 0
    assert (d / "samples_T10.jsonl").exists() and (d / "ladder.csv").exists()


def test_report_aggregates(tmp_path, capsys):
    for name, ok in (("a", True), ("b", False)):
        (tmp_path / name).mkdir()
        (tmp_path / name / "summary.json").write_text(json.dumps(
            {"passed": ok, "checks": [{"name": "x", "passed": ok, "detail": ""}]}))
    assert main(["report", str(tmp_path)]) == 1
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["n_checks"] == 2 and rep["n_failed"] == 1
    assert main(["report", str(tmp_path / "missing")]) == 2
    (tmp_path / "c").mkdir()
    (tmp_path / "c" / "summary.json").write_text(json.dumps(
        {"passed": True, "checks": [{"name": "rung", "passed": False, "required": False, "detail": ""}]}))
    main(["report", str(tmp_path)])
    assert json.loads((tmp_path / "report.json").read_text())["n_failed"] == 1
