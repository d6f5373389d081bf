import json

from risloc.cli import main


def test_sweep_to_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"ris_rows": 4, "ris_cols": 4, "T": 8}))
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", str(cfg), "--designs", "optimal,random:8",
                 "--distances", "1:2", "--out", str(out), "--no-timing"]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 5 and "wall_time_s" not in lines[0]


def test_beams_stdout(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"ris_rows": 4, "ris_cols": 4}))
    assert main(["beams", "--config", str(cfg), "--coordinate", "phi", "--grid-steps", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("phi,gain_1") and len(lines) == 4


def test_optimize_report(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"ris_rows": 8, "ris_cols": 8, "T": 20}))
    assert main(["optimize", "--config", str(cfg), "--pipeline", "A"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert sum(rep["schedule"]) == 20 and rep["pipeline"] == "A"
    assert rep["peb_schedule_m"] >= rep["peb_diag_lambda_m"] >= rep["peb_full_lambda_m"] * (1 - 1e-6)


def test_baseline_and_seed(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"ris_rows": 4, "ris_cols": 4}))
    outs = []
    for seed in ("1", "1", "2"):
        assert main(["baseline", "--config", str(cfg), "--kind", "random", "--seed", seed]) == 0
        outs.append(json.loads(capsys.readouterr().out)["peb_m"])
    assert outs[0] == outs[1] != outs[2]
    assert main(["baseline", "--config", str(cfg), "--kind", "directional", "--radius", "1"]) == 0


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"T": 0}))
    assert main(["optimize", "--config", str(cfg)]) == 2
    assert "T" in capsys.readouterr().err
