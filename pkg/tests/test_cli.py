"""CLI subcommands and exit codes."""

import mistakelab as ml
from mistakelab.cli import main


def test_dims_output(capsys):
    assert main(["dims", "--class", "thresholds:7"]) == 0
    out = capsys.readouterr().out
    assert out.strip() == "vc=1, littlestone=3, vcl_depth=1"


def test_dims_cap_rendering(capsys):
    assert main(["dims", "--class", "full:20", "--cap", "4"]) == 0
    out = capsys.readouterr().out
    assert "littlestone=>=4" in out and "vcl_depth=>=4" in out


def test_dims_witness_file(tmp_path, capsys):
    out_path = tmp_path / "wit.txt"
    assert main(["dims", "--class", "full:3", "--witness", "--out", str(out_path)]) == 0
    text = out_path.read_text()
    assert "bfs_index,parent,edge_pattern,points" in text


def test_run_writes_csv(tmp_path):
    out = tmp_path / "trace.csv"
    rc = main(
        ["run", "--class", "thresholds:7", "--T", "12", "--seed", "3", "--out", str(out)]
    )
    assert rc == 0
    trace = ml.harness.read_trace_csv(out)
    assert len(trace.rows) == 12
    assert trace.metadata["seed"] == "3"


def test_run_svg(tmp_path):
    out = tmp_path / "trace.svg"
    rc = main(
        ["run", "--class", "thresholds:7", "--T", "12", "--seed", "3",
         "--out", str(out), "--format", "svg"]
    )
    assert rc == 0
    assert out.read_text().startswith("<svg")


def test_run_learner_parameter_flags(tmp_path):
    out = tmp_path / "wm.csv"
    rc = main(
        ["run", "--class", "thresholds:5", "--learner", "wm", "--experts-max", "3",
         "--T", "8", "--seed", "1", "--out", str(out)]
    )
    assert rc == 0
    trace = ml.harness.read_trace_csv(out)
    assert trace.metadata["experts_max"] == "3"


def test_adversary_csv(capsys):
    rc = main(
        ["adversary", "--kind", "vcl", "--class", "full:31", "--depth", "5",
         "--seed", "1"]
    )
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,point_id,y,node_bfs_index,on_path"
    assert len(lines) == 32


def test_experts_listing(capsys):
    assert main(["experts", "--max", "6"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines == ["", "1", "2", "3", "4", "1 2"]


def test_check_subcommand(capsys):
    rc = main(["check", "--kind", "c2", "--class", "singletons:5"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("# kind=c2")


def test_exit_code_config_error(capsys):
    assert main(["dims", "--class", "warp:3"]) == 2


def test_exit_code_infeasible(capsys):
    rc = main(["adversary", "--kind", "vcl", "--class", "thresholds:7",
               "--depth", "2", "--seed", "0"])
    assert rc == 3


def test_config_file_drives_run(tmp_path, capsys):
    cfg = tmp_path / "exp.ini"
    cfg.write_text(
        "[trial]\nT = 6\nseed = 2\n[class]\nspec = singletons:4\n"
        "[learner]\nname = soa\n"
    )
    assert main(["run", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "# class=singletons:4" in out
    assert out.strip().splitlines()[-1].startswith("6,")
