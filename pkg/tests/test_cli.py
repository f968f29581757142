import csv
import io
import subprocess
import sys

import pytest

from iga_solidshell import cli
from iga_solidshell.projection import appendix_constants


def _main(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_run_writes_csv(capsys):
    code, out, _ = _main(["run", "--benchmark", "scordelis", "--formulations", "ss,std", "--elems", "2,3"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0]) == cli.CSV_HEADER
    assert len(rows) == 5
    assert {r[1] for r in rows[1:]} == {"ss", "std"}
    assert {r[3] for r in rows[1:]} == {"2", "3"}
    for r in rows[1:]:
        float(r[6]), float(r[7]), float(r[8])


def test_floats_round_trip(capsys):
    _, out, _ = _main(["run", "--benchmark", "straight", "--formulations", "ss", "--elems", "2",
                       "--slenderness", "100"], capsys)
    row = list(csv.DictReader(io.StringIO(out)))[0]
    res = cli.cmd_run(cli.RunConfig("straight", ("ss",), elems=(2,), slenderness=(100.0,)))[0]
    assert float(row["raw_deflection"]) == res.raw_deflection
    assert len(row["raw_deflection"].replace("-", "").replace(".", "").split("e")[0]) >= 16


def test_no_timing_is_byte_stable(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.csv"
        assert cli.main(["run", "--benchmark", "curved", "--formulations", "ss_ans", "--elems", "2",
                         "--slenderness", "10,100", "--no-timing", "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert b",0.0\n" in outs[0] or b",0\n" in outs[0]


def test_jobs_env_override(monkeypatch, capsys):
    monkeypatch.setenv("IGA_SS_JOBS", "2")
    seen = {}
    orig = cli.cmd_run

    def spy(config, stream=None):
        seen["jobs"] = config.jobs
        return orig(config, stream)

    monkeypatch.setattr(cli, "cmd_run", spy)
    code, out, _ = _main(["run", "--benchmark", "scordelis", "--formulations", "ss,ss_ans", "--elems", "2",
                          "--jobs", "1", "--no-timing"], capsys)
    assert code == 0 and seen["jobs"] == 2
    monkeypatch.delenv("IGA_SS_JOBS")
    serial = io.StringIO()
    cli.cmd_run(cli.RunConfig("scordelis", ("ss", "ss_ans"), elems=(2,), timing=False), serial)
    assert out == serial.getvalue()


def test_bad_jobs_env(monkeypatch, capsys):
    monkeypatch.setenv("IGA_SS_JOBS", "many")
    with pytest.raises(SystemExit) as info:
        cli.main(["run", "--benchmark", "scordelis"])
    assert info.value.code == 2


@pytest.mark.parametrize("args", [
    ["run", "--benchmark", "scordelis", "--formulations", ""],
    ["run", "--benchmark", "scordelis", "--formulations", "ss,mitc"],
    ["run", "--benchmark", "plate"],
    ["run", "--benchmark", "scordelis", "--elems", "0"],
    ["run", "--benchmark", "scordelis", "--elems", "2.5"],
    ["run", "--benchmark", "scordelis", "--slenderness", "100"],
    ["run", "--benchmark", "curved", "--distortion", "10"],
    ["run", "--benchmark", "straight", "--degree", "0"],
    ["run", "--benchmark", "straight", "--jobs", "0"],
    [],
])
def test_usage_errors(args, capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(args)
    assert info.value.code == 2


def test_runtime_error_exit_code(capsys):
    code, _, err = _main(["run", "--benchmark", "straight", "--formulations", "ss", "--distortion", "89"], capsys)
    assert code == 1
    assert "error" in err


def test_verify_passes(capsys):
    code, out, _ = _main(["verify"], capsys)
    assert code == 0
    assert out.count("PASS") == 6 and "FAIL" not in out


def test_verify_detects_perturbed_constants():
    constants = {p: appendix_constants(p) for p in (1, 2)}
    constants[2]["11"] = constants[2]["11"].copy()
    constants[2]["11"][0, 0] += 1e-6
    out = io.StringIO()
    assert cli.cmd_verify(out, constants=constants) == 1
    assert "FAIL  closed-form projector blocks" in out.getvalue()


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "iga_solidshell.cli", "run", "--benchmark", "scordelis",
                           "--formulations", "ss", "--elems", "2", "--no-timing"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.startswith(",".join(cli.CSV_HEADER))
