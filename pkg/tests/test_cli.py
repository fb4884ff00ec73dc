import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from pvsynth.cli import main

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def run(*args):
    out = io.StringIO()
    code = main([str(a) for a in args], out=out)
    return code, out.getvalue()


@pytest.mark.parametrize("cmd, name, code", [
    ("check", "watertank", 0),
    ("check", "watertank_open", 1),
    ("check", "heater_pha", 2),
    ("synth", "watertank_open", 0),
    ("bmc", "watertank_open", 1),
    ("vcs", "thermostat", 0),
    ("reduce", "maxarray", 0),
])
def test_exit_codes(cmd, name, code):
    assert run(cmd, PROBLEMS / f"{name}.pvs")[0] == code


def test_input_errors(tmp_path, capsys):
    assert run("check", tmp_path / "none.pvs")[0] == 3
    bad = tmp_path / "bad.pvs"
    bad.write_text("functions { x : real; }\ninvariant y <= 1;\n")
    assert run("check", bad)[0] == 3
    assert "bad.pvs:2:" in capsys.readouterr().err
    assert run("check", PROBLEMS / "watertank.pvs", "--vc", "nope")[0] == 3
    assert run("frobnicate", bad)[0] == 3


def test_synth_text_output():
    code, out = run("synth", PROBLEMS / "watertank_open.pvs")
    lines = out.splitlines()
    i = lines.index("derived-constraint:")
    assert lines[i + 1:i + 3] == ["  La + in <= Lo", "  in <= out"]
    assert lines[-1] == "weakest: yes"


def test_check_json_and_models():
    code, out = run("check", PROBLEMS / "watertank_open.pvs", "--json")
    d = json.loads(out)
    assert d["status"] == "fails" and d["case"] == 1
    failed = [v for v in d["vcs"] if v["status"] == "fails"]
    assert failed and all(isinstance(x, str) for x in failed[0]["model"].values())


def test_model_format_json():
    code, out = run("check", PROBLEMS / "watertank_open.pvs", "--model-format", "json")
    js = [ln.strip() for ln in out.splitlines() if ln.strip().startswith("{")]
    assert js and isinstance(json.loads(js[0]), dict)


def test_trace_and_reduction_flags():
    _, out = run("synth", PROBLEMS / "watertank_open.pvs", "--trace", "--emit-qe-trace")
    assert "c_f:" in out and "qe:" in out
    _, out = run("check", PROBLEMS / "maxarray.pvs", "--emit-reduction", "--vc", "loop")
    assert "ground clauses:" in out and "inst " in out


def test_output_is_deterministic():
    a = run("synth", PROBLEMS / "insert_open.pvs", "--json")[1]
    b = run("synth", PROBLEMS / "insert_open.pvs", "--json", "--jobs", "2")[1]
    assert a == b


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "pvsynth", "check", str(PROBLEMS / "watertank.pvs")],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.splitlines()[-1] == "result: holds"
