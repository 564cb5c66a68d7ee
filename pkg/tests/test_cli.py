import json
import os
import subprocess
import sys

import pytest

from pwlmelnikov.cli import main
from pwlmelnikov.model import PerturbationSpec


def write_spec(tmp_path, spec, name="spec.json"):
    path = tmp_path / name
    path.write_text(spec.dumps())
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_closed_form(tmp_path, capsys):
    cfg = write_spec(tmp_path, PerturbationSpec.unit(1, "a_plus", (0, 0)))
    out_dir = str(tmp_path / "out")
    code, out, _ = run(["closed-form", "--config", cfg, "--out", out_dir], capsys)
    assert code == 0
    obj = json.loads(out)
    assert obj["f"] == ["-2"] and obj["g"] == []
    assert os.path.exists(os.path.join(out_dir, "closed_form.json"))
    man = json.load(open(os.path.join(out_dir, "closed-form_manifest.json")))
    assert man["command"] == "closed-form" and man["config_path"] == cfg
    assert man["outputs"] and "tool_version" in man


def test_closed_form_sample(tmp_path, capsys, rng):
    from pwlmelnikov.model import random_spec

    cfg = write_spec(tmp_path, random_spec(3, rng))
    out_dir = str(tmp_path / "out")
    code, out, _ = run(["closed-form", "--config", cfg, "--out", out_dir, "--sample", "20"], capsys)
    assert code == 0 and json.loads(out)["sample_max_abs_diff"] <= 1e-9
    lines = open(os.path.join(out_dir, "closed_form_sample.csv")).read().splitlines()
    assert len(lines) == 21 and all(float(l.split(",")[3]) <= 1e-9 for l in lines[1:])


def test_malformed_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, out, err = run(["closed-form", "--config", str(bad), "--out", str(tmp_path / "o")], capsys)
    assert code == 2 and out == ""
    assert "line 1" in err
    bad.write_text(json.dumps({"n": 1, "plus": {}, "minus": {}, "extra": 1}))
    code, out, _ = run(["zeros", "--config", str(bad), "--out", str(tmp_path / "o")], capsys)
    assert code == 2 and out == ""


def test_unknown_flag_is_input_error(capsys):
    assert main(["zeros", "--bogus"]) == 2


def test_eval_and_zeros(tmp_path, capsys):
    cfg = write_spec(tmp_path, PerturbationSpec.unit(1, "a_minus", (0, 0)))
    code, out, _ = run(["eval", "--config", cfg, "--h", "3/4", "--oracle", "--out", str(tmp_path / "o")],
                       capsys)
    rows = json.loads(out)
    assert code == 0 and rows[0]["melnikov"] == pytest.approx(1.0) and rows[0]["oracle"] == pytest.approx(1.0)
    code, out, _ = run(["zeros", "--config", cfg, "--out", str(tmp_path / "o")], capsys)
    assert code == 0 and json.loads(out)["report"]["count"] == 0
    code, _, _ = run(["eval", "--config", cfg, "--h", "2", "--out", str(tmp_path / "o")], capsys)
    assert code == 2


def test_expand(tmp_path, capsys):
    cfg = write_spec(tmp_path, PerturbationSpec.unit(2, "a_plus", (1, 0)))
    code, out, _ = run(["expand", "--config", cfg, "--order", "3", "--out", str(tmp_path / "o")], capsys)
    obj = json.loads(out)
    assert code == 0 and set(obj) == {"homoclinic", "hopf"}
    assert obj["homoclinic"]["terms"][0]["log_power"] == 1


def test_construct_and_rank(tmp_path, capsys):
    code, out, err = run(["construct", "--kind", "hopf", "--n", "2", "--out", str(tmp_path / "o")], capsys)
    obj = json.loads(out)
    assert code == 0 and obj["found"] == obj["predicted"] == 3
    assert os.path.exists(tmp_path / "o" / "ledger.json")
    code, out, _ = run(["rank", "--which", "tilde-a1", "--n", "7", "--out", str(tmp_path / "o")], capsys)
    assert code == 0 and json.loads(out)["rank"] == 4
    code, out, _ = run(["rank", "--which", "homoclinic", "--n", "3", "--out", str(tmp_path / "o")], capsys)
    assert code == 0 and json.loads(out)["rank"] == 6


@pytest.mark.parametrize("theorem", ["1.2", "appendix"])
def test_reproduce(theorem, tmp_path, capsys):
    code, out, err = run(["reproduce", "--theorem", theorem, "--samples", "20", "--seed", "1",
                          "--out", str(tmp_path / "o")], capsys)
    obj = json.loads(out)
    assert code == 0 and obj["ok"] and not obj["failures"]
    assert "rank" in err or "found" in err


def test_simulate_exit_codes(tmp_path, capsys):
    cfg = write_spec(tmp_path, PerturbationSpec.unit(1, "a_minus", (0, 0)))
    code, out, _ = run(["simulate", "--config", cfg, "--epsilon", "0.5", "--out", str(tmp_path / "o")], capsys)
    assert code != 0 and out == ""
    zero = write_spec(tmp_path, PerturbationSpec(1), "zero.json")
    code, out, _ = run(["simulate", "--config", zero, "--epsilon", "1/1000", "--grid", "8",
                        "--out", str(tmp_path / "o")], capsys)
    assert code == 0 and json.loads(out)["fixed_points"] == []


def test_simulate_is_deterministic(tmp_path):
    spec = PerturbationSpec(1, a_minus={(0, 0): 1, (1, 0): -3})
    cfg = write_spec(tmp_path, spec)
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        argv = [sys.executable, "-m", "pwlmelnikov", "simulate", "--config", cfg, "--epsilon", "1e-3",
                "--fixed-step", "1/100", "--grid", "8", "--trace", "--seed", "5", "--out", str(d)]
        res = subprocess.run(argv, capture_output=True, text=True, check=True)
        files = {name: (d / name).read_bytes() for name in sorted(os.listdir(d)) if "manifest" not in name}
        outs.append((res.stdout, files))
    assert outs[0] == outs[1]


def test_config_round_trip(tmp_path, capsys, rng):
    from pwlmelnikov.model import random_spec

    spec = random_spec(2, rng, density=0.5)
    cfg = write_spec(tmp_path, spec)
    code, out, _ = run(["closed-form", "--config", cfg, "--out", str(tmp_path / "o")], capsys)
    assert code == 0 and PerturbationSpec.from_json(json.loads(out)["spec"]) == spec
