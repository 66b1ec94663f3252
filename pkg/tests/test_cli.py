import json

import pytest

from psiepi.cli import OUT_ENV, ManifestError, main, parse_manifest


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_born_check_singlet_ontic(capsys, manifests):
    code, out, _ = run(capsys, "born-check", "--manifest", str(manifests / "singlet_born_ontic.json"))
    rep = json.loads(out)
    assert code == 0 and rep["passed"] and rep["exit_code"] == 0
    assert all(r["max_deviation"] <= 1e-12 for r in rep["results"])
    assert rep["seed"] == json.loads((manifests / "singlet_born_ontic.json").read_text())["seed"]
    assert len(rep["manifest_digest"]) == 64


def test_born_check_epistemic_with_dump(capsys, manifests, tmp_path):
    code, out, _ = run(capsys, "born-check", "--manifest", str(manifests / "cap_born_epistemic.json"),
                       "--out", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "samples.csv").read_text().splitlines()
    assert lines[0] == "in_E0,c2,tau,j,X,Y"
    assert len(lines) == 1 + json.loads(out)["sample_dump_rows"]


def test_corrupted_norm_exits_1(capsys, tmp_path):
    path = write(tmp_path, "bad.json", {"psi": [[1, 0], [1, 0], [0, 0], [0, 0]]})
    code, out, err = run(capsys, "born-check", "--manifest", path)
    assert code == 1 and out == ""
    diag = json.loads(err)
    assert diag["error"] == "invalid_manifest" and "normalized" in diag["message"]


def test_forced_failure_exits_2(capsys, manifests):
    code, out, _ = run(capsys, "born-check", "--manifest", str(manifests / "forced_failure_born.json"))
    assert code == 2 and json.loads(out)["passed"] is False


@pytest.mark.parametrize("raw", [
    {"bogus": 1},
    {"model": "classical"},
    {"samples": 0},
    {"seed": -1},
    {"menuA": [[0, 0, 2]]},
    {"checks": ["XX"]},
    {"priorA": [0.5, 0.6], "menuA": [[0, 0, 1], [1, 0, 0]]},
    {"expect": {"FR": "maybe"}},
])
def test_manifest_validation(raw):
    with pytest.raises(ManifestError):
        parse_manifest(raw)


def test_invalid_json_and_missing_file(capsys, tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    assert run(capsys, "chsh", "--manifest", str(p))[0] == 1
    assert run(capsys, "chsh", "--manifest", str(tmp_path / "nope.json"))[0] == 1
    assert run(capsys, "nonsense")[0] == 1
    assert run(capsys, "zmap", "--workers", "0")[0] == 1


def test_chsh_singlet(capsys, manifests):
    code, out, _ = run(capsys, "chsh", "--manifest", str(manifests / "singlet_chsh_ontic.json"))
    rep = json.loads(out)
    assert code == 0 and rep["exceeds_local_bound"]
    assert abs(abs(rep["oracle_value"]) - rep["tsirelson"]) < 1e-12


def test_chsh_product_state(capsys, manifests):
    code, out, _ = run(capsys, "chsh", "--manifest", str(manifests / "product_chsh_ontic.json"))
    rep = json.loads(out)
    assert code == 0 and abs(rep["mc_value"]) <= 2 + rep["tolerance"]


def test_overlap(capsys, manifests, tmp_path):
    code, out, _ = run(capsys, "overlap", "--manifest", str(manifests / "overlap_pair.json"), "--out", str(tmp_path))
    rep = json.loads(out)
    assert code == 0 and rep["positive"] and rep["certificate"]["lower_bound"] >= 0.01
    assert (tmp_path / "zprofile.csv").read_text().startswith("c2,z\n")
    assert (tmp_path / "overlap-report.json").read_text() == out


def test_overlap_ray_equal_exits_1(capsys, tmp_path):
    path = write(tmp_path, "eq.json", {"psi": [[1, 0], [0, 0], [0, 0], [0, 0]], "psi2": [[0, 1], [0, 0], [0, 0], [0, 0]]})
    assert run(capsys, "overlap", "--manifest", path)[0] == 1


def test_audit_constant_channel(capsys, manifests):
    code, out, _ = run(capsys, "audit", "--manifest", str(manifests / "singlet_audit_constant_z.json"))
    rep = json.loads(out)
    assert code == 0
    assert rep["checks"]["FR"]["status"] == "pass"
    assert rep["checks"]["IMPLICATION"]["premises_hold"] and rep["checks"]["IMPLICATION"]["conclusion_holds"]
    assert set(rep["checks"]) == {"FW", "NS2", "FR", "ST", "IMPLICATION"}


def test_audit_superdeterministic_fixture(capsys, manifests):
    code, out, _ = run(capsys, "audit", "--manifest", str(manifests / "superdeterministic_audit.json"))
    rep = json.loads(out)
    assert code == 2 and rep["source"] == "fixture"
    assert rep["checks"]["FW"]["status"] == "fail"


def test_audit_absolute_implication_tolerance(capsys, tmp_path, manifests):
    raw = {"table": str(manifests / "superdeterministic_table.json"), "checks": ["IMPLICATION"],
           "tolerance": {"implication": 0.5}}
    code, out, _ = run(capsys, "audit", "--manifest", write(tmp_path, "m.json", raw))
    rep = json.loads(out)["checks"]["IMPLICATION"]
    assert code == 0 and rep["tolerance"] == "1/2"


def test_byte_identical_reruns(capsys, manifests, tmp_path):
    args = ("chsh", "--manifest", str(manifests / "singlet_chsh_epistemic.json"))
    first = run(capsys, *args, "--out", str(tmp_path / "a"))[1]
    second = run(capsys, *args, "--out", str(tmp_path / "b"), "--workers", "3")[1]
    assert first == second
    assert (tmp_path / "a" / "chsh-report.json").read_bytes() == (tmp_path / "b" / "chsh-report.json").read_bytes()


def test_seed_override_changes_report(capsys, manifests):
    base = run(capsys, "chsh", "--manifest", str(manifests / "product_chsh_ontic.json"))[1]
    other = run(capsys, "chsh", "--manifest", str(manifests / "product_chsh_ontic.json"), "--seed", "99")[1]
    assert json.loads(other)["seed"] == 99
    assert json.loads(base)["manifest_digest"] != json.loads(other)["manifest_digest"]
    assert run(capsys, "chsh", "--seed", str(2**64))[0] == 1


def test_env_output_dir_and_csv(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path))
    code, out, _ = run(capsys, "zmap", "--points", "5", "--format", "csv")
    assert code == 0
    assert out.splitlines()[0] == "c2,z" and len(out.splitlines()) == 6
    assert (tmp_path / "zmap.csv").read_text() == out
    assert json.loads((tmp_path / "zmap-report.json").read_text())["points"] == 5


def test_timing_only_on_request(capsys):
    assert "timing_seconds" not in json.loads(run(capsys, "zmap", "--points", "3")[1])
    assert "timing_seconds" in json.loads(run(capsys, "zmap", "--points", "3", "--timing")[1])
