"""CLI behavior: outputs, determinism, error handling, exit codes."""

import json
from pathlib import Path

import pytest

from subgroup_atlas.cli import main


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_analyze_zp3_verdict(tmp_path, capsys):
    out = tmp_path / "report.json"
    code, _, _ = run_cli(
        ["analyze", "--family", "zp", "--p", "3", "--depth", "4",
         "--output", "json", "--out", str(out)],
        capsys,
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["verdict"]["tag"] == "OmegaAlphaN"
    assert doc["verdict"]["params"] == {"alpha": 1, "n": 1}
    assert doc["verdict"]["confidence"] == "Certified"
    assert doc["tower"]["orders"] == [3, 9, 27, 81]
    assert doc["version"] == 1


def test_report_embeds_required_fields(tmp_path, capsys):
    out = tmp_path / "r.json"
    run_cli(
        ["analyze", "--family", "dihedral2", "--depth", "3", "--out", str(out)],
        capsys,
    )
    doc = json.loads(out.read_text())
    for key in ("version", "tower", "lattice", "cb", "verdict"):
        assert key in doc
    assert "horizon" in doc["cb"]
    assert "survivorsPerRank" in doc["cb"]
    assert "evidence" in doc["verdict"]


def test_determinism_across_runs_and_parallelism(tmp_path, capsys):
    paths = [tmp_path / f"r{i}.json" for i in range(3)]
    base = ["analyze", "--family", "zpn", "--p", "3", "--n", "2", "--depth", "3"]
    run_cli(base + ["--out", str(paths[0])], capsys)
    run_cli(base + ["--out", str(paths[1])], capsys)
    run_cli(base + ["--parallel", "--out", str(paths[2])], capsys)
    blobs = [p.read_bytes() for p in paths]
    assert blobs[0] == blobs[1] == blobs[2]


def test_audit_by_name(capsys):
    code, out, _ = run_cli(
        ["audit", "--name", "bn_recurrence", "--n", "40"], capsys
    )
    assert code == 0
    docs = json.loads(out)
    assert docs[0]["name"] == "bn_recurrence"
    assert docs[0]["passed"] is True


def test_audit_name_alias(capsys):
    code, out, _ = run_cli(
        ["audit", "--audit-name", "bn_recurrence", "--n", "10"], capsys
    )
    assert code == 0


def test_audit_all(capsys):
    code, out, _ = run_cli(["audit", "--all", "--output", "table"], capsys)
    assert code == 0
    assert "FAIL" not in out
    assert "goursat_full" in out


def test_lattice_dot_heisenberg(capsys):
    code, out, _ = run_cli(
        ["lattice", "--family", "heisenberg", "--p", "3", "--depth", "1",
         "--output", "dot"],
        capsys,
    )
    assert code == 0
    assert out.count("L1N") == 19


def test_lattice_json(capsys):
    code, out, _ = run_cli(
        ["lattice", "--family", "zp", "--p", "2", "--depth", "3"], capsys
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["lattice"]["countsPerLevel"] == [2, 3, 4]


def test_classify_table(capsys):
    code, out, _ = run_cli(
        ["classify", "--family", "zp", "--p", "2", "--depth", "4",
         "--output", "table"],
        capsys,
    )
    assert code == 0
    assert "OmegaAlphaN" in out


def test_malformed_spec_exits_one(capsys):
    code, _, err = run_cli(["analyze", "--family", "nonsense"], capsys)
    assert code == 1
    assert "error" in err
    assert "usage" in err


def test_missing_family_exits_one(capsys):
    code, _, err = run_cli(["analyze"], capsys)
    assert code == 1


def test_prime_overlap_spec_exits_one(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({
        "family": "product",
        "factors": [
            {"family": "zp", "p": 2, "depth": 2},
            {"family": "zp", "p": 2, "depth": 2},
        ],
    }))
    code, _, err = run_cli(["analyze", "--spec-file", str(spec)], capsys)
    assert code == 1
    assert "share primes" in err


def test_cap_exceeded_exits_one(capsys):
    code, _, err = run_cli(
        ["analyze", "--family", "wilson", "--depth", "10"], capsys
    )
    assert code == 1
    assert "cap" in err


def test_env_cap_override(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SUBGROUP_ATLAS_CAP", "8")
    code, _, err = run_cli(
        ["analyze", "--family", "zp", "--p", "2", "--depth", "4"], capsys
    )
    assert code == 1
    monkeypatch.setenv("SUBGROUP_ATLAS_CAP", "100")
    code, out, _ = run_cli(
        ["classify", "--family", "zp", "--p", "2", "--depth", "4",
         "--output", "table"],
        capsys,
    )
    assert code == 0


def test_goursat_command_inline_json(capsys):
    g = json.dumps({"version": 1, "kind": "cyclic", "n": 4})
    h = json.dumps({"version": 1, "kind": "cyclic", "n": 2})
    code, out, _ = run_cli(["goursat", "--g1", g, "--g2", h], capsys)
    assert code == 0
    docs = json.loads(out)
    assert docs[0]["details"]["subgroup_count"] == 8


def test_goursat_command_spec_files(tmp_path, capsys):
    p1 = tmp_path / "g1.json"
    p2 = tmp_path / "g2.json"
    p1.write_text(json.dumps({"version": 1, "kind": "permutation", "degree": 3,
                              "generators": [[1, 0, 2], [1, 2, 0]]}))
    p2.write_text(json.dumps({"version": 1, "kind": "cyclic", "n": 2}))
    code, out, _ = run_cli(["goursat", "--g1", str(p1), "--g2", str(p2)], capsys)
    assert code == 0


def test_spec_file_analyze(tmp_path, capsys):
    spec = tmp_path / "t.json"
    spec.write_text(json.dumps({"family": "zp", "p": 5, "depth": 3}))
    code, out, _ = run_cli(["analyze", "--spec-file", str(spec)], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["tower"]["primes"] == [5]


def test_custom_tower_spec(tmp_path, capsys):
    spec = tmp_path / "custom.json"
    spec.write_text(json.dumps({
        "family": "custom",
        "levels": [
            {"version": 1, "kind": "cyclic", "n": 2},
            {"version": 1, "kind": "cyclic", "n": 4},
            {"version": 1, "kind": "cyclic", "n": 8},
        ],
        "maps": [[0, 1, 0, 1], [0, 1, 2, 3, 0, 1, 2, 3]],
    }))
    code, out, _ = run_cli(["analyze", "--spec-file", str(spec)], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["lattice"]["countsPerLevel"] == [2, 3, 4]
    assert doc["tower"]["family"] == "custom"


def test_golden_report(tmp_path, capsys):
    golden = Path(__file__).parent / "data" / "golden_zp_2_3.json"
    out = tmp_path / "fresh.json"
    code, _, _ = run_cli(
        ["analyze", "--family", "zp", "--p", "2", "--depth", "3", "--out", str(out)],
        capsys,
    )
    assert code == 0
    assert out.read_bytes() == golden.read_bytes()


def test_analyze_dot_output(capsys):
    code, out, _ = run_cli(
        ["analyze", "--family", "zp", "--p", "2", "--depth", "3", "--output", "dot"],
        capsys,
    )
    assert code == 0
    assert "digraph lattice" in out
    assert "doublecircle" in out


def test_hxz_audit_via_cli(capsys):
    code, out, _ = run_cli(
        ["audit", "--name", "solitary_criterion_hxz", "--family", "wilson"], capsys
    )
    assert code == 0
    docs = json.loads(out)
    assert docs[0]["passed"] is True


def test_product_analyze_via_cli(tmp_path, capsys):
    spec = tmp_path / "prod.json"
    spec.write_text(json.dumps({
        "family": "product",
        "factors": [
            {"family": "zp", "p": 2, "depth": 4},
            {"family": "zp", "p": 3, "depth": 4},
        ],
    }))
    code, out, _ = run_cli(["analyze", "--spec-file", str(spec)], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["verdict"]["tag"] == "OmegaAlphaN"
    assert doc["verdict"]["params"] == {"alpha": 2, "n": 1}


def test_conflict_exit_code_two(monkeypatch, capsys):
    import subgroup_atlas.report as report_mod
    from subgroup_atlas.classify import Verdict, analyze_tower

    real = analyze_tower

    def doctored(t, max_rank=None, parallel=False):
        lt, rep, v = real(t, max_rank=max_rank, parallel=parallel)
        bad = Verdict("Undetermined", {}, "EmpiricalOnly", v.evidence, conflict=True)
        return lt, rep, bad

    monkeypatch.setattr(report_mod, "analyze_tower", doctored)
    code, _, _ = run_cli(
        ["analyze", "--family", "zp", "--p", "2", "--depth", "3"], capsys
    )
    assert code == 2
