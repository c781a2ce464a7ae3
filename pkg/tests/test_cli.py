import json
from pathlib import Path

from mapbones.cli import main


def run_cli(*argv):
    return main(list(argv))


def read_json(path):
    return json.loads(Path(path).read_text())


def test_orderdata(tmp_path):
    out = tmp_path / "od"
    assert run_cli("orderdata", "--n", "3", "--out", str(out)) == 0
    data = read_json(out / "orderdata.json")
    assert data["count"] == 5
    manifest = read_json(out / "manifest.json")
    assert manifest["command"] == "orderdata"
    assert "orderdata.json" in manifest["artifacts"]


def test_orderdata_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_cli("orderdata", "--n", "4", "--out", str(a))
    run_cli("orderdata", "--n", "4", "--out", str(b))
    assert (a / "orderdata.json").read_bytes() == (b / "orderdata.json").read_bytes()


def test_bones_st_period4(tmp_path):
    out = tmp_path / "bones"
    assert run_cli("bones", "--family", "st", "--period", "4",
                   "--out", str(out)) == 0
    names = {p.name for p in out.glob("*.bone.json")}
    assert len(names) == 4
    assert sum(1 for n in names if "left" in n) == 2
    blob = read_json(out / "bone_left_4_0.bone.json")
    assert blob["side"] == "left"
    assert blob["w0"] == "1/2^1"


def test_trace_q_period2(tmp_path):
    out = tmp_path / "trace"
    assert run_cli("trace", "--period", "2", "--side", "left",
                   "--out", str(out)) == 0
    blob = read_json(out / "bone_left_2_0.bone.json")
    kinds = {v["kind"] for v in blob["vertices"]}
    assert kinds == {"boundary", "primary"}
    csv = (out / "bone_left_2_0.csv").read_text().splitlines()
    assert csv[0] == "v,w"
    assert len(csv) == len(blob["polyline"]) + 1


def test_entropy_grid_files(tmp_path):
    out = tmp_path / "grid"
    assert run_cli("entropy-grid", "--family", "q", "--res", "8",
                   "--kmax", "8", "--lap-budget", "50000",
                   "--out", str(out)) == 0
    lines = (out / "grid.csv").read_text().strip().splitlines()
    assert len(lines) == 65
    assert (out / "grid.pgm").read_bytes().startswith(b"P5\n8 8\n255\n")


def test_worker_independence(tmp_path):
    a, b = tmp_path / "w1", tmp_path / "w2"
    run_cli("entropy-grid", "--family", "q", "--res", "8", "--kmax", "8",
            "--lap-budget", "50000", "--workers", "1", "--out", str(a))
    run_cli("entropy-grid", "--family", "q", "--res", "8", "--kmax", "8",
            "--lap-budget", "50000", "--workers", "2", "--out", str(b))
    assert (a / "grid.csv").read_bytes() == (b / "grid.csv").read_bytes()
    assert (a / "grid.pgm").read_bytes() == (b / "grid.pgm").read_bytes()


def test_isentrope_command(tmp_path):
    out = tmp_path / "iso"
    assert run_cli("isentrope", "--res", "16", "--kmax", "8", "--h0", "0.5",
                   "--lap-budget", "50000", "--out", str(out)) == 0
    blob = read_json(out / "isentrope.json")
    assert blob["components"] >= 1
    assert (out / "overlay.pgm").exists()


def test_skeleton_command(tmp_path):
    out = tmp_path / "skel"
    assert run_cli("skeleton", "--family", "st", "--n", "1",
                   "--out", str(out)) == 0
    blob = read_json(out / "skeleton.json")
    assert blob["euler"] == 2


def test_intersections_command(tmp_path):
    out = tmp_path / "xs"
    assert run_cli("intersections", "--family", "st", "--period", "4",
                   "--out", str(out)) == 0
    blob = read_json(out / "intersections.json")
    kinds = {r["kind"] for r in blob["intersections"]}
    assert kinds == {"primary", "secondary"}


def test_classify_command(tmp_path, capsys):
    out = tmp_path / "cls"
    assert run_cli("classify", "--v", "0.5", "--w", "0.5",
                   "--out", str(out)) == 0
    blob = read_json(out / "classification.json")
    assert blob["kind"] == "bitransitive"


def test_audit_command(tmp_path):
    out = tmp_path / "audit"
    assert run_cli("audit-monotonicity", "--period", "2", "--samples", "8",
                   "--kmax", "10", "--lap-budget", "50000",
                   "--out", str(out)) == 0
    blob = read_json(out / "audit.json")
    assert blob["passed"] is True


def test_domain_error_exit_code(tmp_path):
    out = tmp_path / "bad"
    code = run_cli("entropy-grid", "--family", "st", "--res", "24",
                   "--out", str(out))
    assert code == 1
    err = read_json(out / "errors.json")
    assert err["error"] == "DomainError"


def test_usage_error_exit_code(tmp_path):
    assert run_cli("entropy-grid", "--family", "nope", "--res", "8",
                   "--out", str(tmp_path / "x")) == 2
