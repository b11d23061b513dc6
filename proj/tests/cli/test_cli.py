import json
import os
import subprocess
from pathlib import Path

import jsonschema
import pytest

BIN = str(Path(os.environ.get("CQLIN_BIN", "build/tools/cqlin")).resolve())
SCHEMAS = Path(os.environ.get("CQLIN_SCHEMAS", Path(__file__).resolve().parents[2] / "schemas"))


def schema(name):
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


def run(*args, cwd, env=None, code=0):
    full_env = dict(os.environ)
    full_env.pop("CQLIN_CHASE_BUDGET", None)
    full_env.update(env or {})
    p = subprocess.run([BIN, *map(str, args)], cwd=cwd, env=full_env, capture_output=True, text=True)
    assert p.returncode == code, (p.returncode, p.stdout, p.stderr)
    return p


def run_json(*args, cwd, name, **kw):
    out = json.loads(run(*args, cwd=cwd, **kw).stdout)
    jsonschema.validate(out, schema(name))
    return out


@pytest.fixture
def files(tmp_path):
    (tmp_path / "triangle.q").write_text("q() :- R1(x1,x2), R2(x2,x3), R3(x3,x1).\n")
    (tmp_path / "triangle.tgd").write_text("R1(x1,x2), R2(x2,x3) -> R3(x3,x1).\n")
    (tmp_path / "empty.tgd").write_text("# no rules\n")
    (tmp_path / "path.q").write_text("q(x,y) :- R1(x,y), R2(y,z).\n")
    (tmp_path / "ok.db").write_text("R1(a,b). R2(b,c). R3(c,a).\n")
    (tmp_path / "bad.db").write_text("R1(a,b). R2(b,c).\n")
    (tmp_path / "inf.tgd").write_text("R1(x,y) -> R1(y,z).\n")
    return tmp_path


def test_classify_triangle_boolean(files):
    v = run_json("classify", "triangle.q", "triangle.tgd", "--mode", "boolean", cwd=files, name="verdict")
    assert v["status"] == "TRACTABLE"
    assert v["companion"] is not None


def test_classify_without_rules_is_hard(files):
    v = run_json("classify", "triangle.q", "empty.tgd", "--mode", "boolean", cwd=files, name="verdict")
    assert v["status"] == "CONDITIONALLY_HARD"
    assert v["hypothesis"] == "HYPERCLIQUE"


def test_classify_is_deterministic(files):
    a = run("classify", "path.q", "empty.tgd", "--mode", "count", cwd=files).stdout
    b = run("classify", "path.q", "empty.tgd", "--mode", "count", cwd=files).stdout
    assert a == b


def test_classify_explain(files):
    out = run("classify", "triangle.q", "triangle.tgd", "--explain", cwd=files).stdout
    assert "engine plan: tractable:single_test" in out


def test_malformed_query_exits_1_with_location(files):
    (files / "broken.q").write_text("q() :- R1(x1,x2) R2(x2,x3).\n")
    p = run("classify", "broken.q", "triangle.tgd", cwd=files, code=1)
    assert "line 1" in p.stderr


def test_unknown_mode_is_usage_error(files):
    run("classify", "triangle.q", "triangle.tgd", "--mode", "sideways", cwd=files, code=1)


def test_eval_rejects_violating_database(files):
    p = run("eval", "triangle.q", "bad.db", "--tgds", "triangle.tgd", "--mode", "boolean", cwd=files, code=2)
    assert "violates rule 1" in p.stderr and "x1=a" in p.stderr


def test_eval_unchecked_skips_rule_check(files):
    out = run_json("eval", "triangle.q", "bad.db", "--tgds", "triangle.tgd", "--mode", "boolean", "--unchecked",
                   cwd=files, name="eval")
    assert out["results"][0]["member"] is False


@pytest.mark.parametrize("mode,extra", [
    ("enum", []),
    ("count", []),
    ("all", ["--tuple", "a,b", "--tuple", "b,c"]),
    ("single", ["--tuple", "a,b"]),
    ("access", ["--order", "y,x", "--index", "1", "--index", "9"]),
])
def test_eval_modes_validate(files, mode, extra):
    out = run_json("eval", "path.q", "ok.db", "--mode", mode, *extra, cwd=files, name="eval")
    if mode == "count":
        assert out["count"] == 1
    if mode == "enum":
        assert out["answers"] == [["a", "b"]]


def test_arity_mismatch_exits_2(files):
    (files / "wide.db").write_text("R1(a,b,c).\n")
    p = run("eval", "path.q", "wide.db", cwd=files, code=2)
    assert "R1" in p.stderr


def test_chase_budget_from_env_and_flag(files):
    run("chase", "ok.db", "inf.tgd", cwd=files, env={"CQLIN_CHASE_BUDGET": "20"}, code=3)
    run("chase", "ok.db", "inf.tgd", "--budget", "20", cwd=files, code=3)
    out = run_json("chase", "ok.db", "triangle.tgd", cwd=files, name="chase")
    assert "R3(c,a)." in out["facts"]


def test_config_file_sets_budget_and_format(files):
    (files / "cqlin.toml").write_text('chase_budget = 15\noutput_format = "text"\nseed = 4\n')
    run("chase", "ok.db", "inf.tgd", cwd=files, code=3)
    text = run("chase", "bad.db", "triangle.tgd", cwd=files).stdout
    assert "R3(c,a)." in text
    # flags beat the config file
    run_json("chase", "bad.db", "triangle.tgd", "--format", "json", cwd=files, name="chase")


def test_chase_query(files):
    out = run_json("chase", "triangle.q", "triangle.tgd", "--query", cwd=files, name="chase")
    assert out["query"].startswith("q()")


def test_analyze(files):
    out = run_json("analyze", "triangle.q", "triangle.tgd", cwd=files, name="analyze")
    assert out["structure"]["acyclic"] is False
    assert out["profile"]["full"] is True


def test_tag(files):
    (files / "sjf.db").write_text("R1__0(a,b). R2__1(b,c).\n")
    out = run_json("tag", "triangle.q", "triangle.tgd", "--db", "sjf.db", "-o", "tagged.db", cwd=files, name="tag")
    assert out["method"] == "flood"
    assert (files / "tagged.db").read_text().strip()


def test_gen_is_seed_deterministic(files):
    run("gen", "ex84", "-n", "8", "-m", "10", "--seed", "5", "-o", "a.db", cwd=files)
    run("gen", "ex84", "-n", "8", "-m", "10", "--seed", "5", "-o", "b.db", cwd=files)
    run("gen", "ex84", "-n", "8", "-m", "10", "--seed", "6", "-o", "c.db", cwd=files)
    assert (files / "a.db").read_text() == (files / "b.db").read_text()
    assert (files / "a.db").read_text() != (files / "c.db").read_text()


def test_gen_from_edge_list(files):
    (files / "g.txt").write_text("0 1\n1 2\n0 2\n")
    run("gen", "triangle", "--graph", "g.txt", "-o", "t.db", cwd=files)
    out = run_json("eval", "triangle.q", "t.db", "--mode", "boolean", cwd=files, name="eval")
    assert out["results"][0]["member"] is True


def test_gen_unknown_kind(files):
    run("gen", "hexagon", cwd=files, code=1)


def test_demos(files):
    (files / "u.db").write_text("R1(a,b). R2(b,c). S(b).\n")
    out = run_json("demo", "unary", "u.db", cwd=files, name="demo")
    assert out["answers"] == [["a", "c", "b"]]
    (files / "sq.db").write_text("L(a,d). S(a,c). R(c,b). B(a,b). T(c,d).\n")
    out = run_json("demo", "qsquare", "sq.db", cwd=files, name="demo")
    assert out["answer"] is True
    (files / "none.db").write_text("")
    run_json("demo", "ex83", "none.db", cwd=files, name="demo")
    run("demo", "ex83", "bad.db", cwd=files, code=2)
    (files / "v.db").write_text("S1(a,b).\n")
    run("demo", "ex83", "v.db", cwd=files, code=2)


def test_bench_spec(files):
    (files / "bench.toml").write_text('workload = "count"\nsizes = [1000, 4000]\nthreads = 2\n')
    out = run_json("bench", "--spec", "bench.toml", "--csv", "r.csv", "--seed", "3", cwd=files, name="bench")
    assert [r["size"] for r in out["rows"]] == [1000, 4000]
    assert (files / "r.csv").read_text().startswith("size,facts")
    again = run_json("bench", "--spec", "bench.toml", "--seed", "3", cwd=files, name="bench")
    assert again == out
