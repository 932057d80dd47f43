"""End-to-end checks of the median-meta command line tool."""

import json
import math
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema
from referencing import Registry, Resource

BINARY = sys.argv[1]
ROOT = Path(sys.argv[2])
FIXTURES = ROOT / "fixtures"
SCHEMAS = {name: json.loads((ROOT / "schema" / f"{name}.schema.json").read_text())
           for name in ("analysis", "simulate", "error")}
REGISTRY = Registry().with_resource("error.schema.json", Resource.from_contents(SCHEMAS["error"]))

failures = []


def check(name, condition, detail=""):
    print(("ok   " if condition else "FAIL ") + name + (f": {detail}" if detail and not condition else ""))
    if not condition:
        failures.append(name)


def run(*args):
    return subprocess.run([BINARY, *map(str, args)], capture_output=True, text=True, timeout=300)


def validate(instance, schema):
    try:
        jsonschema.Draft202012Validator(SCHEMAS[schema], registry=REGISTRY).validate(instance)
        return True, ""
    except jsonschema.ValidationError as e:
        return False, e.message


def close(a, b, tol=1e-9):
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(close(a[k], b[k], tol) for k in a)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(close(x, y, tol) for x, y in zip(a, b))
    if isinstance(a, float) or isinstance(b, float):
        if a is None or b is None:
            return a is b
        return math.isclose(a, b, rel_tol=tol, abs_tol=tol)
    return a == b


def test_analyze_golden():
    r = run("analyze", FIXTURES / "tb.csv", "--methods", "qe,mdm,wan,luo")
    check("analyze exits 0", r.returncode == 0, r.stderr)
    out = json.loads(r.stdout)
    ok, msg = validate(out, "analysis")
    check("analyze output matches schema", ok, msg)
    golden = json.loads((ROOT / "tests" / "golden" / "tb_analysis.json").read_text())
    check("analyze output matches golden file", close(out, golden))
    pooled = {m["method"]: m["pooled"] for m in out["methods"]}
    check("TB MDM pooled is 1", pooled["mdm"]["estimate"] == 1.0)
    check("TB QE pooled in [0.8, 1.3]", 0.8 <= pooled["qe"]["estimate"] <= 1.3)
    check("TB QE I2 at least 95", pooled["qe"]["i2"] >= 95.0)


def test_analyze_svg_and_outfile():
    with tempfile.TemporaryDirectory() as tmp:
        svg = Path(tmp) / "forest.svg"
        out = Path(tmp) / "out.json"
        r = run("analyze", FIXTURES / "tb.csv", "--methods", "qe,mdm", "--svg", svg, "-o", out)
        check("analyze with --svg exits 0", r.returncode == 0, r.stderr)
        text = svg.read_text()
        check("SVG has one row per study", text.count('<g class="study"') == 9)
        check("SVG has one diamond per method", text.count('class="diamond"') == 2)
        ok, msg = validate(json.loads(out.read_text()), "analysis")
        check("-o file matches schema", ok, msg)


def test_errors():
    r = run("analyze", FIXTURES / "does_not_exist.csv")
    check("missing input exits 2", r.returncode == 2)
    ok, msg = validate(json.loads(r.stdout), "error")
    check("missing input prints error JSON", ok, msg)
    r = run("simulate", "--reps", "0")
    check("--reps 0 exits nonzero", r.returncode != 0)
    r = run("analyze", FIXTURES / "tb.csv", "--methods", "qe,bogus")
    check("unknown method exits 2", r.returncode == 2)
    r = run("analyze", FIXTURES / "tb.csv", "--methods", "qe-bc")
    check("qe-bc without densities exits 1", r.returncode == 1)
    out = json.loads(r.stdout)
    check("failed method reported in place", out["methods"][0]["status"] == "error")


def test_simulate_reproducible():
    args = ("simulate", "--reps", "20", "--seed", "11", "--reporting", "s2", "--methods", "wan,mdm,qe")
    first = run(*args)
    second = run(*args, "--threads", "1")
    check("simulate exits 0", first.returncode == 0, first.stderr)
    check("simulate is byte-identical across runs and thread counts", first.stdout == second.stdout)
    ok, msg = validate(json.loads(first.stdout), "simulate")
    check("simulate output matches schema", ok, msg)
    check("simulate reports progress on stderr", "20/20 replications" in first.stderr)


def test_simulate_config_file():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = Path(tmp) / "cell.cfg"
        cfg.write_text("# small cell\nstudies = 5\nreps = 4\noutcome = mixture\nmethods = mdm,qe\n")
        csv = Path(tmp) / "m.csv"
        r = run("simulate", "--config", cfg, "--csv", csv)
        check("simulate --config exits 0", r.returncode == 0, r.stderr)
        out = json.loads(r.stdout)
        check("config file values applied", out["config"]["studies"] == 5 and out["config"]["reps"] == 4)
        check("metrics CSV has a row per method", len(csv.read_text().strip().splitlines()) == 3)


def test_example():
    r = run("example")
    check("example exits 0", r.returncode == 0)
    check("example names the fixture", "tb.csv" in r.stdout)


for test in (test_analyze_golden, test_analyze_svg_and_outfile, test_errors,
             test_simulate_reproducible, test_simulate_config_file, test_example):
    try:
        test()
    except Exception as e:  # report and continue with the remaining checks
        check(test.__name__, False, repr(e))

print(f"{len(failures)} failed")
sys.exit(1 if failures else 0)
