import json
import math
from pathlib import Path

import numpy as np
import pytest

from pencil.cli_io import (
    dumps,
    fmt,
    load_schema,
    read_csv,
    run,
    tuple_from_json,
    tuple_to_json,
    validate,
)
from pencil.core_types import laplacian
from pencil.errors import InputError
from pencil.presets import fig1_tuple

LAPLACE = {"ell": 2, "A11": [[1, 0], [0, 1]], "A12": [[0, 0], [0, 0]], "A22": [[1, 0], [0, 1]]}
FIG2LEFT = {"standard_root": {"S": [[0, 0], [0, 2]], "D": [[2, 1], [1, 2]]}}


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, doc in {
        "laplace": LAPLACE,
        "fig1": tuple_to_json(fig1_tuple()),
        "fig2left": FIG2LEFT,
        "indefinite": {"ell": 2, "A11": [[1, 0], [0, -1]], "A12": [[0, 0], [0, 0]], "A22": [[1, 0], [0, 1]]},
        "badschema": {"ell": 2, "A11": [[1, 0], [0, 1]]},
    }.items():
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(doc))
        paths[name] = str(p)
    return paths


def run_json(capsys, argv):
    code = run(argv)
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), (json.loads(err) if err.strip() else None)


def test_classify_laplace(capsys, files):
    code, doc, _ = run_json(capsys, ["classify", files["laplace"]])
    assert code == 0
    assert doc["strongly_elliptic"] and doc["neumann_wellposed"] and doc["contractive_nwp"] and doc["formally_positive"]
    validate(doc, "classify")


def test_root_output(capsys, files):
    code, doc, _ = run_json(capsys, ["root", files["fig1"]])
    assert code == 0
    assert doc["residual"] < 1e-10
    validate(doc, "root")


def test_det_and_sentinel(capsys, files):
    code, doc, _ = run_json(capsys, ["det", files["laplace"], "--bc", "dirichlet", "--alpha", str(math.pi / 2), "--re", "2"])
    assert code == 0
    assert doc["log_abs_det"] == "-inf"
    code, doc, _ = run_json(capsys, ["det", files["laplace"], "--bc", "dirichlet", "--alpha", str(math.pi / 2), "--re", "1"])
    assert doc["log_abs_det"] == pytest.approx(2 * math.log(2))


def test_exponents_laplacian(capsys, files):
    argv = ["exponents", files["laplace"], "--bc", "dirichlet", "--alpha", str(math.pi / 2)]
    argv += ["--re-min", "0.5", "--re-max", "4.5", "--im-min", "-1", "--im-max", "1"]
    code, doc, _ = run_json(capsys, argv)
    assert code == 0
    validate(doc, "exponents")
    lams = sorted((r["re"], r["multiplicity"]) for r in doc["roots"])
    assert [m for _, m in lams] == [2, 2]
    np.testing.assert_allclose([x for x, _ in lams], [2, 4], atol=1e-10)


def test_verify_mixed_at_pi(capsys, files):
    argv = ["verify", files["fig2left"], "--bc", "mixed", "--alpha", "3.14159265358979", "--im-min", "-4", "--im-max", "4"]
    code, doc, _ = run_json(capsys, argv)
    assert code == 0 and doc["ok"]
    for r in doc["roots"]:
        assert abs(r["re"] - round(r["re"] - 0.5) - 0.5) < 1e-7


@pytest.mark.parametrize(
    "argv",
    [
        ["det", "{laplace}", "--bc", "dirichlet", "--alpha", "1", "--re", "0"],
        ["classify", "{indefinite}"],
        ["classify", "{badschema}"],
        ["classify", "/nonexistent/tuple.json"],
        ["det", "{laplace}", "--bc", "dirichlet", "--alpha", "7", "--re", "1"],
        ["classify", "{laplace}", "--no-such-flag"],
        ["lab", "--suite", "bogus"],
    ],
)
def test_input_errors_exit_2(capsys, files, argv):
    argv = [a.format(**files) for a in argv]
    code = run(argv)
    _, err = capsys.readouterr()
    assert code == 2
    if err.strip().startswith("{"):
        validate(json.loads(err), "error")


def test_numerical_error_exit_3(capsys, tmp_path):
    p = tmp_path / "square.json"
    p.write_text(json.dumps({"ell": 1, "A11": [[1]], "A12": [[1]], "A22": [[1]]}))
    code, _, err = run_json(capsys, ["root", str(p)])
    assert code == 3
    assert err["error"] == "NotElliptic"


def test_bad_thread_count(capsys, files, monkeypatch):
    monkeypatch.setenv("PENCIL_THREADS", "lots")
    assert run(["classify", files["laplace"]]) == 2
    monkeypatch.setenv("PENCIL_THREADS", "1")
    assert run(["classify", files["laplace"]]) == 0


def test_lab_summary(capsys):
    code, doc, _ = run_json(capsys, ["lab", "--suite", "mix2", "--seed", "1", "--count", "20"])
    assert code == 0
    assert doc["pass"] == 20
    validate(doc, "lab")


def test_crosscheck_writes_manifest(capsys, files, tmp_path):
    out = tmp_path / "cc.json"
    argv = ["crosscheck", files["laplace"], "--bc", "dirichlet", "--alpha", "1.5707963267948966"]
    argv += ["--re-min", "0.5", "--re-max", "4.5", "--im-min", "-1", "--im-max", "1", "--out", str(out)]
    assert run(argv) == 0
    doc = json.loads(out.read_text())
    assert doc["ok"]
    man = json.loads((tmp_path / "cc.json.manifest.json").read_text())
    validate(man, "manifest")
    assert man["command"] == "crosscheck"
    assert str(out) in man["outputs"]


def test_trace_csv_is_deterministic(capsys, files, tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        argv = ["trace", files["laplace"], "--bc", "dirichlet", "--alpha-start", "1", "--alpha-end", "2"]
        argv += ["--steps", "8", "--re-max", "4", "--out", str(out)]
        code, doc, _ = run_json(capsys, argv)
        assert code == 0
        validate(doc, "trace")
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    text = outs[0].decode()
    assert "\r" not in text
    rows = read_csv(tmp_path / "a.csv")
    assert rows[0] == ["branch_id", "alpha", "re_lambda", "im_lambda", "residual"]
    first = [r for r in rows[1:] if r[0] == "0"]
    assert float(first[0][2]) == pytest.approx(math.pi, abs=1e-9)
    # 17 significant digits round-trip doubles exactly
    assert all(float(fmt(float(r[2]))) == float(r[2]) for r in rows[1:])


def test_numrange_csv(capsys, files, tmp_path):
    out = tmp_path / "w.csv"
    assert run(["numrange", files["fig1"], "--alpha", "2", "--n", "32", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["re", "im"]
    assert len(rows) > 3
    assert all(float(im) > 0 for _, im in rows[1:])


def test_fmt_round_trip():
    for x in (math.pi, 1 / 3, 1e-300, -2.5e17, 0.1 + 0.2):
        assert float(fmt(x)) == x


def test_dumps_handles_special_values():
    text = dumps({"a": float("-inf"), "b": np.float64(1.5), "c": 2 + 3j, "d": np.arange(2)})
    doc = json.loads(text)
    assert doc["a"] == "-inf" and doc["b"] == 1.5 and doc["d"] == [0, 1]


def test_tuple_json_round_trip():
    t = tuple_from_json(tuple_to_json(laplacian(2)))
    np.testing.assert_array_equal(t.a11, np.eye(2))
    t2 = tuple_from_json(FIG2LEFT)
    assert t2.ell == 2
    with pytest.raises(InputError):
        tuple_from_json({"ell": 3, "A11": [[1]], "A12": [[0]], "A22": [[1]]})


def test_schemas_load():
    for name in ("tuple", "manifest", "error", "classify", "root", "det", "exponents", "verify", "oracle",
                 "crosscheck", "lab", "trace", "figure"):
        assert load_schema(name)["$schema"].startswith("https://json-schema.org/")


def test_figure_fig2right(capsys, tmp_path):
    assert run(["figure", "fig2right", "--out-dir", str(tmp_path), "--steps", "16", "--checkpoint", "8"]) == 0
    summary = json.loads((tmp_path / "fig2right_summary.json").read_text())
    validate(summary, "figure")
    assert {f["bc"] for f in summary["families"]} == {"dirichlet", "mixed", "neumann"}
    man = json.loads((tmp_path / "fig2right_manifest.json").read_text())
    assert all(Path(p).exists() for p in man["outputs"])
    csvs = sorted(tmp_path.glob("fig2right_dirichlet_branch*.csv"))
    assert csvs
    d = read_csv(csvs[0])
    n = read_csv(tmp_path / csvs[0].name.replace("dirichlet", "neumann"))
    np.testing.assert_allclose(np.array(d[1:], float)[:, 2], np.array(n[1:], float)[:, 2], atol=1e-8)
