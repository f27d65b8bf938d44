import io
import json

import pytest

from dtnheat.cli import main


def run(*argv):
    out = io.StringIO()
    try:
        code = main(list(argv), out)
    except SystemExit as exc:
        code = exc.code
    return code, out.getvalue()


def test_expand_first_coefficient():
    code, text = run("expand", "--dim", "4", "--max-k", "1")
    assert code == 0
    assert "ahat_1 = 2/3*kappa[1] + 2/3*kappa[2] + 2/3*kappa[3] + phi[4]" in text
    assert "matches" in text


def test_expand_json():
    code, text = run("expand", "--dim", "3", "--max-k", "0", "--format", "json")
    assert code == 0
    doc = json.loads(text)
    assert doc["schema"] == 1
    assert doc["coefficients"][0]["ahat"] == "1"


def test_json_is_reproducible():
    args = ("verify", "coefficients", "--dims", "3..4", "--max-k", "2", "--seed", "7", "--format", "json")
    first, second = run(*args), run(*args)
    assert first[0] == 0
    assert first[1] == second[1]
    assert json.loads(first[1])["summary"]["passed"]


def test_expand_out_of_range_is_usage_error():
    assert run("expand", "--dim", "2", "--max-k", "2")[0] == 2


@pytest.mark.parametrize(
    "argv",
    [("bogus",), ("verify", "factorization", "--dim", "4", "--depth", "5"), ("verify", "coefficients", "--dims", "x")],
)
def test_usage_errors(argv):
    assert run(*argv)[0] == 2


def test_verify_moments_and_geometry():
    code, text = run("verify", "moments", "--dims", "3", "--max-degree", "2", "--max-p", "2")
    assert code == 0 and text.startswith("PASS")
    assert run("verify", "geometry", "--dims", "3")[0] == 0


def test_verify_factorization():
    assert run("verify", "factorization", "--dim", "3", "--depth", "2")[0] == 0


def test_numeric_disk():
    code, text = run("numeric", "disk", "--phi", "0,0,0.5", "--format", "json")
    assert code == 0
    doc = json.loads(text)
    a1 = doc["coefficients"][1]
    assert a1["predicted"] == -1.0 and a1["pass"]
    assert a1["fitted"] == pytest.approx(-1.0, abs=1e-3)


def test_geometry_report():
    code, text = run("geometry", "--dim", "3", "--scenario", "ball", "--format", "json")
    assert code == 0
    doc = json.loads(text)
    assert doc["H"] == "2" and doc["boundaryScalar"] == "2"
