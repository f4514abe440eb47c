import json

import numpy as np
import pytest

from framesphere.cli import (
    main,
    read_operator_json,
    read_samples_csv,
    write_operator_json,
    write_samples_csv,
)
from framesphere.frame import OperatorMatrix
from framesphere.measure import RngStream, sphere_sample_batch
from framesphere.polynomials import BiDegreePolynomial


def _operator_file(tmp_path, entries, name="op.json"):
    path = tmp_path / name
    write_operator_json(path, OperatorMatrix(np.asarray(entries, dtype=complex)))
    return str(path)


def _quartic_samples_file(tmp_path, count=400, name="quartic.csv"):
    poly = BiDegreePolynomial.monomial(3, (2, 0, 0), (2, 0, 0))
    pts = sphere_sample_batch(3, count, RngStream(seed=99))
    path = tmp_path / name
    write_samples_csv(path, pts, poly.evaluate_batch(pts))
    return str(path)


def _quadratic_samples_file(tmp_path, name="quad.csv"):
    gen = np.random.default_rng(98)
    b = gen.uniform(-1, 1, (3, 3)) + 1j * gen.uniform(-1, 1, (3, 3))
    a = (b + np.conj(b.T)) / 2
    pts = sphere_sample_batch(3, 400, RngStream(seed=97))
    vals = np.einsum("sk,kl,sl->s", np.conj(pts), a, pts)
    path = tmp_path / name
    write_samples_csv(path, pts, vals)
    return str(path), a


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def test_operator_json_round_trip(tmp_path):
    entries = np.array([[1.0, 2j, 0], [-2j, 0.5, 1], [0, 1, -1]])
    path = _operator_file(tmp_path, entries)
    back = read_operator_json(path)
    assert np.array_equal(back.entries, entries)


def test_samples_csv_round_trip(tmp_path):
    pts = sphere_sample_batch(3, 7, RngStream(seed=1))
    vals = np.arange(7) + 1j
    path = tmp_path / "s.csv"
    write_samples_csv(path, pts, vals)
    back_pts, back_vals = read_samples_csv(path)
    assert np.array_equal(back_pts, pts)
    assert np.array_equal(back_vals, vals)


def test_samples_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x_1,x_2,f\n1,0,1\n")
    with pytest.raises(Exception, match="header"):
        read_samples_csv(str(path))


def test_samples_csv_names_bad_field(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("re_1,re_2,re_3,im_1,im_2,im_3,f_re,f_im\n1,0,0,0,0,oops,1,0\n")
    with pytest.raises(Exception, match="oops"):
        read_samples_csv(str(path))


# ---------------------------------------------------------------------------
# verify-frame
# ---------------------------------------------------------------------------


def test_verify_frame_accepts_quadratic_form(tmp_path, capsys):
    path = _operator_file(tmp_path, np.diag([1.0, 2.0, 3.0]))
    code = main(["verify-frame", "--input", path])
    payload = json.loads(capsys.readouterr().out)
    assert code == 0
    assert payload["verdict"] is True
    assert payload["weight"]["mean"] == pytest.approx([6.0, 0.0])
    assert payload["weight"]["verdict"] is True
    assert payload["residual"]["l2_norm"] < 1e-10
    assert payload["reconstruction"]["cross_method_gap"] < 1e-10
    assert payload["hermitian_check"]["consistent"] is True
    assert payload["additivity_max_error"] < 1e-10
    rec = OperatorMatrix.from_dict(payload["reconstruction"]["operator"])
    assert np.max(np.abs(rec.entries - np.diag([1.0, 2.0, 3.0]))) < 1e-10


def test_verify_frame_rejects_quartic_samples(tmp_path, capsys):
    path = _quartic_samples_file(tmp_path)
    code = main(["verify-frame", "--input", path])
    payload = json.loads(capsys.readouterr().out)
    assert code == 1
    assert payload["verdict"] is False
    flagged = {(row["p"], row["q"]): row["norm_sq"] for row in payload["residual"]["components"]}
    assert flagged[(2, 2)] == pytest.approx(1 / 300, rel=1e-6)
    assert payload["weight"]["n_bases"] == 0  # scattered data: no basis sums


def test_verify_frame_accepts_quadratic_samples(tmp_path, capsys):
    path, a = _quadratic_samples_file(tmp_path)
    code = main(["verify-frame", "--input", path])
    payload = json.loads(capsys.readouterr().out)
    assert code == 0
    assert payload["verdict"] is True
    rec = OperatorMatrix.from_dict(payload["reconstruction"]["operator"])
    assert np.max(np.abs(rec.entries - a)) < 1e-10


def test_verify_frame_is_deterministic(tmp_path):
    op = _operator_file(tmp_path, np.diag([1.0, 2.0, 3.0]))
    out = tmp_path / "report.json"
    assert main(["verify-frame", "--input", op, "--output", str(out)]) == 0
    first = out.read_bytes()
    assert main(["verify-frame", "--input", op, "--output", str(out)]) == 0
    assert out.read_bytes() == first


# ---------------------------------------------------------------------------
# decompose
# ---------------------------------------------------------------------------


def test_decompose_identity_operator(tmp_path, capsys):
    path = _operator_file(tmp_path, np.eye(3))
    code = main(["decompose", "--input", path])
    out = capsys.readouterr().out.splitlines()
    assert code == 0
    assert out[0] == "p,q,dim,component_l2_norm"
    assert out[1] == "0,0,1,1.0"
    assert len(out) == 2  # the identity form is purely constant


def test_decompose_quartic_samples(tmp_path, capsys):
    path = _quartic_samples_file(tmp_path)
    code = main(["decompose", "--input", path])
    out = capsys.readouterr().out.splitlines()
    assert code == 0
    rows = {tuple(map(int, line.split(",")[:2])): line.split(",") for line in out[1:]}
    assert set(rows) == {(0, 0), (1, 1), (2, 2)}
    assert float(rows[(0, 0)][3]) == pytest.approx(1 / 6, abs=1e-9)
    assert float(rows[(1, 1)][3]) == pytest.approx(np.sqrt(8 / 225), abs=1e-9)
    assert float(rows[(2, 2)][3]) == pytest.approx(np.sqrt(1 / 300), abs=1e-9)
    assert rows[(1, 1)][2] == "8"  # dim H_(1,1) = n^2 - 1


# ---------------------------------------------------------------------------
# zonal-table
# ---------------------------------------------------------------------------


def test_zonal_table_golden_rows(capsys):
    code = main(["zonal-table", "--max-bidegree", "2"])
    out = capsys.readouterr().out.splitlines()
    assert code == 0
    assert out[0] == "p,q,value_at_1,value_at_0,basis_sum"
    table = {tuple(map(int, line.split(",")[:2])): line.split(",")[2:] for line in out[1:]}
    assert table[(0, 0)] == ["1", "1", "3"]
    assert table[(1, 0)] == ["2", "0", "2"]
    assert table[(0, 1)] == ["2", "0", "2"]
    assert table[(1, 1)] == ["4", "-2", "0"]  # the selection rule row
    sums = {j: vals[2] for j, vals in table.items()}
    assert [j for j, s in sums.items() if s == "0"] == [(1, 1)]


# ---------------------------------------------------------------------------
# character-check
# ---------------------------------------------------------------------------


def test_character_check_statistics(tmp_path):
    out = tmp_path / "chars.csv"
    code = main(
        ["character-check", "--samples", "4000", "--max-bidegree", "2", "--output", str(out)]
    )
    lines = out.read_text().splitlines()
    assert code == 0
    assert lines[0] == "p1,q1,p2,q2,mean_re,mean_im,stderr,expected,within_4_stderr"
    rows = [line.split(",") for line in lines[1:]]
    trivial = next(r for r in rows if r[:4] == ["0", "0", "0", "0"])
    assert float(trivial[4]) == 1.0 and float(trivial[6]) == 0.0
    assert all(r[8] == "True" for r in rows)


# ---------------------------------------------------------------------------
# gleason-demo
# ---------------------------------------------------------------------------


def test_gleason_demo_maximally_mixed(tmp_path, capsys):
    path = _operator_file(tmp_path, np.eye(3))
    code = main(["gleason-demo", "--input", path])
    payload = json.loads(capsys.readouterr().out)
    assert code == 0
    assert payload["verdict"] is True
    assert payload["positive"] is True
    assert payload["warnings"] == []
    assert payload["additivity_error"] < 1e-12
    by_rank = {m["rank"]: m["measure"] for m in payload["projector_measures"]}
    assert by_rank[1] == pytest.approx(1 / 3, abs=1e-12)
    assert by_rank[2] == pytest.approx(2 / 3, abs=1e-12)


def test_gleason_demo_flags_negative_eigenvalues(tmp_path, capsys):
    path = _operator_file(tmp_path, np.diag([0.8, 0.5, -0.3]))
    code = main(["gleason-demo", "--input", path])
    payload = json.loads(capsys.readouterr().out)
    assert code == 0  # additivity still holds; negativity is reported, not fatal
    assert payload["positive"] is False
    assert payload["negative_eigenvalues"] == [pytest.approx(-0.3)]
    assert len(payload["warnings"]) == 1


def test_gleason_demo_requires_hermitian(tmp_path, capsys):
    skew = np.zeros((3, 3), dtype=complex)
    skew[0, 1] = 1.0
    path = _operator_file(tmp_path, skew)
    assert main(["gleason-demo", "--input", path]) == 2
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# configuration plumbing
# ---------------------------------------------------------------------------


def test_version_flag(capsys):
    assert main(["--version"]) == 0
    assert capsys.readouterr().out.startswith("framesphere ")


def test_missing_subcommand_is_usage_error(capsys):
    assert main([]) == 2
    assert "usage:" in capsys.readouterr().err


def test_env_fallback_and_flag_precedence(monkeypatch, capsys):
    monkeypatch.setenv("FRAMESPHERE_MAX_BIDEGREE", "1")
    code = main(["zonal-table"])
    assert code == 0
    assert len(capsys.readouterr().out.splitlines()) == 1 + 3  # header + (0,0),(0,1),(1,0)

    code = main(["zonal-table", "--max-bidegree", "0"])  # flag beats the env var
    assert code == 0
    assert len(capsys.readouterr().out.splitlines()) == 1 + 1


def test_invalid_env_value_is_reported(monkeypatch, capsys):
    monkeypatch.setenv("FRAMESPHERE_SEED", "not-a-number")
    assert main(["zonal-table"]) == 2
    assert "FRAMESPHERE_SEED" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["zonal-table", "--n", "2"],
        ["verify-frame"],  # --input required
        ["verify-frame", "--input", "does-not-exist.json"],
        ["verify-frame", "--input", "wrong-extension.txt"],
        ["character-check", "--samples", "1"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_bad_json_exits_2(tmp_path, capsys):
    path = tmp_path / "op.json"
    path.write_text("{not json")
    assert main(["verify-frame", "--input", str(path)]) == 2
    assert "error:" in capsys.readouterr().err


def test_dimension_mismatch_exits_2(tmp_path, capsys):
    path = _operator_file(tmp_path, np.eye(3))
    assert main(["verify-frame", "--input", path, "--n", "4"]) == 2
    assert "disagrees" in capsys.readouterr().err


def test_underdetermined_samples_exit_2(tmp_path, capsys):
    pts = sphere_sample_batch(3, 5, RngStream(seed=2))
    path = tmp_path / "few.csv"
    write_samples_csv(path, pts, np.ones(5))
    assert main(["verify-frame", "--input", str(path)]) == 2
    assert "error:" in capsys.readouterr().err
