import math

import numpy as np
import pytest

import nystrom_vie as nv


def test_version():
    assert nv.__version__.count(".") == 2


def test_green_reciprocity():
    a = np.array([0.3, 0.2, -0.5])
    b = np.array([-0.4, 0.9, 0.1])
    g = nv.dyadic_green(0.8, a, b)
    assert g.shape == (3, 3)
    assert np.allclose(g, g.T, atol=1e-13)
    assert np.allclose(g, nv.dyadic_green(0.8, b, a), atol=1e-13)


def test_partition_of_unity():
    phi = nv.lagrange_basis(4, np.array([0.1, -0.7, 0.33]))
    assert len(phi) == 64
    assert abs(sum(phi) - 1.0) < 1e-12


def test_table_round_trip(tmp_path):
    t = nv.compute_weight_table(2, 0.1)
    path = tmp_path / nv.table_file_name(2, 0.1)
    nv.save_table(t, str(path))
    u = nv.load_table(str(path))
    assert u.checksum == t.checksum
    assert u.scalar(0, 1, 3) == t.scalar(0, 1, 3)
    lam = u.matrix(0, 2, 1)
    assert math.isclose(np.trace(lam), u.scalar(0, 2, 1), rel_tol=1e-10)


def test_solve_report(tmp_path):
    cfg = {"mesh": {"kind": "array", "counts": [2, 1, 1]}, "m": 2, "delta": 0.1,
           "export": {"points": [4, 4]}}
    r = nv.run("solve", cfg, tables=tmp_path / "tables", out=tmp_path / "out", build_missing=True)
    assert r["unknowns"] == 48
    assert r["relative_residual"] < 1e-12
    assert (tmp_path / "out" / "field_plane.csv").exists()


def test_errors_are_raised(tmp_path):
    with pytest.raises(nv.NvieError):
        nv.load_table(str(tmp_path / "missing.viewt"))
    with pytest.raises(nv.NvieError):
        nv.run("solve", {"m": 2, "delta": 0.1}, tables=tmp_path / "none", out=tmp_path / "o")
