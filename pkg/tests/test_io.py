import numpy as np
import pytest

from holowidth import io
from holowidth.errors import FormatError
from holowidth.multiidx import total_degree_set
from holowidth.pde import Grid


@pytest.mark.parametrize("dtype", [float, complex])
def test_field_roundtrip(tmp_path, dtype):
    g = Grid(2, 5)
    rng = np.random.default_rng(0)
    v = rng.normal(size=g.n_dofs).astype(dtype)
    if dtype is complex:
        v += 1j * rng.normal(size=g.n_dofs)
    io.write_field(tmp_path / "f.hwf", v, g)
    back, grid, loc = io.read_field(tmp_path / "f.hwf")
    assert grid == g and loc == io.NODES and back.dtype == v.dtype
    np.testing.assert_array_equal(back, v)
    e = rng.normal(size=g.n_edges)
    io.write_field(tmp_path / "e.hwf", e, g, location=io.EDGES)
    assert io.read_field(tmp_path / "e.hwf")[2] == io.EDGES
    with pytest.raises(FormatError):
        io.write_field(tmp_path / "bad.hwf", e, g)


def test_bad_magic(tmp_path):
    p = tmp_path / "x"
    p.write_bytes(b"NOPE" + bytes(40))
    for reader in (io.read_field, io.read_centers, io.read_taylor_archive, io.read_snapshots):
        with pytest.raises(FormatError):
            reader(p)


def test_centers_roundtrip(tmp_path):
    c = np.array([[0.5 + 0.5j, -1.0], [0.0, 1j]])
    io.write_centers(tmp_path / "c", c)
    np.testing.assert_array_equal(io.read_centers(tmp_path / "c"), c)


def test_taylor_archive_roundtrip(tmp_path):
    g = Grid(1, 9)
    rng = np.random.default_rng(1)
    coeffs = {nu: rng.normal(size=g.n_dofs) for nu in total_degree_set(3, 2)}
    io.write_taylor_archive(tmp_path / "t", coeffs, g)
    back, grid = io.read_taylor_archive(tmp_path / "t")
    assert grid == g and set(back) == set(coeffs)
    for nu in coeffs:
        np.testing.assert_array_equal(back[nu], coeffs[nu])


def test_snapshots_roundtrip(tmp_path):
    g = Grid(1, 7)
    rng = np.random.default_rng(2)
    params, fields = rng.uniform(-1, 1, (5, 3)), rng.normal(size=(5, g.n_dofs))
    io.write_snapshots(tmp_path / "s", params, fields, g)
    p, f, grid = io.read_snapshots(tmp_path / "s")
    assert grid == g
    np.testing.assert_array_equal(p, params)
    np.testing.assert_array_equal(f, fields)


def test_text_writers_deterministic(tmp_path):
    io.write_csv(tmp_path / "a.csv", ["n", "x", "ok"], [(1, 0.1, True), (2, np.float64(1 / 3), False)])
    assert (tmp_path / "a.csv").read_text() == "n,x,ok\n1,0.10000000000000001,true\n2,0.33333333333333331,false\n"
    io.write_summary(tmp_path / "s.yaml", {"b": np.float64(2.5), "a": [np.int64(1)], "ok": np.bool_(True)})
    assert io.read_summary(tmp_path / "s.yaml") == {"b": 2.5, "a": [1], "ok": True}
    assert list(io.read_summary(tmp_path / "s.yaml")) == ["b", "a", "ok"]


def test_manifest(tmp_path):
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "x.csv").write_text("1\n")
    (tmp_path / "a.txt").write_text("hello")
    man = io.write_manifest(tmp_path).read_text().splitlines()
    assert [line.split("  ")[1] for line in man] == ["a.txt", "sub/x.csv"]
    assert man[0].split()[0] == "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
    assert io.write_manifest(tmp_path).read_text().splitlines() == man
