import json
import struct

import numpy as np
import pytest

from phckit import iofmt
from phckit.geometry import (CavityDesign, HoleModification, LatticeSpec,
                             enumerate_holes, l3_sr3, rasterize)


def _grid():
    lattice = LatticeSpec()
    return rasterize(lattice, enumerate_holes(lattice, l3_sr3()), 8)


def test_grid_round_trip(tmp_path):
    grid = _grid()
    path = tmp_path / "g.phcgrid"
    iofmt.write_grid(grid, path)
    back = iofmt.read_grid(path)
    assert np.array_equal(back.permittivity, grid.permittivity)
    assert back.resolution == grid.resolution
    assert back.dx == grid.dx
    assert back.extent == pytest.approx(grid.extent)
    assert back.origin == pytest.approx(grid.origin)


def test_grid_header_is_64_bytes(tmp_path):
    grid = _grid()
    path = tmp_path / "g.phcgrid"
    iofmt.write_grid(grid, path)
    raw = path.read_bytes()
    assert raw[:8] == b"PHCGRID1"
    assert len(raw) == 64 + grid.permittivity.size * 8
    dim, n0, n1, n2, res, cell = struct.unpack("<QQQQQd", raw[8:56])
    assert dim == 2
    assert (n0, n1, n2) == (*grid.permittivity.shape, 1)
    assert res == grid.resolution
    assert cell == grid.dx


def test_grid_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.phcgrid"
    path.write_bytes(b"NOTAGRID" + bytes(56))
    with pytest.raises(iofmt.FormatError, match="magic"):
        iofmt.read_grid(path)


def test_grid_rejects_truncation(tmp_path):
    grid = _grid()
    path = tmp_path / "g.phcgrid"
    iofmt.write_grid(grid, path)
    path.write_bytes(path.read_bytes()[:200])
    with pytest.raises(iofmt.FormatError, match="truncated"):
        iofmt.read_grid(path)


def test_design_round_trip(tmp_path):
    lattice = LatticeSpec(slab_index_n=2.6, hole_radius_ratio=0.2553)
    design = CavityDesign(
        defect_length_x=3,
        modifications=(HoleModification(1, 0.3482, 0.098),
                       HoleModification(2, 0.2476, 0.0882)),
        crystal_extent=(18, 11),
    )
    path = tmp_path / "design.yaml"
    iofmt.write_design(lattice, design, path)
    lat2, des2 = iofmt.read_design(path)
    assert lat2 == lattice
    assert des2 == design


def test_design_rejects_bad_document(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("just a string\n")
    with pytest.raises(iofmt.FormatError):
        iofmt.read_design(path)
    path.write_text("lattice: {}\n")
    with pytest.raises(iofmt.FormatError):
        iofmt.read_design(path)


def test_probe_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    steps = np.arange(10)
    times = steps * 0.03125
    values = rng.standard_normal(10)
    path = tmp_path / "probe.csv"
    iofmt.write_probe_csv(steps, times, values, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,time,value"
    for line, s, t, v in zip(lines[1:], steps, times, values):
        cs, ct, cv = line.split(",")
        assert int(cs) == s
        assert float(ct) == t
        assert float(cv) == v  # repr round-trip is exact


def test_config_hash_stable_and_order_insensitive():
    a = {"x": 1, "y": [1, 2], "z": {"k": 3.5}}
    b = {"z": {"k": 3.5}, "y": [1, 2], "x": 1}
    assert iofmt.config_hash(a) == iofmt.config_hash(b)
    assert iofmt.config_hash({"x": 2}) != iofmt.config_hash(a)


def test_manifest_contents(tmp_path):
    path = tmp_path / "manifest.json"
    cfg = {"design": "l3_sr3", "resolution": 16}
    iofmt.write_manifest(path, config=cfg, seed=42,
                         timings={"total_s": 1.5})
    doc = json.loads(path.read_text())
    assert doc["config"] == cfg
    assert doc["config_sha256"] == iofmt.config_hash(cfg)
    assert doc["seed"] == 42
    assert doc["timings_seconds"]["total_s"] == 1.5
    assert "numpy" in doc["versions"]
    assert "phckit" in doc["versions"]
    assert "python" in doc["versions"]
