"""On-disk formats: PHCGRID1 binary grids, YAML design/job documents,
probe CSVs, and run manifests.

PHCGRID1 layout, little-endian, 64-byte header then row-major float64:
  bytes  0..7   magic b"PHCGRID1"
  bytes  8..15  dimensionality (u64): 2 or 3
  bytes 16..39  shape (3 x u64; trailing axes 1 for 2D)
  bytes 40..47  resolution, cells per lattice constant (u64)
  bytes 48..55  cell size (f64, units of a) - extents are shape * cell size
  bytes 56..63  reserved (zero)
"""

from __future__ import annotations

import hashlib
import json
import platform
import struct
import time

import numpy as np
import yaml

from .geometry import CavityDesign, DielectricGrid, HoleModification, LatticeSpec

MAGIC = b"PHCGRID1"


class FormatError(ValueError):
    """Malformed file content."""


def write_grid(grid: DielectricGrid, path) -> None:
    shape3 = list(grid.permittivity.shape) + [1] * (3 - grid.dimensionality)
    header = struct.pack(
        "<8sQQQQQdQ",
        MAGIC,
        grid.dimensionality,
        shape3[0], shape3[1], shape3[2],
        grid.resolution,
        grid.dx,
        0,
    )
    assert len(header) == 64
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(grid.permittivity, dtype="<f8").tobytes())


def read_grid(path) -> DielectricGrid:
    with open(path, "rb") as fh:
        header = fh.read(64)
        if len(header) != 64:
            raise FormatError("truncated header")
        magic, dim, n0, n1, n2, res, cell, _ = struct.unpack("<8sQQQQQdQ", header)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if dim not in (2, 3):
            raise FormatError(f"bad dimensionality {dim}")
        shape = (n0, n1, n2)[:dim]
        count = int(np.prod(shape))
        data = np.frombuffer(fh.read(count * 8), dtype="<f8")
        if data.size != count:
            raise FormatError("truncated payload")
    eps = data.reshape(shape)
    extent = tuple(n * cell for n in shape)
    origin = tuple(-0.5 * e + 0.5 * cell for e in extent)
    return DielectricGrid(permittivity=eps, resolution=int(res),
                          origin=origin, extent=extent)


# ------------------------------------------------------------ design files

def design_to_dict(lattice: LatticeSpec, design: CavityDesign) -> dict:
    return {
        "lattice": {
            "lattice_constant_a": lattice.lattice_constant_a,
            "slab_index_n": lattice.slab_index_n,
            "slab_thickness_ratio": lattice.slab_thickness_ratio,
            "hole_radius_ratio": lattice.hole_radius_ratio,
            "background_index": lattice.background_index,
        },
        "design": {
            "defect_length_x": design.defect_length_x,
            "modifications": [
                {
                    "index_from_cavity_edge": m.index_from_cavity_edge,
                    "axial_shift_ratio": m.axial_shift_ratio,
                    "radius_reduction_ratio": m.radius_reduction_ratio,
                }
                for m in design.modifications
            ],
            "crystal_extent": list(design.crystal_extent),
        },
    }


def design_from_dict(doc: dict) -> tuple[LatticeSpec, CavityDesign]:
    try:
        lat = doc["lattice"]
        des = doc["design"]
        lattice = LatticeSpec(
            lattice_constant_a=float(lat.get("lattice_constant_a", 1.0)),
            slab_index_n=float(lat["slab_index_n"]),
            slab_thickness_ratio=float(lat["slab_thickness_ratio"]),
            hole_radius_ratio=float(lat["hole_radius_ratio"]),
            background_index=float(lat.get("background_index", 1.0)),
        )
        mods = tuple(
            HoleModification(
                index_from_cavity_edge=int(m["index_from_cavity_edge"]),
                axial_shift_ratio=float(m.get("axial_shift_ratio", 0.0)),
                radius_reduction_ratio=float(m.get("radius_reduction_ratio", 0.0)),
            )
            for m in des.get("modifications", [])
        )
        design = CavityDesign(
            defect_length_x=int(des["defect_length_x"]),
            modifications=mods,
            crystal_extent=tuple(des.get("crystal_extent", (20, 13))),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"bad design document: missing {exc}") from exc
    return lattice, design


def write_design(lattice: LatticeSpec, design: CavityDesign, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(design_to_dict(lattice, design), fh, sort_keys=False)


def read_design(path) -> tuple[LatticeSpec, CavityDesign]:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise FormatError("design file is not a mapping")
    return design_from_dict(doc)


# ---------------------------------------------------------------- run files

def write_probe_csv(steps, times, values, path) -> None:
    """CSV columns: step, time, value (repr round-trip exact)."""
    with open(path, "w") as fh:
        fh.write("step,time,value\n")
        for s, t, v in zip(steps, times, values):
            fh.write(f"{int(s)},{float(t)!r},{float(v)!r}\n")


def config_hash(doc: dict) -> str:
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True, default=str).encode()
    ).hexdigest()


def write_manifest(path, *, config: dict, seed: int | None, timings: dict,
                   extra: dict | None = None) -> None:
    import phckit

    manifest = {
        "config": config,
        "config_sha256": config_hash(config),
        "seed": seed,
        "timings_seconds": timings,
        "versions": {
            "phckit": getattr(phckit, "__version__", "0.1.0"),
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "created_unix": time.time(),
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
