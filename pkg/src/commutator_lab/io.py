"""Serialization: space/system JSON, matrix binary format, CSV reports."""

from __future__ import annotations

import csv
import json

import numpy as np

from .dyadic import DyadicSystem, build_dyadic_system
from .operators import OperatorMatrix
from .space import FiniteSpace, ValidationError


def space_to_json(space: FiniteSpace, dist_mode: str = "auto") -> dict:
    """{n, a0, mass[], dist: matrix or coords+metric-tag} (reproducibility doc)."""
    doc = {"n": space.n, "a0": space.a0, "mass": space.mass.tolist(),
           "meta": space.meta}
    if dist_mode == "matrix" or (dist_mode == "auto" and space.coords is None):
        doc["dist"] = {"kind": "matrix", "values": space.dist.tolist()}
    else:
        doc["dist"] = {"kind": "coords", "metric": "euclidean",
                       "coords": space.coords.tolist()}
    return doc


def space_from_json(doc: dict) -> FiniteSpace:
    mass = np.array(doc["mass"], dtype=float)
    d = doc["dist"]
    if d["kind"] == "matrix":
        dist = np.array(d["values"], dtype=float)
        coords = None
    elif d["kind"] == "coords":
        coords = np.array(d["coords"], dtype=float)
        diff = coords[:, None, :] - coords[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
    else:
        raise ValidationError(f"unknown dist kind {d['kind']!r}")
    sp = FiniteSpace(dist, mass, float(doc["a0"]), coords, doc.get("meta", {}))
    sp.validate()
    return sp


def system_to_json(system: DyadicSystem) -> dict:
    return {
        "delta": system.delta,
        "levels": system.levels,
        "scales": system.scales.tolist(),
        "membership": [system.point_cube[k].tolist() for k in range(system.levels)],
        "centers": [c.tolist() for c in system.centers],
        "parents": [p.tolist() for p in system.parent],
        "c0": system.c0,
        "C0": system.C0,
        "meta": system.meta,
    }


def system_from_json(space: FiniteSpace, doc: dict) -> DyadicSystem:
    from .dyadic import DyadicSystem as DS, _finalize

    pc = np.array(doc["membership"], dtype=int)
    centers = [np.array(c, dtype=int) for c in doc["centers"]]
    system = DS(space, float(doc["delta"]), pc, centers,
                np.array(doc["scales"], dtype=float), meta=doc.get("meta", {}))
    return _finalize(system)


def save_matrix(T: OperatorMatrix, path: str) -> None:
    """JSON header line {n, frame-tag, complex-flag} + row-major float64 payload
    (complex stored as interleaved re/im pairs)."""
    header = {"n": T.n, "frame": T.frame, "complex": bool(T.is_complex)}
    data = np.ascontiguousarray(T.entries,
                                dtype=np.complex128 if T.is_complex else np.float64)
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode())
        fh.write(data.tobytes())


def load_matrix(path: str) -> OperatorMatrix:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        raw = fh.read()
    dtype = np.complex128 if header["complex"] else np.float64
    n = header["n"]
    entries = np.frombuffer(raw, dtype=dtype).reshape(n, n).copy()
    return OperatorMatrix(entries, header["frame"])


def matrix_to_csv(T: OperatorMatrix, path: str) -> None:
    np.savetxt(path, T.entries, delimiter=",")


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        wr.writerows(rows)


def append_csv(path: str, header: list[str], rows: list[list]) -> None:
    """Append rows, writing the fixed header only on first creation."""
    import os

    fresh = not os.path.exists(path)
    with open(path, "a", newline="") as fh:
        wr = csv.writer(fh)
        if fresh:
            wr.writerow(header)
        wr.writerows(rows)


def extraction_report_json(extraction, eta: float = 1.0) -> dict:
    """Per (family, m): realized normalization constant, block count, S2 mass."""
    rep = extraction.normalization_constants(eta)
    return {
        "m0": extraction.m0,
        "eps0": extraction.eps0,
        "m_max": extraction.m_max,
        "residual": extraction.residual,
        "families": {str(k): v for k, v in rep.items()},
    }
