"""JSON documents for channels, algebras, codes and reports.

Complex entries are always ``[re, im]`` pairs and matrices are lists of rows.

Channel documents come in two forms::

    {"dim_in": 2, "dim_out": 2, "kraus": [matrix, ...]}
    {"name": "dephasing", "params": [0.25], "dim": 2}

A named document may carry ``"sites": n`` for the ``n``-fold tensor power.
Algebra documents are either explicit blocks or generators::

    {"ambient_dim": 4, "blocks": [{"iso": matrix, "dA": 2, "dB": 2}, ...]}
    {"generators": [matrix, ...]}

Code documents are ``{"isometry": matrix}``.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .algebras import AlgebraStructure, Block, generate_algebra, structure_from_basis
from .channels import Channel, make_channel, product_channel, standard_channel
from .correctability import CorrectabilityReport, SubspaceCode
from .matcore import InputError


class DocumentError(InputError):
    """Malformed or inconsistent JSON document."""


def matrix_to_doc(M: np.ndarray) -> list:
    M = np.asarray(M, complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def matrix_from_doc(doc, what: str = "matrix") -> np.ndarray:
    try:
        arr = np.asarray(doc, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"{what}: entries must be [re, im] pairs") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DocumentError(f"{what}: expected a list of rows of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _require(doc: dict, keys: tuple[str, ...], what: str):
    if not isinstance(doc, dict):
        raise DocumentError(f"{what} document must be a JSON object")
    missing = [k for k in keys if k not in doc]
    if missing:
        raise DocumentError(f"{what} document is missing {', '.join(missing)}")


# -- channels ----------------------------------------------------------------------


def channel_to_doc(N: Channel) -> dict:
    return {
        "dim_in": N.dim_in,
        "dim_out": N.dim_out,
        "kraus": [matrix_to_doc(k) for k in N.kraus],
    }


def channel_from_doc(doc: dict) -> Channel:
    if isinstance(doc, dict) and "name" in doc:
        params = doc.get("params", [])
        if not isinstance(params, list):
            raise DocumentError("channel params must be a list")
        N = standard_channel(str(doc["name"]), params, int(doc.get("dim", 2)))
        sites = int(doc.get("sites", 1))
        if sites < 1:
            raise DocumentError("sites must be positive")
        return N if sites == 1 else product_channel([N] * sites)
    _require(doc, ("dim_in", "dim_out", "kraus"), "channel")
    din, dout = int(doc["dim_in"]), int(doc["dim_out"])
    if not doc["kraus"]:
        raise DocumentError("channel needs at least one Kraus operator")
    kraus = [matrix_from_doc(k, f"Kraus operator {i}") for i, k in enumerate(doc["kraus"])]
    for i, k in enumerate(kraus):
        if k.shape != (dout, din):
            raise DocumentError(f"Kraus operator {i} has shape {k.shape}, expected {(dout, din)}")
    return make_channel(kraus)


# -- algebras ----------------------------------------------------------------------


def algebra_to_doc(alg: AlgebraStructure) -> dict:
    return {
        "ambient_dim": alg.ambient_dim,
        "blocks": [{"iso": matrix_to_doc(b.iso), "dA": b.dA, "dB": b.dB} for b in alg.blocks],
    }


def algebra_from_doc(doc: dict, seed: int = 0) -> AlgebraStructure:
    if isinstance(doc, dict) and "generators" in doc:
        gens = [matrix_from_doc(g, f"generator {i}") for i, g in enumerate(doc["generators"])]
        if not gens:
            raise DocumentError("need at least one generator")
        return structure_from_basis(generate_algebra(gens), seed=seed)
    _require(doc, ("ambient_dim", "blocks"), "algebra")
    blocks = []
    for i, b in enumerate(doc["blocks"]):
        _require(b, ("iso", "dA", "dB"), f"block {i}")
        blocks.append(Block(matrix_from_doc(b["iso"], f"block {i} isometry"), int(b["dA"]), int(b["dB"])))
    return AlgebraStructure(int(doc["ambient_dim"]), tuple(blocks))


# -- codes and reports ---------------------------------------------------------------


def code_to_doc(code: SubspaceCode) -> dict:
    return {"isometry": matrix_to_doc(code.V)}


def code_from_doc(doc: dict) -> SubspaceCode:
    _require(doc, ("isometry",), "code")
    return SubspaceCode(matrix_from_doc(doc["isometry"], "code isometry"))


def report_to_doc(report: CorrectabilityReport) -> dict:
    return {
        "delta": float(report.delta),
        "optimal_error": float(report.optimal_error),
        "exact": bool(report.exact),
        "kl_defect": float(report.kl_defect),
        "bounds_ok": bool(report.bounds_ok),
        "recovery": channel_to_doc(report.recovery),
        "tolerances": {k: float(v) for k, v in report.tolerances.items()},
        "seed": report.seed,
    }


def dumps(doc) -> str:
    """Canonical JSON text: sorted keys, fixed separators."""
    return json.dumps(doc, sort_keys=True, indent=1, separators=(",", ": "))


# -- files and the bundled catalog ------------------------------------------------------


def catalog_names() -> list[str]:
    root = resources.files("aqec") / "catalog"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def read_document(ref: str):
    """Parse a JSON file, or a bundled catalog entry by name."""
    path = Path(ref)
    if path.is_file():
        text, label = path.read_text(), str(path)
    else:
        name = ref[:-5] if ref.endswith(".json") else ref
        entry = resources.files("aqec") / "catalog" / f"{name}.json"
        if "/" in name or not entry.is_file():
            raise DocumentError(
                f"{ref}: no such file or catalog entry (catalog: {', '.join(catalog_names())})"
            )
        text, label = entry.read_text(), f"catalog:{name}"
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{label}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
