"""JSON instance files and seeded instance generators.

Document layout (one JSON object)::

    {
      "k": 2, "n": 3,
      "families": {"T": [OP, ...], ...},
      "k_operator": OP,                       # optional
      "sequences": {"alpha": [0.5, 1.0]},     # optional
      "scalars": {"alpha": [[1.0, 0.0]]},     # optional
      "metadata": {"seed": "7", "kind": "frame"}
    }

A complex number is ``[re, im]``; a matrix is a row-major list of rows; an
operator OP is its flattened nk x nk matrix, whose block (i, j) occupies
rows [i*k, (i+1)*k) and columns [j*k, (j+1)*k), acting on the right of the
k x nk concatenation of a module vector.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .adjointable import AdjointableOp
from .errors import SchemaError
from .frames import OperatorFamily, optimal_bounds
from .perturbation import ConfinedSequence

KNOWN_KEYS = ("k", "n", "families", "k_operator", "sequences", "scalars", "metadata")
KINDS = ("frame", "bessel", "parseval", "pair", "k-instance")


@dataclass(eq=False)
class Instance:
    k: int
    n: int
    families: dict
    k_operator: Optional[AdjointableOp] = None
    sequences: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def family(self, name) -> OperatorFamily:
        try:
            return self.families[name]
        except KeyError:
            raise KeyError(f"instance has no family {name!r} (has {sorted(self.families)})") from None

    def summary(self):
        return {
            "k": self.k,
            "n": self.n,
            "families": {name: len(f) for name, f in self.families.items()},
            "k_operator": self.k_operator is not None,
        }


# -- encoding --------------------------------------------------------------

def _encode_complex(z):
    return [float(z.real), float(z.imag)]


def _encode_matrix(mat):
    return [[_encode_complex(z) for z in row] for row in np.asarray(mat)]


def to_document(inst: Instance) -> dict:
    doc = {
        "k": inst.k,
        "n": inst.n,
        "families": {name: [_encode_matrix(t.flat) for t in fam] for name, fam in inst.families.items()},
    }
    if inst.k_operator is not None:
        doc["k_operator"] = _encode_matrix(inst.k_operator.flat)
    if inst.sequences:
        doc["sequences"] = {name: [float(v) for v in seq.values] for name, seq in inst.sequences.items()}
    if inst.scalars:
        doc["scalars"] = {name: [_encode_complex(complex(z)) for z in vals] for name, vals in inst.scalars.items()}
    doc["metadata"] = {str(a): str(b) for a, b in inst.metadata.items()}
    return doc


def dumps(inst: Instance) -> str:
    # json writes floats with repr(), which round-trips every double exactly
    return json.dumps(to_document(inst), allow_nan=False, indent=1) + "\n"


def save_instance(inst: Instance, target) -> None:
    text = dumps(inst)
    if isinstance(target, (str, Path)):
        Path(target).write_text(text)
    else:
        target.write(text)


# -- decoding --------------------------------------------------------------

def _number(x, path):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SchemaError(f"expected a number, got {type(x).__name__}", path)
    if not math.isfinite(x):
        raise SchemaError("non-finite number", path)
    return float(x)


def _complex(x, path):
    if not isinstance(x, list) or len(x) != 2:
        raise SchemaError("complex numbers are [re, im] pairs", path)
    return complex(_number(x[0], path + "[0]"), _number(x[1], path + "[1]"))


def _matrix(x, size, path):
    if not isinstance(x, list) or len(x) != size:
        got = len(x) if isinstance(x, list) else type(x).__name__
        raise SchemaError(f"expected {size}x{size} matrix, got {got} rows", path)
    out = np.empty((size, size), dtype=np.complex128)
    for i, row in enumerate(x):
        if not isinstance(row, list) or len(row) != size:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise SchemaError(f"expected {size} entries, got {got}", f"{path}[{i}]")
        for j, z in enumerate(row):
            out[i, j] = _complex(z, f"{path}[{i}][{j}]")
    return out


def _positive_int(doc, key):
    v = doc.get(key)
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise SchemaError("must be a positive integer", key)
    return v


def from_document(doc) -> Instance:
    if not isinstance(doc, dict):
        raise SchemaError("instance document must be a JSON object")
    unknown = sorted(set(doc) - set(KNOWN_KEYS))
    if unknown:
        raise SchemaError(f"unknown top-level keys {unknown}")
    k = _positive_int(doc, "k")
    n = _positive_int(doc, "n")
    d = n * k

    fams = doc.get("families")
    if not isinstance(fams, dict) or not fams:
        raise SchemaError("must be a non-empty object of named families", "families")
    families = {}
    for name, ops in fams.items():
        path = f"families.{name}"
        if not isinstance(ops, list) or not ops:
            raise SchemaError("a family is a non-empty list of operators", path)
        families[name] = OperatorFamily(
            AdjointableOp(_matrix(op, d, f"{path}[{i}]"), k, n) for i, op in enumerate(ops))

    k_op = None
    if doc.get("k_operator") is not None:
        k_op = AdjointableOp(_matrix(doc["k_operator"], d, "k_operator"), k, n)

    sequences = {}
    for name, vals in (doc.get("sequences") or {}).items():
        path = f"sequences.{name}"
        if not isinstance(vals, list):
            raise SchemaError("a sequence is a list of numbers", path)
        nums = [_number(v, f"{path}[{i}]") for i, v in enumerate(vals)]
        try:
            sequences[name] = ConfinedSequence(nums)
        except ValueError as exc:
            raise SchemaError(str(exc), path) from None

    scalars = {}
    for name, vals in (doc.get("scalars") or {}).items():
        path = f"scalars.{name}"
        if not isinstance(vals, list):
            raise SchemaError("scalars are a list of [re, im] pairs", path)
        scalars[name] = [_complex(z, f"{path}[{i}]") for i, z in enumerate(vals)]

    meta = doc.get("metadata") or {}
    if not isinstance(meta, dict) or not all(isinstance(v, str) for v in meta.values()):
        raise SchemaError("metadata is a map of strings", "metadata")
    if "count" in meta:
        for name, fam in families.items():
            if str(len(fam)) != meta["count"]:
                raise SchemaError(f"metadata count {meta['count']} but family has {len(fam)} operators",
                                  f"families.{name}")
    return Instance(k, n, families, k_op, sequences, scalars, dict(meta))


def _reject_constant(name):
    raise SchemaError(f"non-finite number {name}")


def loads(text) -> Instance:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    return from_document(doc)


def load_instance(source) -> Instance:
    if isinstance(source, (str, Path)):
        return loads(Path(source).read_text())
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        return loads(source.read())
    raise TypeError("load_instance expects a path or a readable stream")


# -- generators --------------------------------------------------------------

def _gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_unitary(dim, rng):
    """Haar unitary from the QR of a complex Gaussian matrix with phase fix."""
    q, r = np.linalg.qr(_gaussian(rng, (dim, dim)))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def _frame_flats(rng, count, d):
    return _gaussian(rng, (count, d, d))


def _parseval_flats(rng, count, d):
    u = random_unitary(count * d, rng)
    cols = u[:, :d]
    # flat(T_i) = V_i^H so that sum_i flat(T_i) flat(T_i)^H = sum_i V_i^H V_i = I
    return np.stack([cols[i * d:(i + 1) * d].conj().T for i in range(count)])


def _names(prefix, m):
    return [prefix] if m == 1 else [f"{prefix}{j + 1}" for j in range(m)]


def random_instance(kind: str, k: int, n: int, count: int, seed: int, params: Optional[dict] = None) -> Instance:
    """Deterministic random instance.

    params: ``target`` (bessel), ``epsilon`` (pair), ``k_kind`` in
    {"co-isometry", "general"} (k-instance), ``families`` (number of
    families, named T1..Tm when more than one).
    """
    params = dict(params or {})
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
    for name, v in (("k", k), ("n", n), ("count", count)):
        if int(v) < 1:
            raise ValueError(f"{name} must be >= 1")
    if kind == "bessel" and "target" not in params:
        raise ValueError("kind 'bessel' needs params['target']")
    if kind == "pair" and "epsilon" not in params:
        raise ValueError("kind 'pair' needs params['epsilon']")
    m = int(params.get("families", 1))
    if m < 1:
        raise ValueError("families must be >= 1")
    d = n * k
    root = np.random.SeedSequence(int(seed))
    fam_rngs = [np.random.default_rng(s) for s in root.spawn(2 * m + 1)]

    families = {}
    k_op = None
    for j, name in enumerate(_names("T", m)):
        rng = fam_rngs[j]
        if kind == "parseval":
            flats = _parseval_flats(rng, count, d)
        else:
            flats = _frame_flats(rng, count, d)
        fam = OperatorFamily.from_flats(flats, k, n)
        b = optimal_bounds(fam)
        if kind != "parseval" and not b.lower > 0:
            raise RuntimeError("Gaussian family failed to be a frame; try another seed")
        if kind == "bessel":
            target = float(params["target"])
            fam = OperatorFamily.from_flats(flats * np.sqrt(target / b.upper), k, n)
        families[name] = fam
        if kind == "pair":
            eps = float(params["epsilon"])
            rname = _names("R", m)[j]
            families[rname] = OperatorFamily.from_flats(flats + eps * _gaussian(fam_rngs[m + j], flats.shape), k, n)

    if kind == "k-instance":
        k_kind = params.get("k_kind", "co-isometry")
        rng = fam_rngs[-1]
        if k_kind == "co-isometry":
            k_op = AdjointableOp(random_unitary(d, rng), k, n)
        elif k_kind == "general":
            k_op = AdjointableOp(_gaussian(rng, (d, d)), k, n)
        else:
            raise ValueError(f"unknown k_kind {k_kind!r}")

    meta = {"kind": kind, "seed": str(int(seed)), "count": str(count)}
    meta.update({key: str(v) for key, v in sorted(params.items())})
    return Instance(k, n, families, k_op, metadata=meta)
