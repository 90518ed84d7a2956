"""JSON encoding of matrices, families, blocked states, ensembles and reports.

Matrices are ``{"dim": N, "entries": [[[re, im], ...], ...]}`` (row-major);
a bare number is accepted wherever a complex entry is expected.
"""

import json
import math

import numpy as np

from .errors import ValidationError
from .family import AnalyticFamily, GridFamily, SpectralFamily, UnitaryFamily
from .matrix_repr import BlockedState


def format_float(x):
    if not math.isfinite(x):
        return "null"
    text = format(x, ".17g")
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def dumps(obj, indent=2, _level=0):
    """Deterministic JSON with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    return json.dumps(str(obj))


def _complex(value, where):
    if isinstance(value, bool):
        raise ValidationError(f"{where}: expected a number or [re, im], got {value!r}")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
    ):
        return complex(value[0], value[1])
    raise ValidationError(f"{where}: expected a number or [re, im], got {value!r}")


def _require(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise ValidationError(f"{where}: missing field {key!r}")
    return obj[key]


def decode_matrix(obj, where="matrix"):
    entries = _require(obj, "entries", where)
    if not isinstance(entries, list) or not entries:
        raise ValidationError(f"{where}.entries: expected a non-empty list of rows")
    n = len(entries)
    dim = obj.get("dim", n)
    if dim != n:
        raise ValidationError(f"{where}: dim is {dim} but there are {n} rows")
    out = np.empty((n, n), dtype=complex)
    for i, row in enumerate(entries):
        if not isinstance(row, list) or len(row) != n:
            raise ValidationError(f"{where}.entries[{i}]: expected {n} entries")
        for j, value in enumerate(row):
            out[i, j] = _complex(value, f"{where}.entries[{i}][{j}]")
    return out


def encode_matrix(m):
    m = np.asarray(m, dtype=complex)
    return {
        "dim": int(m.shape[0]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in m],
    }


def decode_vector(obj, where="vector"):
    if not isinstance(obj, list) or not obj:
        raise ValidationError(f"{where}: expected a non-empty list")
    return np.array([_complex(v, f"{where}[{i}]") for i, v in enumerate(obj)])


def encode_vector(v):
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


def _floats(obj, where):
    if not isinstance(obj, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in obj
    ):
        raise ValidationError(f"{where}: expected a list of numbers")
    return np.array(obj, dtype=float)


def decode_family(obj):
    """Build a state family from its JSON description.

    Kinds: ``unitary`` (rho0, generator), ``sampled_grid`` (thetas,
    matrices), ``spectral`` (eigenvalues and eigenvectors at theta = 0,
    eigenvalue slopes, optional rotation generator K with
    psi(theta) = exp(-iK theta) psi(0)), and ``point`` (rho and drho at the
    evaluation point; also selected when ``kind`` is absent).
    """
    if not isinstance(obj, dict):
        raise ValidationError("input: expected a JSON object")
    kind = obj.get("kind", "point")
    if kind == "unitary":
        return UnitaryFamily(
            decode_matrix(_require(obj, "generator", "input"), "generator"),
            decode_matrix(_require(obj, "rho0", "input"), "rho0"),
        )
    if kind == "sampled_grid":
        thetas = _floats(_require(obj, "thetas", "input"), "thetas")
        mats = _require(obj, "matrices", "input")
        if not isinstance(mats, list):
            raise ValidationError("matrices: expected a list")
        return GridFamily(thetas, [decode_matrix(m, f"matrices[{i}]") for i, m in enumerate(mats)])
    if kind == "spectral":
        return _decode_spectral(obj)
    if kind == "point":
        rho = decode_matrix(_require(obj, "rho", "input"), "rho")
        drho = decode_matrix(_require(obj, "drho", "input"), "drho")
        return AnalyticFamily(lambda theta: rho, lambda theta: drho)
    raise ValidationError(f"input.kind: unknown family kind {kind!r}")


def _decode_spectral(obj):
    from scipy.linalg import expm

    p0 = _floats(_require(obj, "eigenvalues", "input"), "eigenvalues")
    slopes = _floats(obj.get("eigenvalue_slopes", [0.0] * len(p0)), "eigenvalue_slopes")
    vecs = _require(obj, "eigenvectors", "input")
    if not isinstance(vecs, list) or len(vecs) != len(p0) or len(slopes) != len(p0):
        raise ValidationError("spectral: eigenvalues, slopes and eigenvectors differ in count")
    v0 = np.column_stack([decode_vector(v, f"eigenvectors[{i}]") for i, v in enumerate(vecs)])
    k = decode_matrix(obj["rotation"], "rotation") if "rotation" in obj else np.zeros((len(v0), len(v0)))

    def vectors(theta):
        return expm(-1j * theta * k) @ v0

    return SpectralFamily(
        eigenvalues=lambda theta: p0 + theta * slopes,
        eigenvectors=vectors,
        eigenvalue_derivatives=lambda theta: slopes,
        eigenvector_derivatives=lambda theta: -1j * (k @ vectors(theta)),
    )


def decode_blocked_state(obj):
    blocks = _require(obj, "blocks", "input")
    if not isinstance(blocks, list) or not blocks:
        raise ValidationError("blocks: expected a non-empty list")
    weights, rhos, gens = [], [], []
    for i, b in enumerate(blocks):
        weights.append(float(_require(b, "Q", f"blocks[{i}]")))
        rhos.append(decode_matrix(_require(b, "rho", f"blocks[{i}]"), f"blocks[{i}].rho"))
        gens.append(decode_matrix(_require(b, "generator", f"blocks[{i}]"), f"blocks[{i}].generator"))
    cross = {}
    for i, c in enumerate(obj.get("cross_generators") or []):
        n, m = int(_require(c, "from", f"cross_generators[{i}]")), int(_require(c, "to", f"cross_generators[{i}]"))
        block = _require(c, "entries", f"cross_generators[{i}]")
        cross[(n, m)] = np.array(
            [[_complex(x, f"cross_generators[{i}].entries[{r}][{s}]") for s, x in enumerate(row)]
             for r, row in enumerate(block)]
        )
    return BlockedState(weights, rhos, gens, cross)


def encode_ensemble(ensemble):
    return {
        "members": [
            {"q": float(q), "psi": encode_vector(ensemble.states[:, k])}
            for k, q in enumerate(ensemble.weights)
        ]
    }


def decode_ensemble(obj):
    from .ensemble import PureEnsemble

    members = _require(obj, "members", "ensemble")
    if not isinstance(members, list) or not members:
        raise ValidationError("ensemble.members: expected a non-empty list")
    q = [float(_require(m, "q", f"members[{i}]")) for i, m in enumerate(members)]
    psi = [decode_vector(_require(m, "psi", f"members[{i}]"), f"members[{i}].psi") for i, m in enumerate(members)]
    return PureEnsemble(np.array(q), np.column_stack(psi))
