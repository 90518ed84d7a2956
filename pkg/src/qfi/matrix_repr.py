"""Matrix (trace) representation of the QFI.

The classical part is ``4 Tr (d sqrt(D))^2`` and the quantum part is
``4 Tr[(D I - G) P]``, where D is the diagonal eigenvalue matrix, I the
all-ones matrix, G the harmonic-mean matrix on the support and P the
transfer matrix of squared overlaps. Only the support block is stored; the
row sums of P that reach outside it are carried as ``leak``, which is all
the trace needs because ``(D I - G)_ij = p_i`` whenever j is outside.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .engine import make_report
from .errors import (
    DimensionMismatch,
    IncompleteBundle,
    InconsistentBlockDims,
    NotQubit,
    SingularDeterminant,
    WeightMismatch,
)
from .hermitian import DEFAULT_THRESHOLD, as_hermitian, validate_density


@dataclass(frozen=True)
class TransferMatrix:
    entries: np.ndarray
    leak: Optional[np.ndarray] = None

    @property
    def dim(self):
        return self.entries.shape[0]


@dataclass(frozen=True)
class CoefficientMatrices:
    D: np.ndarray  # diagonal, stored as a vector
    G: np.ndarray
    C: np.ndarray

    @property
    def dim(self):
        return len(self.D)


def _leak(norms, entries):
    return np.maximum(norms - entries.sum(axis=0), 0.0)


def transfer_matrix(bundle):
    """P_ij = |<psi_i|d psi_j>|^2 on the support, plus out-of-support row sums."""
    if bundle.overlaps is None:
        raise IncompleteBundle("transfer matrix needs the overlap table")
    entries = np.abs(bundle.overlaps) ** 2
    entries = (entries + entries.T) / 2
    if bundle.dpsi is not None:
        leak = _leak(np.sum(np.abs(bundle.dpsi) ** 2, axis=0), entries)
    elif bundle.support_dim == bundle.decomp.full_dim:
        leak = np.zeros(bundle.support_dim)
    else:
        raise IncompleteBundle("rank-deficient state needs dpsi to complete P")
    return TransferMatrix(entries, leak)


def transfer_matrix_unitary(decomp, generator):
    """For unitary families P_ij = |<psi_i|H|psi_j>|^2."""
    h = as_hermitian(generator, "generator")
    hv = h @ decomp.eigenvectors
    entries = np.abs(decomp.eigenvectors.conj().T @ hv) ** 2
    return TransferMatrix(entries, _leak(np.sum(np.abs(hv) ** 2, axis=0), entries))


def _harmonic(p, threshold=0.0):
    num = 2 * np.outer(p, p)
    den = p[:, None] + p[None, :]
    support = p > threshold
    mask = np.outer(support, support)
    out = np.zeros_like(num)
    out[mask] = num[mask] / den[mask]
    return out


def coefficient_matrices(decomp, dim=None):
    """D, G and C = D I - G, zero-padded to ``dim`` (default: support size)."""
    s = decomp.support_dim
    dim = s if dim is None else dim
    if dim < s:
        raise DimensionMismatch(f"cannot truncate a rank-{s} state to dimension {dim}")
    p = np.zeros(dim)
    p[:s] = decomp.eigenvalues
    G = _harmonic(p)
    return CoefficientMatrices(p, G, p[:, None] - G)


def sqrt_derivative(decomp, dp):
    """d sqrt(p_i) = dp_i / (2 sqrt(p_i)) on the support."""
    return np.asarray(dp, dtype=float) / (2 * np.sqrt(decomp.eigenvalues))


def qfi_matrix_form(coeffs, P, dsqrt, support_dim=None, diagnostics=()):
    """F_ct = 4 sum (d sqrt p)^2 and F_qt = 4 Tr[C P] (+ the leak completion)."""
    if coeffs.dim != P.dim:
        raise DimensionMismatch(f"coefficients are {coeffs.dim}-dim, P is {P.dim}-dim")
    dsqrt = np.asarray(dsqrt, dtype=float)
    if len(dsqrt) > coeffs.dim:
        raise DimensionMismatch("more eigenvalue derivatives than matrix dimension")
    F_ct = 4 * np.sum(dsqrt**2)
    trace = np.sum(coeffs.C * P.entries.T)
    if P.leak is not None:
        trace += np.dot(coeffs.D, P.leak)
    F_qt = 4 * trace
    s = support_dim if support_dim is not None else int(np.count_nonzero(coeffs.D))
    return make_report(F_ct + F_qt, F_ct, "matrix_repr", s, diagnostics)


def qfi_matrix(bundle):
    """Matrix-representation QFI straight from a derivative bundle."""
    decomp = bundle.decomp
    return qfi_matrix_form(
        coefficient_matrices(decomp),
        transfer_matrix(bundle),
        sqrt_derivative(decomp, bundle.dp),
        decomp.support_dim,
        bundle.diagnostics,
    )


def qubit_closed_form(rho, P12, dp=None, threshold=DEFAULT_THRESHOLD):
    """Qubit QFI from det(rho): F_qt = 4 (1 - 4 det) P12, F_ct = dp^2 / det.

    ``dp`` is the eigenvalue derivative (either eigenvalue; they differ only
    in sign). Without it, or for a pure state, the classical part is zero.
    A pure state with a nonzero ``dp`` is a rank crossing and is rejected.
    """
    rho = validate_density(rho)
    if rho.shape != (2, 2):
        raise NotQubit(f"expected a 2x2 density matrix, got {rho.shape}")
    det = float(np.linalg.det(rho).real)
    F_qt = 4 * (1 - 4 * det) * float(P12)
    diags = []
    if dp is None:
        F_ct = 0.0
        diags.append("no eigenvalue derivative supplied; F_ct taken as 0")
    else:
        d = float(np.ravel(dp)[0])
        if det <= threshold:
            if abs(d) > 1e-9:
                raise SingularDeterminant(
                    f"det(rho) = {det:.3e} <= threshold but dp = {d:.3e} is nonzero"
                )
            F_ct = 0.0
        else:
            F_ct = d**2 / det
    support = 1 if det <= threshold else 2
    return make_report(F_ct + F_qt, F_ct, "qubit_closed", support, diags)


@dataclass(frozen=True)
class BlockedState:
    """Direct sum of fixed-particle-number sectors with weights Q_n.

    ``cross_generators`` maps an ordered pair ``(n, m)`` to the generator
    block between sector n (rows) and sector m (columns); the mirrored block
    is its conjugate transpose.
    """

    weights: np.ndarray
    rhos: tuple
    generators: tuple
    cross_generators: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(self.rhos) or len(w) != len(self.generators):
            raise InconsistentBlockDims("weights, rhos and generators differ in length")
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-10:
            raise WeightMismatch(f"block weights must be nonnegative and sum to 1, got {w}")
        rhos = tuple(validate_density(r) for r in self.rhos)
        gens = tuple(as_hermitian(g, "block generator") for g in self.generators)
        for n, (r, g) in enumerate(zip(rhos, gens)):
            if r.shape != g.shape:
                raise InconsistentBlockDims(f"block {n}: rho {r.shape} vs generator {g.shape}")
        cross = {}
        for (n, m), g in dict(self.cross_generators).items():
            g = np.asarray(g, dtype=complex)
            if n == m or not (0 <= n < len(w) and 0 <= m < len(w)):
                raise InconsistentBlockDims(f"invalid cross block index {(n, m)}")
            if g.shape != (rhos[n].shape[0], rhos[m].shape[0]):
                raise InconsistentBlockDims(
                    f"cross block {(n, m)} has shape {g.shape}, expected "
                    f"{(rhos[n].shape[0], rhos[m].shape[0])}"
                )
            if (m, n) in cross and np.abs(cross[(m, n)] - g.conj().T).max() > 1e-10:
                raise InconsistentBlockDims(f"cross blocks {(n, m)} and {(m, n)} are not adjoint")
            cross[(n, m)] = g
            cross[(m, n)] = g.conj().T
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rhos", rhos)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "cross_generators", cross)

    @property
    def dims(self):
        return [r.shape[0] for r in self.rhos]

    def _offsets(self):
        return np.concatenate([[0], np.cumsum(self.dims)])

    def assembled_rho(self):
        off = self._offsets()
        out = np.zeros((off[-1], off[-1]), dtype=complex)
        for n, (q, r) in enumerate(zip(self.weights, self.rhos)):
            out[off[n]:off[n + 1], off[n]:off[n + 1]] = q * r
        return out

    def assembled_generator(self):
        off = self._offsets()
        out = np.zeros((off[-1], off[-1]), dtype=complex)
        for n, g in enumerate(self.generators):
            out[off[n]:off[n + 1], off[n]:off[n + 1]] = g
        for (n, m), g in self.cross_generators.items():
            out[off[n]:off[n + 1], off[m]:off[m + 1]] = g
        return out


def _block_eigen(rho):
    w, v = np.linalg.eigh(rho)
    order = np.argsort(w)[::-1]
    return np.clip(w[order], 0.0, None), v[:, order]


def block_terms(state, within_P=None, cross_P=None, threshold=DEFAULT_THRESHOLD):
    """Per-sector QFIs F^(n) and the cross-sector contributions.

    Returns ``(sector_qfi, cross)`` where ``cross[(n, m)]`` is
    ``4 Tr[C^(nm) P^(mn)]`` with ``C^(nm) = Q_n D^(n) I^(nm) - G^(nm)``.
    ``within_P`` / ``cross_P`` override the transfer blocks, which are
    otherwise built from the generators in each sector's full eigenbasis.
    """
    eig = [_block_eigen(r) for r in state.rhos]
    sector_qfi = []
    for n, (q, v) in enumerate(eig):
        if within_P is not None:
            P = np.asarray(within_P[n].entries if hasattr(within_P[n], "entries") else within_P[n])
        else:
            P = np.abs(v.conj().T @ state.generators[n] @ v) ** 2
        if P.shape != (len(q), len(q)):
            raise InconsistentBlockDims(f"sector {n}: P has shape {P.shape}")
        C = q[:, None] - _harmonic(q, threshold)
        sector_qfi.append(4 * float(np.sum(C * P.T)))

    cross = {}
    pairs = set(state.cross_generators) | set(cross_P or {})
    for n, m in sorted(pairs):
        pn = state.weights[n] * eig[n][0]
        pm = state.weights[m] * eig[m][0]
        if cross_P is not None and (m, n) in cross_P:
            P_mn = np.asarray(cross_P[(m, n)])
        elif (m, n) in state.cross_generators:
            P_mn = np.abs(eig[m][1].conj().T @ state.cross_generators[(m, n)] @ eig[n][1]) ** 2
        else:
            continue
        if P_mn.shape != (len(pm), len(pn)):
            raise InconsistentBlockDims(f"cross P {(m, n)} has shape {P_mn.shape}")
        num = 2 * np.outer(pn, pm)
        den = pn[:, None] + pm[None, :]
        support = np.outer(pn > threshold, pm > threshold)
        G = np.zeros_like(num)
        G[support] = num[support] / den[support]
        C = pn[:, None] - G
        cross[(n, m)] = 4 * float(np.sum(C * P_mn.T))
    return sector_qfi, cross


def block_qfi(state, within_P=None, cross_P=None, threshold=DEFAULT_THRESHOLD):
    """Total QFI of a sector mixture: sum_n Q_n F^(n) plus cross-sector terms."""
    sector_qfi, cross = block_terms(state, within_P, cross_P, threshold)
    F = float(np.dot(state.weights, sector_qfi)) + sum(cross.values())
    support = sum(
        int(np.count_nonzero(q * np.linalg.eigvalsh(r) > threshold))
        for q, r in zip(state.weights, state.rhos)
    )
    diags = [f"sector QFIs: {[round(f, 12) for f in sector_qfi]}"]
    if cross:
        diags.append(f"cross-sector contribution: {sum(cross.values()):.12g}")
    return make_report(F, 0.0, "block", support, diags)
