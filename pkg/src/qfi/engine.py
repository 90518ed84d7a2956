"""Quantum Fisher information from the SLD and from support eigendata.

Every pathway returns a :class:`QfiReport` carrying the total ``F``, its
classical part ``F_ct`` (eigenvalue motion) and quantum part ``F_qt``
(eigenvector motion). None of them forms eigenvectors outside the support:
terms that reach outside it are summed through the completeness relation.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DimensionMismatch, IncompleteBundle, NotNormalized
from .hermitian import as_hermitian, in_eigenbasis

CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class QfiReport:
    F: float
    F_ct: float
    F_qt: float
    support_dim: int
    method: str
    diagnostics: tuple = field(default=())

    def to_dict(self):
        d = asdict(self)
        d["diagnostics"] = list(self.diagnostics)
        return d


@dataclass(frozen=True)
class SldMatrix:
    """SLD operator in the original basis.

    The block with both indices outside the support is zero by convention;
    any Hermitian completion gives the same QFI.
    """

    entries: np.ndarray
    support_dim: int
    convention: str = "zero outside support"


def make_report(F, F_ct, method, support_dim, diagnostics=()):
    """Assemble a report, clamping round-off in the provably nonnegative parts.

    ``F`` and ``F_ct`` are clamped to zero when they fall less than
    ``CLAMP_TOL`` below it. ``F_qt = F - F_ct`` is never clamped, only flagged.
    """
    diags = list(diagnostics)
    F, F_ct = float(F), float(F_ct)
    if -CLAMP_TOL < F_ct < 0:
        diags.append(f"clamped F_ct round-off {F_ct:.3e} to 0")
        F_ct = 0.0
    elif F_ct < 0:
        diags.append(f"F_ct is negative ({F_ct:.3e}); input data is inconsistent")
    if -CLAMP_TOL < F < 0:
        diags.append(f"clamped F round-off {F:.3e} to 0")
        F = 0.0
    elif F < 0:
        diags.append(f"F is negative ({F:.3e}); input data is inconsistent")
    F_qt = F - F_ct
    if F_qt < -CLAMP_TOL:
        diags.append(f"F_qt is negative ({F_qt:.3e})")
    return QfiReport(F, F_ct, F_qt, int(support_dim), method, tuple(diags))


def _check_dims(decomp, m, name):
    if m.shape != (decomp.full_dim, decomp.full_dim):
        raise DimensionMismatch(
            f"{name} has shape {m.shape}; the state has dimension {decomp.full_dim}"
        )


def build_sld(decomp, drho):
    """SLD operator with ``L_ij = 2 drho_ij / (p_i + p_j)`` in the eigenbasis.

    Entries with exactly one index outside the support are assembled from the
    projector onto the complement, so no complement basis is ever built.
    """
    drho = as_hermitian(drho, "drho")
    _check_dims(decomp, drho, "drho")
    v = decomp.eigenvectors
    p = decomp.eigenvalues
    dv = drho @ v
    block = v.conj().T @ dv
    inner = 2 * block / (p[:, None] + p[None, :])
    outside = dv - v @ block
    cross = (v * (2 / p)) @ outside.conj().T
    entries = v @ inner @ v.conj().T + cross + cross.conj().T
    return SldMatrix(entries, decomp.support_dim)


def sld_trace_qfi(rho, sld):
    """tr(rho L^2) for a given density matrix and SLD."""
    L = sld.entries if isinstance(sld, SldMatrix) else np.asarray(sld)
    return float(np.real(np.trace(rho @ L @ L)))


def _classical_from_drho(decomp, block):
    # Eigenvalue derivatives; degenerate clusters use the eigenvalues of their block.
    p = decomp.eigenvalues
    dp = np.empty(len(p))
    for group in decomp.clusters():
        sub = block[np.ix_(group, group)]
        dp[group] = np.linalg.eigvalsh(sub)[::-1] if len(group) > 1 else sub.real.ravel()
    return float(np.sum(dp**2 / p))


def qfi_sld(decomp, drho):
    """QFI as sum_i sum_j 4 p_i / (p_i + p_j)^2 |drho_ij|^2 over the full space.

    The j outside the support part equals
    ``4 sum_i (||drho psi_i||^2 - sum_{j in supp} |drho_ji|^2) / p_i``.
    """
    drho = as_hermitian(drho, "drho")
    _check_dims(decomp, drho, "drho")
    p = decomp.eigenvalues
    v = decomp.eigenvectors
    dv = drho @ v
    block = v.conj().T @ dv
    absq = np.abs(block) ** 2
    denom = (p[:, None] + p[None, :]) ** 2
    inside = np.sum(4 * p[:, None] / denom * absq)
    leak = np.sum(np.abs(dv) ** 2, axis=0) - absq.sum(axis=0)
    outside = np.sum(4 * leak / p)
    F_ct = _classical_from_drho(decomp, block)
    return make_report(inside + outside, F_ct, "sld", decomp.support_dim, decomp.diagnostics)


def qfi_support(bundle):
    """QFI from support eigenpairs and their first derivatives only.

    F = sum (dp_i)^2 / p_i + sum 4 p_i <dpsi_i|dpsi_i>
        - sum_ij 8 p_i p_j / (p_i + p_j) |<psi_i|dpsi_j>|^2
    """
    if bundle.dpsi is None or bundle.overlaps is None:
        raise IncompleteBundle("support pathway needs eigenvector derivatives and overlaps")
    p = bundle.decomp.eigenvalues
    dsqrt = bundle.dp / (2 * np.sqrt(p))
    F_ct = 4 * np.sum(dsqrt**2)
    norms = np.sum(np.abs(bundle.dpsi) ** 2, axis=0)
    harmonic = 8 * np.outer(p, p) / (p[:, None] + p[None, :])
    F_qt = 4 * np.sum(p * norms) - np.sum(harmonic * np.abs(bundle.overlaps) ** 2)
    return make_report(F_ct + F_qt, F_ct, "support", bundle.support_dim, bundle.diagnostics)


def qfi_pure(psi, dpsi):
    """4 (<dpsi|dpsi> - |<psi|dpsi>|^2) for a normalized state."""
    psi = np.asarray(psi, dtype=complex)
    dpsi = np.asarray(dpsi, dtype=complex)
    if psi.shape != dpsi.shape:
        raise DimensionMismatch(f"psi {psi.shape} and dpsi {dpsi.shape} differ")
    norm = np.linalg.norm(psi)
    if abs(norm - 1) > 1e-10:
        raise NotNormalized(f"||psi|| = {norm:.12g} deviates from 1 by more than 1e-10")
    value = 4 * (np.vdot(dpsi, dpsi).real - abs(np.vdot(psi, dpsi)) ** 2)
    return max(float(value), 0.0) if value > -CLAMP_TOL else float(value)


def qfi_unitary(decomp, generator):
    """QFI for rho(theta) = exp(-iH theta) rho exp(iH theta).

    Weighted eigenstate variances minus the harmonic-mean-weighted
    transition terms between distinct eigenstates.
    """
    h = as_hermitian(generator, "generator")
    _check_dims(decomp, h, "generator")
    p = decomp.eigenvalues
    v = decomp.eigenvectors
    hv = h @ v
    hs = v.conj().T @ hv
    variances = np.sum(np.abs(hv) ** 2, axis=0) - hs.diagonal().real ** 2
    coupling = 8 * np.outer(p, p) / (p[:, None] + p[None, :]) * np.abs(hs) ** 2
    np.fill_diagonal(coupling, 0.0)
    F = 4 * np.sum(p * variances) - coupling.sum()
    return make_report(F, 0.0, "support", decomp.support_dim, decomp.diagnostics)


def generator_in_support(decomp, generator):
    """Support block of the generator, ``<psi_i|H|psi_j>``."""
    return in_eigenbasis(decomp, as_hermitian(generator, "generator"))
