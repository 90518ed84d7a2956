"""Hermitian matrices, density-matrix validation and support decomposition.

Matrices are plain complex ``numpy`` arrays. Validated arrays are returned
read-only so that downstream code can share them freely.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    EigensolverFailure,
    NotHermitian,
    NotPositiveSemidefinite,
    TraceNotOne,
    ValidationError,
)

DEFAULT_THRESHOLD = 1e-12
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
DEGENERACY_GAP = 1e-9
NEAR_THRESHOLD_FACTOR = 100.0


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


def as_hermitian(m, name="matrix", tol=HERMITICITY_TOL):
    """Check that ``m`` is square and Hermitian; return the symmetrized copy.

    The hermiticity tolerance is relative to the largest entry magnitude.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    scale = np.abs(m).max() if m.size else 0.0
    dev = np.abs(m - m.conj().T).max() if m.size else 0.0
    if dev > tol * scale:
        raise NotHermitian(
            f"{name} is not Hermitian: max |M - M^dagger| = {dev:.3e} "
            f"exceeds {tol:g} x max|M| = {tol * scale:.3e}"
        )
    return _frozen((m + m.conj().T) / 2)


def _unit_trace_hermitian(m):
    rho = as_hermitian(m, "density matrix")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise TraceNotOne(
            f"trace is {tr:.12g}; deviation {abs(tr - 1.0):.3e} exceeds {TRACE_TOL:g}"
        )
    return rho


def _check_psd(lowest):
    if lowest < -PSD_TOL:
        raise NotPositiveSemidefinite(
            f"smallest eigenvalue {lowest:.3e} is below -{PSD_TOL:g}"
        )


def validate_density(m):
    """Return ``m`` as a validated density matrix (Hermitian, unit trace, PSD)."""
    rho = _unit_trace_hermitian(m)
    try:
        _check_psd(np.linalg.eigvalsh(rho)[0])
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise EigensolverFailure(str(exc)) from exc
    return rho


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of a density matrix restricted to its support.

    ``eigenvectors`` holds the support vectors as columns (shape ``(N, s)``),
    ordered by descending eigenvalue.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    threshold: float
    full_dim: int
    aligned: bool = False
    diagnostics: tuple = field(default=())

    @property
    def support_dim(self):
        return len(self.eigenvalues)

    def projector(self):
        v = self.eigenvectors
        return v @ v.conj().T

    def reconstruct(self):
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def clusters(self, gap=DEGENERACY_GAP):
        """Index groups of (near-)degenerate support eigenvalues."""
        groups = []
        for i, p in enumerate(self.eigenvalues):
            if groups and abs(self.eigenvalues[groups[-1][-1]] - p) < gap:
                groups[-1].append(i)
            else:
                groups.append([i])
        return groups


def gauge_fix(vectors):
    """Rotate each column's phase so its largest-magnitude entry is real positive.

    Ties between equal magnitudes go to the lowest index. Idempotent.
    """
    v = np.array(vectors, dtype=complex)
    if v.ndim == 1:
        return gauge_fix(v[:, None])[:, 0]
    for k in range(v.shape[1]):
        mags = np.abs(v[:, k])
        top = mags.max()
        if top == 0:
            continue
        idx = np.flatnonzero(mags >= top * (1 - 1e-10))[0]
        pivot = v[idx, k]
        if pivot.imag == 0 and pivot.real > 0:
            continue
        v[:, k] *= np.conj(pivot) / mags[idx]
        v[idx, k] = mags[idx]
    return v


def align_degenerate(eigenvalues, eigenvectors, drho, gap=DEGENERACY_GAP):
    """Rotate degenerate clusters so that ``drho`` is diagonal inside each one.

    Returns the new eigenvectors and the list of clusters that were rotated.
    """
    v = np.array(eigenvectors, dtype=complex)
    decomp = SpectralDecomposition(np.asarray(eigenvalues), v, 0.0, v.shape[0])
    rotated = []
    for group in decomp.clusters(gap):
        if len(group) < 2:
            continue
        block = v[:, group].conj().T @ drho @ v[:, group]
        _, w = np.linalg.eigh((block + block.conj().T) / 2)
        v[:, group] = v[:, group] @ w[:, ::-1]
        rotated.append(group)
    return v, rotated


def _dense_support(rho, threshold):
    try:
        w, v = np.linalg.eigh(rho)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(f"dense eigensolver failed: {exc}") from exc
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def _lowrank_support(rho, threshold, seed=0):
    # Randomized range finder; falls back to dense when the rank is not small.
    n = rho.shape[0]
    rng = np.random.default_rng(seed)
    k = min(8, n)
    while 2 * k < n:
        omega = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
        q, _ = np.linalg.qr(rho @ omega)
        b = q.conj().T @ rho @ q
        try:
            w, z = np.linalg.eigh((b + b.conj().T) / 2)
        except np.linalg.LinAlgError as exc:
            raise EigensolverFailure(f"projected eigensolver failed: {exc}") from exc
        if np.count_nonzero(np.abs(w) > threshold) < k - 1:
            order = np.argsort(w)[::-1]
            values, vectors = w[order], q @ z[:, order]
            probe = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            resid = rho @ probe - vectors @ (values * (vectors.conj().T @ probe))
            if np.linalg.norm(resid) <= 1e-10 * max(1.0, np.linalg.norm(probe)):
                return values, vectors
            break
        k *= 2
    return _dense_support(rho, threshold)


def spectral_decompose(rho, threshold=DEFAULT_THRESHOLD, drho=None, solver="dense"):
    """Support eigenpairs of ``rho`` (eigenvalues above ``threshold``).

    Parameters
    ----------
    rho : array_like
        Density matrix; validated here.
    threshold : float
        Absolute support cut, in (0, 1).
    drho : array_like, optional
        Derivative of ``rho``. When given, degenerate support clusters are
        rotated to diagonalize the cluster-projected derivative.
    solver : {"dense", "lowrank"}
        ``"lowrank"`` only touches ``rho`` through products with thin
        matrices and is the fast path for large, low-rank states.
    """
    if not 0 < threshold < 1:
        raise ValidationError(f"threshold must lie in (0, 1), got {threshold}")
    rho = _unit_trace_hermitian(rho)
    if solver == "dense":
        values, vectors = _dense_support(rho, threshold)
    elif solver == "lowrank":
        values, vectors = _lowrank_support(rho, threshold)
    else:
        raise ValidationError(f"unknown solver {solver!r}")
    # the low-rank solver returns every eigenvalue outside its verified null space
    _check_psd(values[-1])
    keep = values > threshold
    values, vectors = values[keep], vectors[:, keep]

    diagnostics = []
    aligned = False
    if drho is not None:
        drho = as_hermitian(drho, "drho")
        if drho.shape != rho.shape:
            raise DimensionMismatch(f"drho shape {drho.shape} != rho shape {rho.shape}")
        vectors, rotated = align_degenerate(values, vectors, drho)
        aligned = True
        for group in rotated:
            diagnostics.append(f"aligned degenerate cluster {group} to drho")
    vectors = gauge_fix(vectors)

    near = [i for i, p in enumerate(values) if p < NEAR_THRESHOLD_FACTOR * threshold]
    if near:
        diagnostics.append(
            f"eigenvalues {near} lie within 100x of the support threshold {threshold:g}"
        )
    return SpectralDecomposition(
        eigenvalues=_frozen(values).real.copy(),
        eigenvectors=_frozen(vectors),
        threshold=float(threshold),
        full_dim=rho.shape[0],
        aligned=aligned,
        diagnostics=tuple(diagnostics),
    )


def in_eigenbasis(decomp, m):
    """Support block ``V^dagger M V`` of an operator."""
    v = decomp.eigenvectors
    return v.conj().T @ m @ v
