"""Pure-state ensembles and the convex roof of the variance.

For a unitary family the QFI equals the minimum of
``4 sum_k q_k Var_{Psi_k}(H)`` over all pure-state decompositions
``rho = sum_k q_k |Psi_k><Psi_k|``. This module evaluates that objective,
tests whether the eigen-ensemble already attains it, and builds the
minimizing ensemble from the eigenbasis of the weighted observable Y.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    EigensolverFailure,
    InvalidEnsemble,
    InvalidSize,
    UnsupportedParametrization,
)
from .family import UnitaryFamily
from .hermitian import as_hermitian, gauge_fix, spectral_decompose, DEFAULT_THRESHOLD


@dataclass(frozen=True)
class PureEnsemble:
    """Weights ``q_k`` and normalized member states stored as columns."""

    weights: np.ndarray
    states: np.ndarray
    diagnostics: tuple = field(default=())

    def __post_init__(self):
        q = np.asarray(self.weights, dtype=float)
        psi = np.asarray(self.states, dtype=complex)
        if psi.ndim != 2 or psi.shape[1] != len(q):
            raise InvalidEnsemble(f"{len(q)} weights but states have shape {psi.shape}")
        if np.any(q <= 0) or abs(q.sum() - 1) > 1e-10:
            raise InvalidEnsemble(f"weights must be positive and sum to 1 (sum = {q.sum()!r})")
        norms = np.linalg.norm(psi, axis=0)
        if np.abs(norms - 1).max() > 1e-10:
            raise InvalidEnsemble("ensemble members must be normalized")
        object.__setattr__(self, "weights", q)
        object.__setattr__(self, "states", psi)

    def __len__(self):
        return len(self.weights)

    def reconstruct(self):
        return (self.states * self.weights) @ self.states.conj().T


@dataclass(frozen=True)
class YObservable:
    """Support-basis matrix of Y and its eigenpairs (eigenvectors as columns)."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def unitary_problem(family, theta=0.0, threshold=DEFAULT_THRESHOLD):
    """Support decomposition and generator of a unitary family at ``theta``."""
    if not isinstance(family, UnitaryFamily):
        raise UnsupportedParametrization(
            f"the convex-roof construction needs a unitary family, got {type(family).__name__}"
        )
    return spectral_decompose(family.rho(theta), threshold), family.generator


def ensemble_average_variance(ensemble, generator):
    """4 sum_k q_k (<H^2>_k - <H>_k^2)."""
    h = as_hermitian(generator, "generator")
    if h.shape[0] != ensemble.states.shape[0]:
        raise DimensionMismatch(
            f"generator is {h.shape[0]}-dim, ensemble states are {ensemble.states.shape[0]}-dim"
        )
    hpsi = h @ ensemble.states
    second = np.sum(np.abs(hpsi) ** 2, axis=0)
    first = np.einsum("ij,ij->j", ensemble.states.conj(), hpsi).real
    return float(4 * np.dot(ensemble.weights, second - first**2))


def eigen_ensemble(decomp):
    return PureEnsemble(decomp.eigenvalues, decomp.eigenvectors)


def eigen_ensemble_is_optimal(decomp, generator, tol=1e-9):
    """Whether H has no transitions between distinct support eigenstates.

    Returns ``(verdict, witness)`` with ``witness = (i, j, |H_ij|)`` the
    largest off-diagonal support element (0-based), or ``None`` for s = 1.
    """
    hs = decomp.eigenvectors.conj().T @ as_hermitian(generator, "generator") @ decomp.eigenvectors
    s = hs.shape[0]
    if s < 2:
        return True, None
    mags = np.abs(hs)
    np.fill_diagonal(mags, -1.0)
    i, j = np.unravel_index(np.argmax(mags), mags.shape)
    i, j = sorted((int(i), int(j)))
    return bool(mags[i, j] <= tol), (i, j, float(mags[i, j]))


def y_observable(decomp, generator):
    """Y_ij = 2 sqrt(p_i p_j) / (p_i + p_j) H_ij on the support."""
    p = decomp.eigenvalues
    hs = decomp.eigenvectors.conj().T @ as_hermitian(generator, "generator") @ decomp.eigenvectors
    kernel = 2 * np.sqrt(np.outer(p, p)) / (p[:, None] + p[None, :])
    y = kernel * hs
    y = (y + y.conj().T) / 2
    try:
        alpha, vecs = np.linalg.eigh(y)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise EigensolverFailure(f"Y eigensolver failed: {exc}") from exc
    return YObservable(y, alpha, gauge_fix(vecs))


def purification_ensemble(decomp, isometry, min_weight=0.0):
    """Ensemble with unnormalized members sum_i V_ki sqrt(p_i) |psi_i>.

    ``isometry`` is r x s with orthonormal columns, which guarantees the
    members reconstruct rho. Members with weight <= ``min_weight`` are dropped.
    """
    V = np.asarray(isometry, dtype=complex)
    s = decomp.support_dim
    if V.ndim != 2 or V.shape[1] != s or V.shape[0] < s:
        raise InvalidSize(f"isometry must be r x {s} with r >= {s}, got {V.shape}")
    raw = decomp.eigenvectors @ (V * np.sqrt(decomp.eigenvalues)).T
    q = np.sum(np.abs(raw) ** 2, axis=0)
    keep = q > min_weight
    diags = ()
    if not keep.all():
        dropped = np.flatnonzero(~keep).tolist()
        diags = (f"dropped members {dropped} with weight <= {min_weight:g}; renormalized",)
    q, raw = q[keep], raw[:, keep]
    return PureEnsemble(q / q.sum(), raw / np.sqrt(q), diags)


def optimal_ensemble(decomp, generator):
    """Minimizing ensemble built from the eigenvectors y_k of Y.

    Member k is proportional to sum_i <psi_i|y_k> sqrt(p_i) |psi_i> with
    weight u_k = sum_i |<psi_i|y_k>|^2 p_i.
    """
    y = y_observable(decomp, generator)
    return purification_ensemble(decomp, y.eigenvectors.T, min_weight=decomp.threshold)


def random_ensembles(decomp, seed, count, size):
    """``count`` random decompositions of rho with ``size`` members each.

    Isometries come from QR of complex Gaussian matrices drawn from
    ``numpy.random.default_rng(seed)``, so a seed fixes the output exactly.
    """
    s = decomp.support_dim
    if size < s:
        raise InvalidSize(f"ensemble size {size} is below the support dimension {s}")
    if count < 0:
        raise InvalidSize(f"count must be nonnegative, got {count}")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        g = rng.standard_normal((size, s)) + 1j * rng.standard_normal((size, s))
        V, _ = np.linalg.qr(g)
        out.append(purification_ensemble(decomp, V))
    return out
