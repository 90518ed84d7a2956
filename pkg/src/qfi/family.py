"""Parameterized state families and the derivative data the QFI formulas use.

Four family kinds are supported:

* ``UnitaryFamily``: rho(theta) = exp(-iH theta) rho0 exp(+iH theta)
* ``AnalyticFamily``: caller supplies rho(theta) and its exact derivative
* ``SampledFamily``: caller supplies rho(theta) only (derivatives by differencing)
* ``SpectralFamily``: caller supplies eigenvalue and eigenvector paths

``eigen_derivatives`` turns any of them into a ``DerivativeBundle``.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply

from .errors import (
    DegenerateGap,
    DimensionMismatch,
    EvaluationFailure,
    StepTooLarge,
    SupportDimensionChanged,
    TraceNotOne,
    ValidationError,
)
from .hermitian import (
    DEFAULT_THRESHOLD,
    DEGENERACY_GAP,
    SpectralDecomposition,
    as_hermitian,
    gauge_fix,
    in_eigenbasis,
    spectral_decompose,
    validate_density,
)

DEFAULT_STEP = 1e-5
MAX_STEP = 0.1
_FULL_LINE = (-math.inf, math.inf)


@dataclass(frozen=True)
class UnitaryFamily:
    generator: np.ndarray
    rho0: np.ndarray
    domain: tuple = _FULL_LINE

    def __post_init__(self):
        h = as_hermitian(self.generator, "generator")
        r = validate_density(self.rho0)
        if h.shape != r.shape:
            raise DimensionMismatch(f"generator {h.shape} and rho0 {r.shape} differ")
        object.__setattr__(self, "generator", h)
        object.__setattr__(self, "rho0", r)

    @property
    def dim(self):
        return self.rho0.shape[0]

    def propagator(self, theta):
        return expm(-1j * theta * self.generator)

    def rho(self, theta):
        if theta == 0:
            return self.rho0
        u = self.propagator(theta)
        return u @ self.rho0 @ u.conj().T

    def drho(self, theta):
        r = self.rho(theta)
        h = self.generator
        return -1j * (h @ r - r @ h)


@dataclass(frozen=True)
class AnalyticFamily:
    evaluator: Callable
    derivative: Callable
    domain: tuple = _FULL_LINE

    def rho(self, theta):
        return self.evaluator(theta)

    def drho(self, theta):
        return self.derivative(theta)


@dataclass(frozen=True)
class SampledFamily:
    evaluator: Callable
    domain: tuple = _FULL_LINE

    def rho(self, theta):
        return self.evaluator(theta)


class GridFamily(SampledFamily):
    """Sampled family backed by a finite table of (theta, rho) pairs.

    No interpolation: every requested theta must be on the grid.
    """

    def __init__(self, thetas, matrices, atol=1e-12):
        thetas = np.asarray(thetas, dtype=float)
        if len(thetas) != len(matrices):
            raise DimensionMismatch(
                f"{len(thetas)} grid points but {len(matrices)} matrices"
            )
        mats = [np.asarray(m, dtype=complex) for m in matrices]

        def lookup(theta):
            hits = np.flatnonzero(np.abs(thetas - theta) <= atol * max(1.0, abs(theta)))
            if len(hits) == 0:
                raise EvaluationFailure(f"theta = {theta!r} is not on the sample grid")
            return mats[hits[0]]

        super().__init__(lookup, (float(thetas.min()), float(thetas.max())))
        object.__setattr__(self, "thetas", thetas)


@dataclass(frozen=True)
class SpectralFamily:
    """Family given by eigenvalue paths p_i(theta) and eigenvector paths.

    ``eigenvectors(theta)`` returns the vectors as columns. Derivative
    evaluators are optional; without them paths are differenced.
    """

    eigenvalues: Callable
    eigenvectors: Callable
    eigenvalue_derivatives: Optional[Callable] = None
    eigenvector_derivatives: Optional[Callable] = None
    domain: tuple = _FULL_LINE

    def rho(self, theta):
        p = np.asarray(self.eigenvalues(theta), dtype=float)
        v = np.asarray(self.eigenvectors(theta), dtype=complex)
        return (v * p) @ v.conj().T


@dataclass(frozen=True)
class DerivativeSpec:
    mode: str = "exact"
    step: float = DEFAULT_STEP

    def __post_init__(self):
        if self.mode not in ("exact", "central_difference"):
            raise ValidationError(f"unknown derivative mode {self.mode!r}")
        if not self.step > 0:
            raise ValidationError(f"step must be positive, got {self.step}")
        if self.step > MAX_STEP:
            raise StepTooLarge(f"step {self.step} exceeds the maximum {MAX_STEP}")


@dataclass(frozen=True)
class DerivativeBundle:
    """Support eigendata at theta together with its first derivatives.

    ``dpsi`` holds the derivative vectors as columns and
    ``overlaps[i, j] = <psi_i | d psi_j>``.
    """

    decomp: SpectralDecomposition
    drho: Optional[np.ndarray]
    dp: np.ndarray
    dpsi: Optional[np.ndarray] = None
    overlaps: Optional[np.ndarray] = None
    source: str = ""
    diagnostics: tuple = field(default=())

    @property
    def support_dim(self):
        return self.decomp.support_dim

    def antisymmetry_error(self):
        if self.overlaps is None:
            return 0.0
        return float(np.abs(self.overlaps + self.overlaps.conj().T).max())


def _check_stencil(family, theta, h):
    lo, hi = getattr(family, "domain", _FULL_LINE)
    if theta - h < lo or theta + h > hi:
        raise StepTooLarge(
            f"stencil [{theta - h}, {theta + h}] leaves the family domain [{lo}, {hi}]"
        )


def _evaluate(fn, theta):
    try:
        return fn(theta)
    except (EvaluationFailure, ValidationError):
        raise
    except Exception as exc:
        raise EvaluationFailure(f"family evaluation failed at theta={theta}: {exc}") from exc


def evaluate_derivative(family, theta, spec=DerivativeSpec()):
    """d rho / d theta at ``theta`` as a Hermitian matrix."""
    if spec.mode == "central_difference":
        h = spec.step
        _check_stencil(family, theta, h)
        plus = np.asarray(_evaluate(family.rho, theta + h), dtype=complex)
        minus = np.asarray(_evaluate(family.rho, theta - h), dtype=complex)
        d = (plus - minus) / (2 * h)
        return (d + d.conj().T) / 2

    if isinstance(family, (UnitaryFamily, AnalyticFamily)):
        return as_hermitian(_evaluate(family.drho, theta), "drho")
    if isinstance(family, SpectralFamily):
        if family.eigenvalue_derivatives is None or family.eigenvector_derivatives is None:
            raise EvaluationFailure("spectral family has no exact derivative evaluators")
        return product_rule_drho(_spectral_bundle(family, theta, DEFAULT_STEP, 0.0))
    raise EvaluationFailure(
        f"{type(family).__name__} has no exact derivative; use central_difference"
    )


def overlaps_from_perturbation(decomp, drho):
    """Invert the eigenbasis relation between d rho and the eigen-derivatives.

    Returns ``(overlaps, dp)`` on the support: ``dp_i = drho_ii`` and
    ``overlaps[i, j] = drho_ij / (p_j - p_i)`` off the diagonal. Diagonal
    overlaps are set to zero (parallel-transport gauge), as are pairs inside
    an aligned degenerate cluster.
    """
    drho = as_hermitian(drho, "drho")
    if drho.shape[0] != decomp.full_dim:
        raise DimensionMismatch(f"drho dim {drho.shape[0]} != state dim {decomp.full_dim}")
    block = in_eigenbasis(decomp, drho)
    p = decomp.eigenvalues
    s = len(p)
    scale = max(1.0, float(np.abs(block).max()) if block.size else 0.0)
    overlaps = np.zeros((s, s), dtype=complex)
    for i in range(s):
        for j in range(s):
            if i == j:
                continue
            gap = p[j] - p[i]
            if abs(gap) < DEGENERACY_GAP:
                if not decomp.aligned and abs(block[i, j]) > 1e-10 * scale:
                    raise DegenerateGap(
                        f"eigenvalues {i} and {j} are degenerate (gap {abs(gap):.3e}) "
                        f"but drho couples them ({abs(block[i, j]):.3e}); "
                        "decompose with drho to align the cluster"
                    )
                continue
            overlaps[i, j] = block[i, j] / gap
    return overlaps, block.diagonal().real.copy()


def bundle_from_derivative(decomp, drho):
    """Exact first-order bundle from a known d rho.

    The out-of-support part of each derivative vector follows from the
    same relation with p_j = 0: ``Q drho |psi_i> / p_i``.
    """
    drho = as_hermitian(drho, "drho")
    overlaps, dp = overlaps_from_perturbation(decomp, drho)
    v = decomp.eigenvectors
    dv = drho @ v
    outside = (dv - v @ (v.conj().T @ dv)) / decomp.eigenvalues
    dpsi = v @ overlaps + outside
    return DerivativeBundle(
        decomp, drho, dp, dpsi, overlaps, source="perturbation",
        diagnostics=decomp.diagnostics,
    )


def product_rule_drho(bundle):
    """Rebuild d rho from {dp, dpsi} on the support."""
    v = bundle.decomp.eigenvectors
    p = bundle.decomp.eigenvalues
    out = (v * bundle.dp) @ v.conj().T
    if bundle.dpsi is not None:
        cross = (bundle.dpsi * p) @ v.conj().T
        out = out + cross + cross.conj().T
    return out


def _unitary_bundle(family, theta, threshold, solver):
    decomp0 = spectral_decompose(family.rho0, threshold, solver=solver)
    h = family.generator
    v = decomp0.eigenvectors
    if theta != 0:
        v = gauge_fix(expm_multiply(-1j * theta * h, v))
    p = decomp0.eigenvalues
    decomp = SpectralDecomposition(
        p, v, threshold, family.dim, diagnostics=decomp0.diagnostics
    )
    hv = h @ v
    dpsi = -1j * hv
    overlaps = v.conj().T @ dpsi
    weighted = v * p
    drho = -1j * (hv @ weighted.conj().T - weighted @ hv.conj().T)
    return DerivativeBundle(
        decomp, drho, np.zeros(len(p)), dpsi, overlaps, source="unitary",
        diagnostics=decomp.diagnostics,
    )


def _phase_align(reference, vectors):
    c = np.einsum("ij,ij->j", reference.conj(), vectors)
    mags = np.abs(c)
    if np.any(mags < 0.5):
        bad = int(np.argmin(mags))
        raise DegenerateGap(
            f"eigenvector {bad} rotates by more than 60 degrees across the stencil "
            f"(overlap {mags[bad]:.3f}); eigenvalue paths likely cross"
        )
    return vectors * (c.conj() / mags)


def _spectral_bundle(family, theta, h, threshold):
    p = np.asarray(_evaluate(family.eigenvalues, theta), dtype=float)
    v = np.asarray(_evaluate(family.eigenvectors, theta), dtype=complex)
    if abs(p.sum() - 1) > 1e-10:
        raise TraceNotOne(f"spectral family eigenvalues sum to {p.sum():.12g}")
    gram = v.conj().T @ v
    if np.abs(gram - np.eye(len(p))).max() > 1e-10:
        raise ValidationError("spectral family eigenvectors are not orthonormal")

    if family.eigenvalue_derivatives is not None:
        dp = np.asarray(_evaluate(family.eigenvalue_derivatives, theta), dtype=float)
    else:
        _check_stencil(family, theta, h)
        dp = (np.asarray(_evaluate(family.eigenvalues, theta + h), dtype=float)
              - np.asarray(_evaluate(family.eigenvalues, theta - h), dtype=float)) / (2 * h)
    if family.eigenvector_derivatives is not None:
        dv = np.asarray(_evaluate(family.eigenvector_derivatives, theta), dtype=complex)
    else:
        _check_stencil(family, theta, h)
        vp = _phase_align(v, np.asarray(_evaluate(family.eigenvectors, theta + h), dtype=complex))
        vm = _phase_align(v, np.asarray(_evaluate(family.eigenvectors, theta - h), dtype=complex))
        dv = (vp - vm) / (2 * h)

    keep = p > threshold
    if np.any(np.abs(dp[~keep]) > 1e-9):
        raise SupportDimensionChanged("an out-of-support eigenvalue has nonzero slope")
    order = np.argsort(p[keep])[::-1]
    p, v, dp, dv = p[keep][order], v[:, keep][:, order], dp[keep][order], dv[:, keep][:, order]

    fixed = gauge_fix(v)
    phase = np.einsum("ij,ij->j", v.conj(), fixed)
    v, dv = fixed, dv * phase
    decomp = SpectralDecomposition(p, v, threshold, v.shape[0])
    bundle = DerivativeBundle(decomp, None, dp, dv, v.conj().T @ dv, source="spectral")
    return DerivativeBundle(
        decomp, product_rule_drho(bundle), dp, dv, bundle.overlaps, source="spectral"
    )


def _finite_difference_bundle(family, theta, h, threshold):
    _check_stencil(family, theta, h)
    centre = spectral_decompose(_evaluate(family.rho, theta), threshold)
    plus = spectral_decompose(_evaluate(family.rho, theta + h), threshold)
    minus = spectral_decompose(_evaluate(family.rho, theta - h), threshold)
    dims = (minus.support_dim, centre.support_dim, plus.support_dim)
    if len(set(dims)) != 1:
        raise SupportDimensionChanged(
            f"support dimension changes across the stencil: {dims} at "
            f"theta - h, theta, theta + h"
        )
    for group in centre.clusters():
        if len(group) > 1:
            raise DegenerateGap(
                f"support eigenvalues {group} are degenerate at theta = {theta}; "
                "finite differences cannot follow the eigenvectors"
            )
    v = centre.eigenvectors
    vp = _phase_align(v, plus.eigenvectors)
    vm = _phase_align(v, minus.eigenvectors)
    dpsi = (vp - vm) / (2 * h)
    dp = (plus.eigenvalues - minus.eigenvalues) / (2 * h)
    drho = evaluate_derivative(family, theta, DerivativeSpec("central_difference", h))
    return DerivativeBundle(
        centre, drho, dp, dpsi, v.conj().T @ dpsi, source="finite_difference",
        diagnostics=centre.diagnostics,
    )


def eigen_derivatives(family, theta, h=DEFAULT_STEP, threshold=DEFAULT_THRESHOLD,
                      mode="auto", solver="dense"):
    """Build the derivative bundle of ``family`` at ``theta``.

    With ``mode="auto"`` each family kind uses its most accurate route:
    unitary families use d psi = -iH psi exactly, analytic families invert
    the perturbation relation with their exact derivative, spectral families
    use their paths, and sampled families fall back to central differences.
    ``mode="finite_difference"`` forces differencing of eigenpairs.
    """
    DerivativeSpec("central_difference", h)
    if mode not in ("auto", "finite_difference"):
        raise ValidationError(f"unknown mode {mode!r}")
    if mode == "auto":
        if isinstance(family, UnitaryFamily):
            return _unitary_bundle(family, theta, threshold, solver)
        if isinstance(family, SpectralFamily):
            return _spectral_bundle(family, theta, h, threshold)
        if isinstance(family, AnalyticFamily):
            drho = evaluate_derivative(family, theta)
            decomp = spectral_decompose(_evaluate(family.rho, theta), threshold,
                                        drho=drho, solver=solver)
            return bundle_from_derivative(decomp, drho)
    return _finite_difference_bundle(family, theta, h, threshold)
