import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from qfi.engine import qfi_sld, qfi_support
from qfi.errors import (
    DegenerateGap,
    EvaluationFailure,
    StepTooLarge,
    SupportDimensionChanged,
)
from qfi.family import (
    AnalyticFamily,
    DerivativeSpec,
    GridFamily,
    SampledFamily,
    SpectralFamily,
    UnitaryFamily,
    eigen_derivatives,
    evaluate_derivative,
    overlaps_from_perturbation,
    product_rule_drho,
)
from qfi.hermitian import spectral_decompose
from qfi.matrix_repr import qfi_matrix
from qfi.sampling import (
    random_analytic_family,
    random_density,
    random_hermitian,
    random_unitary,
)

from helpers import SX

RHO0 = np.diag([0.75, 0.25]).astype(complex)
H_HALF_X = SX / 2


def diag_family():
    return AnalyticFamily(
        lambda t: np.diag([t, 1 - t]).astype(complex),
        lambda t: np.diag([1.0, -1.0]).astype(complex),
        domain=(0.0, 1.0),
    )


def test_unitary_derivative_matches_commutator():
    # -i[H, rho] with H = sx/2, rho = diag(3/4, 1/4), by hand
    expected = np.array([[0, 0.25j], [-0.25j, 0]])
    got = evaluate_derivative(UnitaryFamily(H_HALF_X, RHO0), 0.0)
    np.testing.assert_allclose(got, expected, atol=1e-15)


def test_analytic_exact_derivative():
    np.testing.assert_allclose(evaluate_derivative(diag_family(), 0.3), np.diag([1.0, -1.0]))


def test_sampled_central_difference():
    fam = SampledFamily(lambda t: np.diag([t**2, 1 - t**2]).astype(complex))
    got = evaluate_derivative(fam, 0.5, DerivativeSpec("central_difference", 1e-3))
    assert np.abs(got - np.diag([1.0, -1.0])).max() < 1e-6


def test_central_difference_of_unitary_family_is_second_order(rng):
    fam = UnitaryFamily(random_hermitian(3, rng), random_density(3, 2, rng)[0])
    exact = evaluate_derivative(fam, 0.4)
    e1 = np.abs(evaluate_derivative(fam, 0.4, DerivativeSpec("central_difference", 1e-2)) - exact).max()
    e2 = np.abs(evaluate_derivative(fam, 0.4, DerivativeSpec("central_difference", 5e-3)) - exact).max()
    assert 3 < e1 / e2 < 5


def test_sampled_family_has_no_exact_derivative():
    with pytest.raises(EvaluationFailure):
        evaluate_derivative(SampledFamily(lambda t: RHO0), 0.0)


def test_step_limits():
    with pytest.raises(StepTooLarge):
        DerivativeSpec("central_difference", 0.2)
    with pytest.raises(StepTooLarge, match="domain"):
        evaluate_derivative(diag_family(), 0.995, DerivativeSpec("central_difference", 0.01))


def test_unitary_derivative_is_traceless_hermitian(rng):
    fam = UnitaryFamily(random_hermitian(4, rng), random_density(4, 3, rng)[0])
    d = evaluate_derivative(fam, 0.7)
    assert abs(np.trace(d)) < 1e-12
    np.testing.assert_allclose(d, d.conj().T, atol=1e-14)


def test_commuting_family_has_no_overlaps():
    d = spectral_decompose(np.diag([0.25, 0.75]))
    overlaps, dp = overlaps_from_perturbation(d, np.diag([1.0, -1.0]))
    np.testing.assert_array_equal(overlaps, np.zeros((2, 2)))
    # descending order puts p = 0.75 first; its slope is -1
    np.testing.assert_allclose(dp, [-1.0, 1.0])


def test_overlap_by_direct_division():
    d = spectral_decompose(RHO0)
    overlaps, dp = overlaps_from_perturbation(d, np.array([[0, 0.25j], [-0.25j, 0]]))
    # (i/4) / (0.25 - 0.75)
    assert overlaps[0, 1] == pytest.approx(-0.5j, abs=1e-15)
    assert overlaps[1, 0] == pytest.approx(-0.5j, abs=1e-15)
    np.testing.assert_allclose(dp, [0, 0], atol=1e-15)


def test_unaligned_degeneracy_is_reported():
    d = spectral_decompose(np.eye(2) / 2)
    with pytest.raises(DegenerateGap, match="eigenvalues 0 and 1"):
        overlaps_from_perturbation(d, np.array([[0, 0.1], [0.1, 0]]))


def test_aligned_degeneracy_gets_zero_overlap(rng):
    drho = np.array([[0, 0.1], [0.1, 0]], dtype=complex)
    d = spectral_decompose(np.eye(2) / 2, drho=drho)
    overlaps, dp = overlaps_from_perturbation(d, drho)
    np.testing.assert_array_equal(overlaps, 0)
    np.testing.assert_allclose(sorted(dp), [-0.1, 0.1])


def test_unitary_bundle_uses_generator():
    b = eigen_derivatives(UnitaryFamily(H_HALF_X, RHO0), 0.0)
    # -i (sx/2)|0> = (0, -i/2)
    np.testing.assert_allclose(b.dpsi[:, 0], [0, -0.5j], atol=1e-15)
    assert b.overlaps[0, 1] == pytest.approx(-0.5j, abs=1e-15)
    np.testing.assert_array_equal(b.dp, [0, 0])


def test_constant_family_has_zero_derivatives():
    rho = np.diag([0.6, 0.3, 0.1]).astype(complex)
    b = eigen_derivatives(SampledFamily(lambda t: rho), 0.0)
    np.testing.assert_array_equal(b.dpsi, 0)
    np.testing.assert_array_equal(b.dp, 0)


def test_spectral_family_exact_input():
    fam = SpectralFamily(
        lambda t: np.array([t, 1 - t]),
        lambda t: np.eye(2, dtype=complex),
    )
    b = eigen_derivatives(fam, 0.25)
    np.testing.assert_allclose(b.decomp.eigenvalues, [0.75, 0.25])
    # the p = 0.25 path is p(t) = t (slope +1), the p = 0.75 path is 1 - t
    np.testing.assert_allclose(b.dp, [-1.0, 1.0], atol=1e-9)
    np.testing.assert_allclose(b.dpsi, 0, atol=1e-12)


def test_rank_crossing_is_an_error():
    fam = SampledFamily(lambda t: np.diag([1 - t**2, t**2, 0]).astype(complex))
    with pytest.raises(SupportDimensionChanged):
        eigen_derivatives(fam, 0.0)


def test_degenerate_centre_is_an_error_for_differencing():
    fam = SampledFamily(lambda t: np.diag([0.4 + t, 0.4 - t, 0.2]).astype(complex))
    with pytest.raises(DegenerateGap):
        eigen_derivatives(fam, 0.0)


def test_grid_family_requires_exact_points():
    ts = [0.2 - 1e-5, 0.2, 0.2 + 1e-5]
    fam = GridFamily(ts, [np.diag([t, 1 - t]) for t in ts])
    b = eigen_derivatives(fam, 0.2, h=1e-5)
    np.testing.assert_allclose(sorted(b.dp), [-1, 1], atol=1e-8)
    with pytest.raises(EvaluationFailure, match="not on the sample grid"):
        eigen_derivatives(fam, 0.2, h=2e-6)


def _bundles(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    rank = int(rng.integers(1, n + 1))
    fam = random_analytic_family(n, rank, rng)
    sampled = SampledFamily(fam.rho)
    ufam = UnitaryFamily(random_hermitian(n, rng), random_density(n, rank, rng)[0])
    return {
        "perturbation": eigen_derivatives(fam, 0.1),
        "finite_difference": eigen_derivatives(sampled, 0.1, h=1e-4),
        "unitary": eigen_derivatives(ufam, 0.3),
    }


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bundle_invariants(seed):
    for name, b in _bundles(seed).items():
        # central differences carry an O(h^2) error
        tol = 1e-6 if name == "finite_difference" else 1e-10
        assert b.antisymmetry_error() < tol, name
        assert abs(b.dp.sum()) < 1e-9, name
        assert abs(np.trace(b.drho)) < 1e-9, name
        proj = b.decomp.projector()
        diff = proj @ (product_rule_drho(b) - b.drho) @ proj
        assert np.abs(diff).max() < tol, name


def test_finite_difference_bundle_agrees_with_exact(rng):
    fam = random_analytic_family(5, 3, rng)
    exact = eigen_derivatives(fam, 0.2)
    fd = eigen_derivatives(fam, 0.2, h=1e-4, mode="finite_difference")
    assert qfi_support(fd).F == pytest.approx(qfi_support(exact).F, rel=1e-6)


def _path_family(rng, n=4, rank=3):
    w0 = random_unitary(n, rng)
    k = random_hermitian(n, rng)
    p0 = np.array([0.5, 0.3, 0.2])
    slopes = np.array([0.4, -0.1, -0.3])

    def frame(t):
        return expm(-1j * t * k) @ w0

    def probs(t):
        return np.concatenate([p0 + t * slopes, np.zeros(n - rank)])

    rho = lambda t: (frame(t) * probs(t)) @ frame(t).conj().T
    return rho, frame, k, probs


def test_finite_difference_error_is_second_order(rng):
    rho, frame, k, probs = _path_family(rng)
    theta = 0.1
    psi = frame(theta)[:, :3]
    dpsi = -1j * k @ psi
    dpsi_pt = dpsi - psi * np.einsum("ij,ij->j", psi.conj(), dpsi)

    def error(h):
        b = eigen_derivatives(SampledFamily(rho), theta, h=h)
        total = 0.0
        for i in range(3):
            # descending eigenvalue order equals the path order here
            c = np.vdot(psi[:, i], b.decomp.eigenvectors[:, i])
            total += np.linalg.norm(b.dpsi[:, i] - c * dpsi_pt[:, i])
        return total

    ratio = error(2e-2) / error(1e-2)
    assert 3 <= ratio <= 5


def _spectral_from(rho_fn, frame, k, probs, phases):
    def vecs(t):
        return frame(t)[:, :3] * phases(t)

    return SpectralFamily(lambda t: probs(t)[:3], vecs)


def test_qfi_is_gauge_invariant(rng):
    rho, frame, k, probs = _path_family(rng)
    plain = _spectral_from(rho, frame, k, probs, lambda t: np.ones(3))
    fixed = _spectral_from(rho, frame, k, probs, lambda t: np.exp(1j * np.array([0.4, -2.0, 1.3])))
    moving = _spectral_from(rho, frame, k, probs, lambda t: np.exp(1j * t * np.array([3.0, -1.0, 0.5])))
    ref = qfi_support(eigen_derivatives(plain, 0.1))
    for fam in (fixed, moving):
        b = eigen_derivatives(fam, 0.1)
        for report in (qfi_support(b), qfi_matrix(b), qfi_sld(b.decomp, b.drho)):
            assert report.F == pytest.approx(ref.F, abs=1e-8)
            assert report.F_ct == pytest.approx(ref.F_ct, abs=1e-8)


def test_parallel_evaluation_is_deterministic(rng):
    from concurrent.futures import ThreadPoolExecutor

    fam = random_analytic_family(4, 2, rng)
    thetas = [0.1 * i for i in range(8)]
    serial = [qfi_support(eigen_derivatives(fam, t)).F for t in thetas]
    with ThreadPoolExecutor(4) as pool:
        parallel = list(pool.map(lambda t: qfi_support(eigen_derivatives(fam, t)).F, thetas))
    assert serial == parallel
