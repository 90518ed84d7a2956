"""Independent oracles shared by the test modules."""

import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)


def lyapunov_sld(rho, drho):
    """Solve drho = (L rho + rho L) / 2 by vectorization (min-norm least squares)."""
    n = rho.shape[0]
    eye = np.eye(n)
    # row-major vec: vec(A X B) = (A kron B^T) vec(X)
    op = 0.5 * (np.kron(eye, rho.T) + np.kron(rho, eye))
    sol, *_ = np.linalg.lstsq(op, drho.reshape(-1), rcond=None)
    L = sol.reshape(n, n)
    return (L + L.conj().T) / 2


def brute_force_qfi(rho, drho):
    L = lyapunov_sld(rho, drho)
    return float(np.real(np.trace(rho @ L @ L)))


def variance(psi, h):
    hp = h @ psi
    return float(np.vdot(hp, hp).real - np.vdot(psi, hp).real ** 2)


def random_case(rng, n=None, rank=None, kind=None):
    """One corpus case: ``(bundle, kind)`` for a random family at a random theta.

    ``kind`` is "unitary" or "analytic"; unset arguments are drawn from ``rng``.
    """
    from qfi.family import UnitaryFamily, eigen_derivatives
    from qfi.sampling import random_analytic_family, random_density, random_hermitian

    n = int(rng.integers(2, 9)) if n is None else n
    rank = int(rng.integers(1, n + 1)) if rank is None else rank
    kind = ("unitary", "analytic")[int(rng.integers(2))] if kind is None else kind
    theta = float(rng.uniform(-1, 1))
    if kind == "unitary":
        family = UnitaryFamily(random_hermitian(n, rng), random_density(n, rank, rng)[0])
    else:
        family = random_analytic_family(n, rank, rng)
    bundle = eigen_derivatives(family, theta)
    return bundle, kind
