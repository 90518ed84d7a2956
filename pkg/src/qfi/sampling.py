"""Random test problems: unitaries, generators, states and analytic families."""

import numpy as np
from scipy.linalg import expm

from .family import AnalyticFamily


def random_unitary(n, rng):
    """Haar-random unitary (QR of a Ginibre matrix with phase correction)."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = r.diagonal()
    return q * (d / np.abs(d))


def random_isometry(n, k, rng):
    return random_unitary(n, rng)[:, :k]


def random_hermitian(n, rng, scale=1.0):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (a + a.conj().T) / 2


def random_probabilities(rank, rng, floor=0.0):
    """Dirichlet(1) weights, optionally mixed with a uniform floor."""
    p = rng.dirichlet(np.ones(rank))
    return (1 - floor * rank) * p + floor


def random_density(n, rank, rng, floor=0.0):
    """Rank-``rank`` density matrix V diag(p) V^dagger with Haar V.

    Returns ``(rho, p, V)`` with V of shape ``(n, rank)``.
    """
    v = random_isometry(n, rank, rng)
    p = random_probabilities(rank, rng, floor)
    return (v * p) @ v.conj().T, p, v


def random_analytic_family(n, rank, rng, rotation_scale=1.0):
    """rho(theta) = W(theta) diag(softmax(a + b theta), 0...) W(theta)^dagger.

    W(theta) = exp(-iK theta) W0, so eigenvalues and eigenvectors both move
    while the rank stays fixed. The derivative is exact.
    """
    w0 = random_unitary(n, rng)
    k = random_hermitian(n, rng, rotation_scale)
    a = rng.normal(size=rank)
    b = rng.normal(size=rank)

    def probs(theta):
        z = np.exp(a + b * theta - np.max(a + b * theta))
        p = np.zeros(n)
        p[:rank] = z / z.sum()
        return p

    def frame(theta):
        return expm(-1j * theta * k) @ w0

    def rho(theta):
        w = frame(theta)
        return (w * probs(theta)) @ w.conj().T

    def drho(theta):
        w = frame(theta)
        p = probs(theta)
        dp = p * (np.concatenate([b, np.zeros(n - rank)]) - np.dot(p[:rank], b))
        r = (w * p) @ w.conj().T
        return -1j * (k @ r - r @ k) + (w * dp) @ w.conj().T

    return AnalyticFamily(rho, drho)


def conjugated_family(family, rng, rotation_scale=1.0):
    """Family rho'(theta) = U(theta) rho(theta) U(theta)^dagger for a random
    theta-dependent unitary U(theta) = exp(-iK theta) U0."""
    n = np.asarray(family.rho(0.0)).shape[0]
    u0 = random_unitary(n, rng)
    k = random_hermitian(n, rng, rotation_scale)

    def u(theta):
        return expm(-1j * theta * k) @ u0

    def rho(theta):
        w = u(theta)
        return w @ family.rho(theta) @ w.conj().T

    def drho(theta):
        w = u(theta)
        r = w @ family.rho(theta) @ w.conj().T
        return w @ family.drho(theta) @ w.conj().T - 1j * (k @ r - r @ k)

    return AnalyticFamily(rho, drho)
