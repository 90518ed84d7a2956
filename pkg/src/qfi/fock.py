"""Truncated two-mode Fock space and the Mach-Zehnder phase demo.

Two-mode basis states |n_a, n_b> are ordered lexicographically with n_a
major: index = n_a * cutoff + n_b, where ``cutoff`` is the number of levels
kept per mode.
"""

import numpy as np

from .engine import qfi_pure, qfi_support
from .ensemble import eigen_ensemble_is_optimal
from .errors import TruncationTooSmall, ValidationError
from .family import UnitaryFamily, eigen_derivatives
from .hermitian import DEFAULT_THRESHOLD

ESCAPE_TOL = 1e-12


def annihilation(cutoff):
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1).astype(complex)


def two_mode_annihilators(cutoff):
    a = annihilation(cutoff)
    eye = np.eye(cutoff)
    return np.kron(a, eye), np.kron(eye, a)


def mzi_generator(cutoff):
    """H = (a^dagger b - a b^dagger) / (2i) on the truncated two-mode space."""
    a, b = two_mode_annihilators(cutoff)
    hop = a.conj().T @ b
    return (hop - hop.conj().T) / 2j


def fock_state(n_a, n_b, cutoff):
    psi = np.zeros(cutoff * cutoff, dtype=complex)
    psi[n_a * cutoff + n_b] = 1.0
    return psi


def sector_generator(total):
    """MZI generator inside the sector n_a + n_b = total.

    Basis |k, total - k> for k = 0..total (n_a ascending).
    """
    k = np.arange(total)
    hop = np.zeros((total + 1, total + 1), dtype=complex)
    hop[k + 1, k] = np.sqrt((k + 1) * (total - k))
    return (hop - hop.conj().T) / 2j


def escape_amplitude(psi, cutoff):
    """Norm of H psi that lands on levels beyond the cutoff."""
    big = cutoff + 1
    embedded = np.zeros(big * big, dtype=complex)
    for n_a in range(cutoff):
        embedded[n_a * big:n_a * big + cutoff] = psi[n_a * cutoff:(n_a + 1) * cutoff]
    out = mzi_generator(big) @ embedded
    grid = out.reshape(big, big)
    return float(np.sqrt(np.sum(np.abs(grid[cutoff, :]) ** 2) + np.sum(np.abs(grid[:cutoff, cutoff]) ** 2)))


def _fock_qfi(psi, h, threshold):
    rho0 = np.outer(psi, psi.conj())
    family = UnitaryFamily(h, rho0)
    bundle = eigen_derivatives(family, 0.0, threshold=threshold)
    pure = qfi_pure(psi, -1j * (h @ psi))
    support = qfi_support(bundle)
    optimal, witness = eigen_ensemble_is_optimal(bundle.decomp, h)
    return pure, support, optimal, witness


def mzi_demo(photons, truncation, full_space=False, threshold=DEFAULT_THRESHOLD):
    """Phase QFI of the input |n, 0> through the MZI generator.

    The default path works in the (n + 1)-dimensional fixed-photon-number
    sector; ``full_space=True`` uses the whole truncated two-mode space.
    """
    if photons < 0:
        raise ValidationError(f"photon number must be nonnegative, got {photons}")
    if truncation < photons + 1:
        raise TruncationTooSmall(
            f"truncation {truncation} cannot hold {photons} photons in one mode"
        )
    full_psi = fock_state(photons, 0, truncation)
    escape = escape_amplitude(full_psi, truncation)
    if escape > ESCAPE_TOL:
        raise TruncationTooSmall(f"H leaves the truncated space with amplitude {escape:.3e}")

    if full_space:
        h = mzi_generator(truncation)
        psi = full_psi
    else:
        h = sector_generator(photons)
        psi = np.zeros(photons + 1, dtype=complex)
        psi[photons] = 1.0
    pure, support, optimal, witness = _fock_qfi(psi, h, threshold)
    return {
        "photons": photons,
        "truncation": truncation,
        "space": "full" if full_space else "sector",
        "dim": int(len(psi)),
        "F_pure": pure,
        "report": support,
        "eigen_ensemble_optimal": optimal,
        "escape_amplitude": escape,
    }
