"""Entropies and the relative-entropy non-Gaussianity.

All logarithms are base 2, so every entropy in the package is in bits. The
single helper :func:`xlog2x` is the only place a logarithm of a probability is
taken.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .fock import DensityMatrix, annihilation, hermitize

if TYPE_CHECKING:
    from .constellation import Constellation

CLAMP_TOL = 1e-12
LOG_BASE = 2
NEGATIVE_EIGEN_TOL = 1e-8
DELTA_CLAMP = 1e-7
DELTA_FAIL = 1e-6


class InvalidStateError(ValueError):
    """A matrix that should be a quantum state is not one."""


class CutoffError(ArithmeticError):
    """A quantity that must be non-negative came out clearly negative."""


@dataclass(frozen=True, eq=False)
class GaussianMoments:
    """Quadrature mean ``(<q>, <p>)`` and covariance matrix (vacuum = identity)."""

    mean: np.ndarray
    cov: np.ndarray

    @property
    def symplectic_eigenvalue(self) -> float:
        det = float(np.linalg.det(self.cov))
        return float(np.sqrt(max(det, 0.0)))

    def is_isotropic(self, tol: float = 1e-8) -> bool:
        c = self.cov
        return abs(c[0, 1]) <= tol and abs(c[1, 0]) <= tol and abs(c[0, 0] - c[1, 1]) <= tol

    @property
    def displacement(self) -> complex:
        """Coherent amplitude ``alpha = (<q> + i<p>)/2``."""
        return complex(self.mean[0], self.mean[1]) / 2.0


def xlog2x(p: np.ndarray, clamp_tol: float = CLAMP_TOL) -> float:
    """``sum p log2 p`` over entries above ``clamp_tol`` (the rest count as 0)."""
    p = np.asarray(p, dtype=float)
    p = p[p > clamp_tol]
    return float(np.sum(p * np.log2(p)))


def shannon_entropy(probs: np.ndarray, clamp_tol: float = CLAMP_TOL) -> float:
    return -xlog2x(probs, clamp_tol)


def _spectrum(a: np.ndarray) -> np.ndarray:
    ev = np.linalg.eigvalsh(hermitize(a))
    if ev.min() < -NEGATIVE_EIGEN_TOL:
        raise InvalidStateError(f"eigenvalue {ev.min():.3e} is below -{NEGATIVE_EIGEN_TOL:g}")
    return ev


def von_neumann_entropy(rho: DensityMatrix, clamp_tol: float = CLAMP_TOL) -> float:
    """Entropy in bits from the Hermitian spectrum of ``rho``.

    Raises:
        InvalidStateError: if an eigenvalue is below -1e-8.
    """
    return max(0.0, -xlog2x(_spectrum(rho.entries), clamp_tol))


def gram_matrix(c: "Constellation") -> np.ndarray:
    """Normalized Gram matrix ``sqrt(p_m p_n) <a_m|a_n>`` of a coherent ensemble.

    Uses the exact overlap ``<a|b> = exp(-|a|^2/2 - |b|^2/2 + conj(a) b)``, so
    there is no truncation error.
    """
    a = c.amplitudes
    half = 0.5 * np.abs(a) ** 2
    log_overlap = -half[:, None] - half[None, :] + np.conj(a)[:, None] * a[None, :]
    sq = np.sqrt(c.probs)
    return hermitize(sq[:, None] * sq[None, :] * np.exp(log_overlap))


def gram_entropy(c: "Constellation", clamp_tol: float = CLAMP_TOL) -> float:
    """Entropy of the coherent-state mixture, via its Gram matrix."""
    return max(0.0, -xlog2x(_spectrum(gram_matrix(c)), clamp_tol))


def moments_from_fock(rho: DensityMatrix) -> GaussianMoments:
    """Quadrature moments of a Fock-basis state (renormalized to unit trace first)."""
    r = rho.entries / rho.trace
    a = annihilation(rho.n_max)
    ea = np.trace(a @ r)
    ea2 = np.trace(a @ a @ r)
    en = float(np.sum(np.arange(rho.n_max + 1) * np.diag(r).real))
    mean = np.array([2.0 * ea.real, 2.0 * ea.imag])
    # q = a + a^dag, p = i(a^dag - a)
    second = np.array(
        [
            [2.0 * en + 1.0 + 2.0 * ea2.real, 2.0 * ea2.imag],
            [2.0 * ea2.imag, 2.0 * en + 1.0 - 2.0 * ea2.real],
        ]
    )
    return GaussianMoments(mean, second - np.outer(mean, mean))


def _check_nu(nu: float) -> float:
    if nu < 1.0 - 1e-8:
        raise ValueError(f"symplectic eigenvalue {nu} violates the uncertainty bound nu >= 1")
    return max(nu, 1.0)


def bosonic_g(lam: float) -> float:
    """Entropy (bits) of a one-mode Gaussian state with symplectic eigenvalue ``lam``.

    ``g(l) = (l+1)/2 log2((l+1)/2) - (l-1)/2 log2((l-1)/2)`` with ``g(1) = 0``.
    Values within 1e-8 below 1 are snapped to 1.
    """
    lam = _check_nu(float(lam))
    if lam - 1.0 < 1e-8:
        return 0.0
    up, down = 0.5 * (lam + 1.0), 0.5 * (lam - 1.0)
    return float(up * np.log2(up) - down * np.log2(down))


def thermal_spectrum(nbar: float, clamp_tol: float = CLAMP_TOL) -> np.ndarray:
    """Eigenvalues ``nbar^n/(nbar+1)^(n+1)`` of a thermal state, down to ``clamp_tol``."""
    if nbar <= 0.0:
        return np.ones(1)
    ratio = np.log(nbar / (nbar + 1.0))
    count = int(np.ceil((np.log(clamp_tol) + np.log1p(nbar)) / ratio)) + 2
    n = np.arange(max(count, 1))
    return np.exp(n * ratio - np.log1p(nbar))


def gaussian_reference_entropy(nu: float, clamp_tol: float = CLAMP_TOL) -> float:
    """``g(nu)`` evaluated from the thermal spectrum with the eigenvalue clamp applied.

    Entropies of near-Gaussian states lose every eigenvalue below ``clamp_tol``;
    using the same clamp on the Gaussian reference removes that bias from the
    difference of the two. For ``clamp_tol -> 0`` this is exactly
    :func:`bosonic_g`.
    """
    nu = _check_nu(nu)
    return -xlog2x(thermal_spectrum(0.5 * (nu - 1.0), clamp_tol), clamp_tol)


def _finish_delta(value: float) -> float:
    if value < -DELTA_FAIL:
        raise CutoffError(f"non-Gaussianity {value:.3e} is negative; the Fock cutoff is too small")
    return max(value, 0.0)


def delta_vn(rho: DensityMatrix, clamp_tol: float = CLAMP_TOL) -> float:
    """Relative-entropy non-Gaussianity ``S(rho^G) - S(rho)`` in bits.

    The Gaussian reference uses the covariance extracted from ``rho`` itself.
    Small negative values from truncation noise are clamped to zero.

    Raises:
        CutoffError: if the result is below -1e-6.
    """
    rho = rho.normalized()
    nu = moments_from_fock(rho).symplectic_eigenvalue
    return _finish_delta(gaussian_reference_entropy(nu, clamp_tol) - von_neumann_entropy(rho, clamp_tol))


def delta_vn_constellation(c: "Constellation", clamp_tol: float = CLAMP_TOL) -> float:
    """Truncation-free non-Gaussianity of a coherent-state constellation.

    Entropy comes from the Gram matrix and the covariance from the exact
    constellation moments.
    """
    from .constellation import constellation_moments

    nu = constellation_moments(c).symplectic_eigenvalue
    return _finish_delta(gaussian_reference_entropy(nu, clamp_tol) - gram_entropy(c, clamp_tol))
