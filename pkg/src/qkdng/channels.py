"""Thermal-loss and phase-diffusion channels, in Fock and moment pictures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .constellation import Constellation, constellation_moments
from .entropy import GaussianMoments
from .fock import (
    TAIL_TOL,
    DensityMatrix,
    coherent_ket,
    density_from_pure_ensemble,
    ensemble_cutoff,
    hermitize,
)


@dataclass(frozen=True)
class ChannelParams:
    """Thermal-loss channel: transmittance ``tau`` and thermal occupation ``nbar``."""

    tau: float
    nbar: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if not self.nbar >= 0.0:
            raise ValueError(f"nbar must be >= 0, got {self.nbar}")

    @property
    def epsilon(self) -> float:
        return 2.0 * self.nbar + 1.0

    @property
    def xi(self) -> float:
        """Excess noise ``2 nbar (1 - tau)`` added at the output."""
        return 2.0 * self.nbar * (1.0 - self.tau)

    @property
    def output_thermal_photons(self) -> float:
        return self.nbar * (1.0 - self.tau)

    @classmethod
    def from_distance(cls, d_km: float, nbar: float, attenuation: float = 0.01) -> "ChannelParams":
        """Fibre link with ``tau = 10^(-attenuation * d_km)``."""
        return cls(10.0 ** (-attenuation * d_km), nbar)


@dataclass(frozen=True)
class PhaseDiffusionParams:
    """Dephasing strength; ``delta = inf`` removes every off-diagonal element."""

    delta: float

    def __post_init__(self):
        if not self.delta >= 0.0:
            raise ValueError(f"delta must be >= 0 or inf, got {self.delta}")

    @property
    def damping(self) -> float:
        """Factor ``exp(-delta^2)`` applied to ``<a>``."""
        return 0.0 if math.isinf(self.delta) else math.exp(-self.delta**2)


def _laguerre_diagonals(x: float, log_x: float, kinds: int, length: int) -> np.ndarray:
    """``F[k, n] = |<n+k|D(alpha)|n>|`` up to sign, with ``x = |alpha|^2``.

    ``F[k, n] = sqrt(n!/(n+k)!) x^(k/2) exp(-x/2) L_n^(k)(x)`` obeys the
    orthonormal Laguerre recurrence
    ``sqrt((n+1)(n+1+k)) F[k,n+1] = (2n+1+k-x) F[k,n] - sqrt(n(n+k)) F[k,n-1]``,
    which is run forward on a rescaled copy to avoid under- and overflow.
    """
    k = np.arange(kinds, dtype=float)
    log_start = -0.5 * x + 0.5 * k * log_x - 0.5 * gammaln(k + 1)
    out = np.zeros((kinds, length))
    prev = np.zeros(kinds)
    cur = np.ones(kinds)
    log_scale = log_start.copy()
    for n in range(length):
        out[:, n] = cur * np.exp(log_scale)
        nxt = ((2 * n + 1 + k - x) * cur - np.sqrt(n * (n + k)) * prev) / np.sqrt((n + 1) * (n + 1 + k))
        prev, cur = cur, nxt
        big = np.maximum(np.abs(cur), np.abs(prev))
        rescale = big > 1e100
        if np.any(rescale):
            f = big[rescale]
            cur[rescale] /= f
            prev[rescale] /= f
            log_scale[rescale] += np.log(f)
    return out


def displacement_matrix(alpha: complex, rows: int, cols: int) -> np.ndarray:
    """Elements ``<m|D(alpha)|n>`` for ``m < rows``, ``n < cols``.

    Uses the associated-Laguerre closed form, evaluated along each diagonal
    ``m - n = k`` with a stable recurrence. Entries are exact (no edge error at
    the cutoff) because each depends only on ``alpha``, ``m`` and ``n``.
    """
    alpha = complex(alpha)
    d = np.zeros((rows, cols), dtype=complex)
    r = abs(alpha)
    if r == 0.0:
        d[: min(rows, cols), : min(rows, cols)] = np.eye(min(rows, cols))
        return d
    f = _laguerre_diagonals(r * r, 2.0 * np.log(r), max(rows, cols), min(rows, cols))
    u = alpha / r
    m, n = np.indices((rows, cols))
    lower = m >= n
    k = np.abs(m - n)
    lo = np.minimum(m, n)
    mag = f[k, lo]
    # below the diagonal the phase is u^k, above it (-conj u)^k
    d[lower] = mag[lower] * u ** k[lower]
    d[~lower] = mag[~lower] * (-u.conjugate()) ** k[~lower]
    return d


def _thermal_weights(ntherm: float, tail_tol: float) -> np.ndarray:
    if ntherm == 0.0:
        return np.ones(1)
    ratio = ntherm / (1.0 + ntherm)
    # geometric tail beyond k is ratio^(k+1)
    k_max = max(int(np.ceil(np.log(tail_tol * 1e-3) / np.log(ratio))), 1)
    return ratio ** np.arange(k_max + 1) / (1.0 + ntherm)


def _displaced_thermal_columns(alpha: complex, ntherm: float, n_max: int, tail_tol: float) -> np.ndarray:
    """Matrix ``W`` with ``W W^dag = D(alpha) rho_th D(alpha)^dag`` truncated to ``n_max``."""
    q = _thermal_weights(ntherm, tail_tol)
    return displacement_matrix(alpha, n_max + 1, len(q)) * np.sqrt(q)[None, :]


def _deficit_flag(rho: np.ndarray, tail_tol: float, what: str) -> tuple[str, ...]:
    deficit = 1.0 - float(np.trace(rho).real)
    if deficit > 10 * tail_tol:
        return (f"{what}: trace deficit {deficit:.3e} exceeds 10*tail_tol at n_max={rho.shape[0] - 1}",)
    return ()


def displaced_thermal_fock(alpha: complex, ntherm: float, n_max: int, tail_tol: float = TAIL_TOL) -> DensityMatrix:
    """Fock matrix of a thermal state with occupation ``ntherm`` displaced by ``alpha``."""
    if ntherm < 0:
        raise ValueError("ntherm must be >= 0")
    w = _displaced_thermal_columns(alpha, ntherm, n_max, tail_tol)
    rho = hermitize(w @ w.conj().T)
    return DensityMatrix(rho, _deficit_flag(rho, tail_tol, f"displaced_thermal(|alpha|={abs(alpha):.4g})"))


def thermal_fock(nbar: float, n_max: int) -> DensityMatrix:
    """Diagonal thermal state ``sum nbar^n/(nbar+1)^(n+1) |n><n|``."""
    n = np.arange(n_max + 1)
    if nbar == 0.0:
        return DensityMatrix(np.diag((n == 0).astype(complex)))
    return DensityMatrix(np.diag(np.exp(n * np.log(nbar / (nbar + 1.0)) - np.log1p(nbar)).astype(complex)))


def _squeezed_thermal_columns(nu: float, r: float, theta: float, rows: int, tail_tol: float) -> np.ndarray:
    """Matrix ``W`` with ``W W^dag = S rho_th S^dag`` on rows ``0..rows-1``.

    Column ``k`` is ``sqrt(q_k) S|k>`` with ``q`` the thermal weights for
    symplectic eigenvalue ``nu``. ``S|0>`` has a closed form on even photon
    numbers; ``S|k> = (a^dag cosh r + e^{-i theta} sinh r a) S|k-1> / sqrt(k)``.
    Each step spoils only the highest index of the working vector, so working
    on ``rows + len(q)`` entries keeps the returned rows exact.
    """
    q = _thermal_weights(0.5 * (nu - 1.0), tail_tol)
    size = rows + len(q)
    v = np.zeros(size, dtype=complex)
    j = np.arange(0, size, 2) // 2
    log_mag = -0.5 * np.log(np.cosh(r)) + j * np.log(np.tanh(r)) + 0.5 * gammaln(2 * j + 1) - j * np.log(2.0) - gammaln(j + 1)
    v[::2] = np.exp(log_mag + 1j * j * (theta + np.pi))
    up = np.sqrt(np.arange(1, size))
    ch, sh = np.cosh(r), np.exp(-1j * theta) * np.sinh(r)
    cols = np.empty((rows, len(q)), dtype=complex)
    for k in range(len(q)):
        cols[:, k] = np.sqrt(q[k]) * v[:rows]
        w = np.zeros_like(v)
        w[1:] = ch * up * v[:-1]
        w[:-1] += sh * up * v[1:]
        v = w / np.sqrt(k + 1)
    return cols


def gaussian_fock(moments: GaussianMoments, n_max: int, tail_tol: float = TAIL_TOL) -> DensityMatrix:
    """Fock matrix of the Gaussian state with the given first and second moments.

    The state is ``D(alpha) S(zeta) rho_th(nu) S(zeta)^dag D(alpha)^dag`` where
    ``nu`` is the symplectic eigenvalue and the squeezing axis is the minor
    axis of the covariance matrix.

    Raises:
        ValueError: if the covariance matrix violates ``nu >= 1``.
    """
    cov = 0.5 * (moments.cov + moments.cov.T)
    nu = float(np.sqrt(max(np.linalg.det(cov), 0.0)))
    if nu < 1.0 - 1e-8:
        raise ValueError(f"covariance matrix with symplectic eigenvalue {nu} is not a quantum state")
    nu = max(nu, 1.0)
    ev, vec = np.linalg.eigh(cov)
    r = 0.25 * np.log(ev[1] / ev[0])
    if r < 1e-12:
        return displaced_thermal_fock(moments.displacement, 0.5 * (nu - 1.0), n_max, tail_tol)
    # S(r e^{i theta}) narrows the quadrature at angle theta/2
    theta = 2.0 * np.arctan2(vec[1, 0], vec[0, 0])
    rows = max(32, n_max + 1)
    while True:
        w = _squeezed_thermal_columns(nu, r, theta, rows, tail_tol)
        if 1.0 - float(np.sum(np.abs(w) ** 2)) <= 1e-3 * tail_tol or rows > 100_000:
            break
        rows *= 2
    x = displacement_matrix(moments.displacement, n_max + 1, rows) @ w
    rho = hermitize(x @ x.conj().T)
    return DensityMatrix(rho, _deficit_flag(rho, tail_tol, "gaussian_fock"))


def constellation_state(c: Constellation, n_max: int | None = None, tail_tol: float = TAIL_TOL) -> DensityMatrix:
    """Fock matrix of the coherent-state mixture described by ``c``."""
    if n_max is None:
        n_max = ensemble_cutoff(c.amplitudes, c.probs, 0.0, tail_tol)
    rho = density_from_pure_ensemble([coherent_ket(a, n_max, np.inf) for a in c.amplitudes], c.probs)
    return DensityMatrix(rho.entries, _deficit_flag(rho.entries, tail_tol, "constellation_state"))


def output_cutoff(c: Constellation, p: ChannelParams, tail_tol: float = TAIL_TOL) -> int:
    return ensemble_cutoff(np.sqrt(p.tau) * c.amplitudes, c.probs, p.output_thermal_photons, tail_tol)


def thermal_loss_output(
    c: Constellation, p: ChannelParams, n_max: int | None = None, tail_tol: float = TAIL_TOL
) -> DensityMatrix:
    """Output of the thermal-loss channel fed with the constellation ``c``.

    Each ``|a>`` leaves the channel as a thermal state with occupation
    ``nbar (1 - tau)`` displaced by ``sqrt(tau) a``; the output is their mixture.
    """
    if n_max is None:
        n_max = output_cutoff(c, p, tail_tol)
    nt = p.output_thermal_photons
    blocks = [
        np.sqrt(prob) * _displaced_thermal_columns(np.sqrt(p.tau) * a, nt, n_max, tail_tol)
        for a, prob in zip(c.amplitudes, c.probs)
    ]
    w = np.hstack(blocks)
    rho = hermitize(w @ w.conj().T)
    return DensityMatrix(rho, _deficit_flag(rho, tail_tol, "thermal_loss_output"))


def thermal_loss_moments(m: GaussianMoments, p: ChannelParams) -> GaussianMoments:
    """``mean -> sqrt(tau) mean``, ``cov -> tau cov + (1 - tau) eps I``."""
    return GaussianMoments(np.sqrt(p.tau) * m.mean, p.tau * m.cov + (1.0 - p.tau) * p.epsilon * np.eye(2))


def phase_diffusion(rho: DensityMatrix, p: PhaseDiffusionParams) -> DensityMatrix:
    """Multiply ``rho[n, m]`` by ``exp(-delta^2 (n - m)^2)``."""
    n = np.arange(rho.n_max + 1)
    gap = (n[:, None] - n[None, :]) ** 2
    if math.isinf(p.delta):
        factor = (gap == 0).astype(float)
    else:
        factor = np.exp(-(p.delta**2) * gap)
    return DensityMatrix(hermitize(rho.entries * factor), rho.flags)


def phase_diffusion_kraus(n_max: int, delta: float, k_max: int) -> np.ndarray:
    """Diagonals of the first ``k_max + 1`` Kraus operators, shape ``(k_max+1, n_max+1)``.

    ``P_k = sum_n exp(-n^2 l^2 / 2) sqrt((n^2 l^2)^k / k!) |n><n|`` with
    ``l^2 = 2 delta^2``, which sums to the entrywise factor
    ``exp(-delta^2 (n - m)^2)``.
    """
    lam2 = 2.0 * delta**2
    n = np.arange(n_max + 1, dtype=float)
    k = np.arange(k_max + 1, dtype=float)[:, None]
    x = n[None, :] ** 2 * lam2
    with np.errstate(divide="ignore", invalid="ignore"):
        log_p = -0.5 * x + 0.5 * k * np.log(x) - 0.5 * gammaln(k + 1)
    out = np.exp(log_p)
    out[:, 0] = 0.0
    out[0, 0] = 1.0
    return out


def apply_diagonal_kraus(rho: DensityMatrix, kraus_diagonals: np.ndarray) -> DensityMatrix:
    """``sum_k P_k rho P_k^dag`` for diagonal Kraus operators."""
    acc = np.zeros_like(rho.entries)
    for diag in kraus_diagonals:
        acc += diag[:, None] * rho.entries * diag[None, :].conj()
    return DensityMatrix(hermitize(acc), rho.flags)


def phase_diffusion_moments(c: Constellation, p: PhaseDiffusionParams) -> GaussianMoments:
    """Moments of the dephased constellation from per-state expectation values.

    Dephasing damps ``<a>`` by ``exp(-delta^2)`` and ``<a^2>`` by
    ``exp(-4 delta^2)`` while leaving ``<a^dag a> = |a|^2`` untouched.
    """
    if p.delta == 0.0:
        return constellation_moments(c)
    d1 = p.damping
    d4 = d1**4
    ea = d1 * np.sum(c.probs * c.amplitudes)
    ea2 = d4 * np.sum(c.probs * c.amplitudes**2)
    en = float(np.sum(c.probs * np.abs(c.amplitudes) ** 2))
    mean = np.array([2.0 * ea.real, 2.0 * ea.imag])
    second = np.array(
        [
            [2.0 * en + 1.0 + 2.0 * ea2.real, 2.0 * ea2.imag],
            [2.0 * ea2.imag, 2.0 * en + 1.0 - 2.0 * ea2.real],
        ]
    )
    return GaussianMoments(mean, second - np.outer(mean, mean))
