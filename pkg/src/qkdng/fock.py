"""Single-mode truncated Fock-space states.

Everything quantum in the package lives in the number basis ``|0>, ..., |n_max>``.
Kets and density matrices are thin frozen wrappers around numpy arrays that also
carry *flags*: human-readable notes about truncation problems. A flag never
stops a computation; callers decide whether it matters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

TAIL_TOL = 1e-10
HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = 1e-10

_MAX_CUTOFF = 100_000


@dataclass(frozen=True, eq=False)
class FockKet:
    """Pure state given by its number-basis amplitudes."""

    amplitudes: np.ndarray
    flags: tuple[str, ...] = ()

    @property
    def n_max(self) -> int:
        return len(self.amplitudes) - 1

    @property
    def norm_deficit(self) -> float:
        """Probability mass lost beyond ``n_max``."""
        return float(1.0 - np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Mixed state as an ``(n_max+1, n_max+1)`` complex matrix."""

    entries: np.ndarray
    flags: tuple[str, ...] = ()

    @property
    def n_max(self) -> int:
        return self.entries.shape[0] - 1

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def normalized(self) -> "DensityMatrix":
        return DensityMatrix(self.entries / self.trace, self.flags)

    def check(self, tail_tol: float = TAIL_TOL) -> list[str]:
        """Return the list of violated state invariants (empty when valid)."""
        problems = []
        a = self.entries
        if np.max(np.abs(a - a.conj().T), initial=0.0) > HERMITIAN_TOL:
            problems.append("not Hermitian")
        if abs(self.trace - 1.0) > 10 * tail_tol:
            problems.append(f"trace {self.trace!r} differs from 1 by more than {10 * tail_tol:g}")
        if np.linalg.eigvalsh(hermitize(a)).min() < -POSITIVITY_TOL:
            problems.append("negative eigenvalue")
        return problems


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def annihilation(n_max: int) -> np.ndarray:
    """Truncated ladder operator ``a`` with ``a|n> = sqrt(n)|n-1>``."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1)


def _polar_powers(x: complex, n: np.ndarray) -> np.ndarray:
    """``exp(-|x|^2/2) x^n / sqrt(n!)`` evaluated in the log domain."""
    r = abs(x)
    if r == 0.0:
        return (n == 0).astype(complex)
    log_mag = -0.5 * r * r + n * np.log(r) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * np.angle(x) * n)


def coherent_ket(x: complex, n_max: int, tail_tol: float = TAIL_TOL) -> FockKet:
    """Coherent state ``|x>`` truncated to ``n_max`` photons.

    The returned ket is not renormalized, so its norm deficit is exactly the
    Poisson(|x|^2) mass beyond the cutoff. A deficit above ``tail_tol`` is
    reported in ``flags``.
    """
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    amps = _polar_powers(complex(x), np.arange(n_max + 1))
    ket = FockKet(amps)
    if ket.norm_deficit > tail_tol:
        flag = f"coherent_ket(|x|={abs(x):.6g}): norm deficit {ket.norm_deficit:.3e} > tail_tol at n_max={n_max}"
        ket = FockKet(amps, (flag,))
    return ket


def density_from_pure_ensemble(kets: Sequence[FockKet], probs: Sequence[float]) -> DensityMatrix:
    """Mixture ``sum_i p_i |k_i><k_i|``."""
    probs = np.asarray(probs, dtype=float)
    if len(kets) != len(probs):
        raise ValueError("need one probability per ket")
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
        raise ValueError("probs must be a probability vector")
    sizes = {k.n_max for k in kets}
    if len(sizes) != 1:
        raise ValueError(f"kets have mismatched cutoffs {sorted(sizes)}")
    w = np.stack([k.amplitudes for k in kets], axis=1) * np.sqrt(probs)[None, :]
    flags = tuple(f for k in kets for f in k.flags)
    return DensityMatrix(hermitize(w @ w.conj().T), flags)


def displaced_thermal_photon_probs(alpha_abs: float, nbar: float, n_max: int) -> np.ndarray:
    """Photon-number distribution of ``D(alpha) rho_th(nbar) D(alpha)^dag`` up to ``n_max``.

    Uses the Laguerre closed form
    ``P(n) = nbar^n/(1+nbar)^(n+1) exp(-|a|^2/(1+nbar)) L_n(-|a|^2/(nbar(1+nbar)))``
    with the Laguerre values carried as log-ratios, which is stable because all
    terms are positive for a negative argument.
    """
    n = np.arange(n_max + 1)
    a2 = float(alpha_abs) ** 2
    # a thermal part too small to represent leaves the Poisson distribution
    if nbar == 0.0 or not np.isfinite(a2 / (nbar * (1.0 + nbar))):
        if a2 == 0.0:
            return (n == 0).astype(float)
        return np.exp(-a2 + n * np.log(a2) - gammaln(n + 1))
    log_geo = n * np.log(nbar / (1.0 + nbar)) - np.log1p(nbar)
    if a2 == 0.0:
        return np.exp(log_geo)
    y = a2 / (nbar * (1.0 + nbar))
    log_lag = np.zeros(n_max + 1)
    ratio = 1.0 + y
    for k in range(1, n_max + 1):
        if k > 1:
            ratio = ((2 * k - 1 + y) - (k - 1) / ratio) / k
        log_lag[k] = log_lag[k - 1] + np.log(ratio)
    return np.exp(log_geo - a2 / (1.0 + nbar) + log_lag)


def choose_cutoff(max_abs_amplitude: float, mean_thermal_photons: float = 0.0, tail_tol: float = TAIL_TOL) -> int:
    """Smallest ``n_max`` leaving less than ``tail_tol`` photon-number mass above it.

    The reference state is a thermal state with occupation
    ``mean_thermal_photons`` displaced by ``max_abs_amplitude``.
    """
    if not 0.0 < tail_tol < 1.0:
        raise ValueError(f"tail_tol must lie in (0, 1), got {tail_tol}")
    if mean_thermal_photons < 0:
        raise ValueError("mean_thermal_photons must be >= 0")
    size = 32
    while True:
        probs = displaced_thermal_photon_probs(max_abs_amplitude, mean_thermal_photons, size)
        cum = np.cumsum(probs)
        hit = np.nonzero(cum >= 1.0 - tail_tol)[0]
        if hit.size:
            return int(hit[0])
        if size >= _MAX_CUTOFF:
            raise RuntimeError("photon-number distribution did not converge")
        size *= 2


def ensemble_cutoff(
    amplitudes: np.ndarray,
    probs: np.ndarray,
    mean_thermal_photons: float = 0.0,
    tail_tol: float = TAIL_TOL,
) -> int:
    """Cutoff for a mixture of displaced thermal states centred on ``amplitudes``.

    The outermost points are ignored while their total probability stays below
    ``tail_tol/2``; the remaining points are each covered to ``tail_tol/2``. The
    mixture therefore loses less than ``tail_tol`` of its trace.
    """
    mags = np.abs(np.asarray(amplitudes))
    order = np.argsort(-mags, kind="stable")
    dropped = np.cumsum(np.asarray(probs, dtype=float)[order])
    keep = np.nonzero(dropped > tail_tol / 2)[0]
    reach = mags[order[keep[0]]] if keep.size else 0.0
    return choose_cutoff(reach, mean_thermal_photons, tail_tol / 2)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Half the trace norm of ``a - b``."""
    if a.n_max != b.n_max:
        raise ValueError(f"cutoff mismatch: {a.n_max} vs {b.n_max}")
    ev = np.linalg.eigvalsh(hermitize(a.entries - b.entries))
    return 0.5 * float(np.sum(np.abs(ev)))
