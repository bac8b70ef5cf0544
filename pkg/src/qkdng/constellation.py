"""Shaping distributions and the QAM constellations built from them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .entropy import GaussianMoments

MAX_AXIS_POINTS = 64
SHAPES = ("gh", "rw")


@dataclass(frozen=True, eq=False)
class Distribution1D:
    """Symmetric zero-mean discrete distribution on the real line."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if len(self.points) != len(self.weights) or len(self.points) == 0:
            raise ValueError("points and weights must be non-empty and of equal length")
        if np.any(self.weights <= 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be strictly positive and sum to 1")
        if np.any(np.diff(self.points) <= 0):
            raise ValueError("points must be strictly increasing")
        if np.max(np.abs(self.points + self.points[::-1])) > 1e-12 or np.max(
            np.abs(self.weights - self.weights[::-1])
        ) > 1e-12:
            raise ValueError("distribution must be symmetric about the origin")

    @property
    def m(self) -> int:
        return len(self.points)

    @property
    def variance(self) -> float:
        return float(np.sum(self.weights * self.points**2))

    def moment(self, k: int) -> float:
        return float(np.sum(self.weights * self.points**k))


def _symmetrized(points: np.ndarray, weights: np.ndarray) -> Distribution1D:
    points = 0.5 * (points - points[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return Distribution1D(points, weights / weights.sum())


def _orthonormal_hermite(n: int, x: np.ndarray) -> np.ndarray:
    """``He_n(x)/sqrt(n!)`` by the three-term recurrence (no overflow up to large n)."""
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for k in range(n):
        prev, cur = cur, (x * cur - np.sqrt(k) * prev) / np.sqrt(k + 1)
    return cur


def hermite_rule(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Golub-Welsch nodes and weights for the standard normal density.

    The Jacobi matrix of the probabilists' Hermite polynomials has a zero
    diagonal and ``sqrt(k)`` on the off-diagonal; its eigenvalues are the nodes
    and the squared first eigenvector components are the weights.
    """
    if m == 1:
        return np.zeros(1), np.ones(1)
    nodes, vecs = eigh_tridiagonal(np.zeros(m), np.sqrt(np.arange(1.0, m)))
    return nodes, vecs[0] ** 2


def gauss_hermite_1d(m: int) -> Distribution1D:
    """Gauss-Hermite shaping: roots of ``He_m`` with quadrature weights.

    Nodes come from the Golub-Welsch eigenproblem and are polished with one
    Newton step. The returned weights are the closed form
    ``(m-1)! / (m He_{m-1}(x)^2)``, which keeps full relative accuracy in the
    tails; they must agree with the eigenvector weights to 1e-8.

    Raises:
        ValueError: if ``m`` is outside ``[1, 64]``.
    """
    if not 1 <= m <= MAX_AXIS_POINTS:
        raise ValueError(f"m must lie in [1, {MAX_AXIS_POINTS}], got {m}")
    nodes, gw_weights = hermite_rule(m)
    if m > 1:
        # He_m' = m He_{m-1}, so in orthonormal form h_m' = sqrt(m) h_{m-1}
        nodes = nodes - _orthonormal_hermite(m, nodes) / (np.sqrt(m) * _orthonormal_hermite(m - 1, nodes))
    # (m-1)!/(m He_{m-1}^2) = 1/(m h_{m-1}^2) with h the orthonormal polynomial
    weights = 1.0 / (m * _orthonormal_hermite(m - 1, nodes) ** 2)
    if np.max(np.abs(weights - gw_weights)) > 1e-8:
        raise ArithmeticError(f"Golub-Welsch and closed-form weights disagree for m={m}")
    return _symmetrized(nodes, weights)


def random_walk_1d(m: int) -> Distribution1D:
    """Normalized binomial random walk with ``m`` equally spaced points."""
    if not 2 <= m <= MAX_AXIS_POINTS:
        raise ValueError(f"m must lie in [2, {MAX_AXIS_POINTS}], got {m}")
    i = np.arange(m)
    points = (2 * i - m + 1) / np.sqrt(m - 1)
    log_binom = gammaln(m) - gammaln(i + 1) - gammaln(m - i) - (m - 1) * np.log(2)
    return _symmetrized(points, np.exp(log_binom))


@dataclass(frozen=True, eq=False)
class Constellation:
    """Complex amplitudes with probabilities; ``variance`` is E|X|^2.

    ``axis`` holds the per-quadrature distribution when the constellation is a
    QAM product; capacity-gap computations need it.
    """

    amplitudes: np.ndarray
    probs: np.ndarray
    variance: float
    shape: str | None = None
    m: int | None = None
    axis: Distribution1D | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.amplitudes) != len(self.probs):
            raise ValueError("amplitudes and probs must have equal length")
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be a probability vector")
        energy = float(np.sum(self.probs * np.abs(self.amplitudes) ** 2))
        if abs(energy - self.variance) > 1e-10 * max(1.0, self.variance):
            raise ValueError(f"variance {self.variance} does not match E|X|^2 = {energy}")

    @property
    def size(self) -> int:
        return len(self.amplitudes)

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        """True when ``-a`` carries the same probability as ``a`` for every point."""
        return _invariant_under(self, -1.0, tol)

    def is_rotation_symmetric(self, tol: float = 1e-12) -> bool:
        """True when the constellation is invariant under a quarter turn."""
        return _invariant_under(self, 1j, tol)

    def to_dict(self) -> dict:
        return {
            "shape": self.shape,
            "m": self.m,
            "V_m": self.variance,
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
            "probs": [float(p) for p in self.probs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Constellation":
        amps = np.array([complex(re, im) for re, im in data["amplitudes"]])
        probs = np.asarray(data["probs"], dtype=float)
        shape, m = data.get("shape"), data.get("m")
        axis = None
        if shape in SHAPES and m is not None:
            axis = make_constellation(shape, int(m), float(data["V_m"])).axis
        return cls(amps, probs, float(data["V_m"]), shape, m, axis)


def _invariant_under(c: Constellation, factor: complex, tol: float) -> bool:
    # compare total mass at each point with the mass at its image; points may repeat
    for a in c.amplitudes:
        here = np.abs(c.amplitudes - a) <= tol * max(1.0, abs(a))
        image = np.abs(c.amplitudes - factor * a) <= tol * max(1.0, abs(a))
        if not np.any(image) or abs(c.probs[here].sum() - c.probs[image].sum()) > tol:
            return False
    return True


def qam_product(d: Distribution1D, V_m: float, shape: str | None = None) -> Constellation:
    """Cartesian product ``d x d`` scaled so that E|X|^2 = V_m.

    Amplitudes are ordered row-major: index ``j*m + k`` is ``s(x_j + i x_k)``.
    The single-point distribution has no energy to scale and yields the vacuum.
    """
    if V_m <= 0:
        raise ValueError(f"V_m must be positive, got {V_m}")
    var = d.variance
    if var == 0.0:
        return Constellation(np.zeros(1, complex), np.ones(1), 0.0, shape, d.m, d)
    s = np.sqrt(V_m / (2.0 * var))
    amps = s * (d.points[:, None] + 1j * d.points[None, :])
    probs = d.weights[:, None] * d.weights[None, :]
    probs = probs.ravel() / probs.sum()
    return Constellation(amps.ravel(), probs, float(V_m), shape, d.m, d)


def make_constellation(shape: str, m: int, V_m: float) -> Constellation:
    """``m x m`` GH- or RW-shaped QAM with modulation variance ``V_m``."""
    if shape == "gh":
        d = gauss_hermite_1d(m)
    elif shape == "rw":
        # one point per axis is the same degenerate vacuum for both families
        d = gauss_hermite_1d(1) if m == 1 else random_walk_1d(m)
    else:
        raise ValueError(f"unknown shape {shape!r}; expected one of {SHAPES}")
    return qam_product(d, V_m, shape)


def rotation_symmetric(base_amplitudes, base_weights, V_m: float) -> Constellation:
    """Constellation made of quarter-turn orbits ``{a, ia, -a, -ia}``.

    Each base point contributes four points sharing its (normalized) weight
    equally, and the whole set is rescaled to E|X|^2 = V_m. Such mixtures have
    zero mean, isotropic covariance and vanishing ``<a^2>``.
    """
    base = np.asarray(base_amplitudes, dtype=complex)
    w = np.asarray(base_weights, dtype=float)
    w = w / w.sum()
    amps = np.concatenate([base * u for u in (1, 1j, -1, -1j)])
    probs = np.tile(w / 4.0, 4)
    energy = float(np.sum(probs * np.abs(amps) ** 2))
    return Constellation(amps * np.sqrt(V_m / energy), probs, float(V_m))


def constellation_moments(c: Constellation) -> GaussianMoments:
    """First and second quadrature moments of the coherent-state mixture.

    Each ``|a>`` has ``<q> = 2 Re a``, ``<p> = 2 Im a``, ``<q^2> = 1 + 4 Re(a)^2``,
    ``<p^2> = 1 + 4 Im(a)^2`` and symmetrized ``<qp> = 4 Re(a) Im(a)``; the
    mixture averages these and centres them.
    """
    q = 2.0 * c.amplitudes.real
    p = 2.0 * c.amplitudes.imag
    mean = np.array([np.sum(c.probs * q), np.sum(c.probs * p)])
    second = np.array(
        [
            [np.sum(c.probs * (1.0 + q * q)), np.sum(c.probs * q * p)],
            [np.sum(c.probs * q * p), np.sum(c.probs * (1.0 + p * p))],
        ]
    )
    return GaussianMoments(mean, second - np.outer(mean, mean))
