"""AWGN capacity, constellation mutual information and MAP decision regions."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .constellation import Constellation, Distribution1D, hermite_rule

QUADRATURE_NODES = 96
QUADRATURE_TOL = 1e-7
MAX_QUADRATURE_NODES = 1536


def awgn_capacity(snr: float, complex_channel: bool = False) -> float:
    """``1/2 log2(1 + snr)`` per real dimension, twice that for a complex channel."""
    if snr <= 0:
        raise ValueError(f"snr must be positive, got {snr}")
    c = 0.5 * np.log2(1.0 + snr)
    return float(2.0 * c if complex_channel else c)


@lru_cache(maxsize=None)
def _normal_rule(k: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = hermite_rule(k)
    return nodes, weights / weights.sum()


def _mi_at(points: np.ndarray, weights: np.ndarray, snr: float, k: int) -> float:
    # I(X;Y) = H(X) - sum_i w_i E_N[log2(1 + sum_{j!=i} (w_j/w_i) exp(-((N + c_i - c_j)^2 - N^2)/2))]
    # Each component's own Gaussian term integrates in closed form; only the
    # smooth log1p remainder goes through the Gauss-Hermite rule centred on it.
    t, u = _normal_rule(k)
    c = np.sqrt(snr) * points
    m = len(points)
    h_x = -float(np.sum(weights * np.log(weights)))
    if m == 1:
        return 0.0
    diff = c[:, None] - c[None, :]
    log_ratio = np.log(weights)[None, :] - np.log(weights)[:, None]
    z = log_ratio[:, None, :] - diff[:, None, :] * (t[None, :, None] + 0.5 * diff[:, None, :])
    idx = np.arange(m)
    z[idx, :, idx] = -np.inf
    remainder = np.logaddexp(0.0, logsumexp(z, axis=2)) @ u
    return (h_x - float(weights @ remainder)) / np.log(2.0)


def mi_1d(
    d: Distribution1D,
    snr: float,
    nodes: int = QUADRATURE_NODES,
    tol: float = QUADRATURE_TOL,
    full_output: bool = False,
):
    """Mutual information (bits) of ``Y = sqrt(snr) X + N``, ``N ~ N(0, 1)``.

    ``X`` is ``d`` rescaled to unit variance. The output entropy is integrated
    with Gauss-Hermite rules centred on each mixture component; the node count
    doubles from ``nodes`` until two successive values agree to ``tol``.

    Args:
        d: input distribution (any variance).
        snr: linear signal-to-noise ratio.
        nodes: starting number of nodes per component.
        tol: convergence tolerance between ``K`` and ``2K`` nodes.
        full_output: also return an info dict with ``converged``, ``nodes``
            and the last two estimates.

    Returns:
        The mutual information, or ``(value, info)`` when ``full_output``.
    """
    if snr < 0:
        raise ValueError(f"snr must be non-negative, got {snr}")
    points = d.points / np.sqrt(d.variance) if d.variance > 0 else d.points
    k = nodes
    prev = _mi_at(points, d.weights, snr, k)
    while True:
        cur = _mi_at(points, d.weights, snr, 2 * k)
        k *= 2
        if abs(cur - prev) <= tol or k >= MAX_QUADRATURE_NODES:
            break
        prev = cur
    converged = abs(cur - prev) <= tol
    value = max(cur, 0.0)
    if full_output:
        return value, {"converged": converged, "nodes": k, "values": (prev, cur)}
    return value


def capacity_gap(c: Constellation, snr: float, nodes: int = QUADRATURE_NODES, full_output: bool = False):
    """``log2(1 + snr) - I(X; sqrt(snr) X + N)`` for a product QAM on a complex AWGN channel.

    The in-phase and quadrature components are independent, so the complex
    mutual information is twice the per-axis value at the same snr.

    Raises:
        ValueError: if ``c`` is not a QAM product (no per-axis distribution).
    """
    if c.axis is None:
        raise ValueError("capacity_gap supports product (QAM) constellations only")
    mi, info = mi_1d(c.axis, snr, nodes, full_output=True)
    gap = float(awgn_capacity(snr, complex_channel=True) - 2.0 * mi)
    if gap < 0.0:
        if gap < -4.0 * QUADRATURE_TOL:
            info["converged"] = False
        gap = 0.0
    if full_output:
        return gap, info
    return gap


@dataclass(frozen=True, eq=False)
class DecisionGrid:
    """MAP labels on a square grid; ``labels[i, j]`` belongs to ``(axis[j], axis[i])``."""

    axis: np.ndarray
    labels: np.ndarray

    @property
    def extent(self) -> float:
        return float(self.axis[-1])

    @property
    def resolution(self) -> int:
        return len(self.axis)

    def to_csv(self, path, header_lines: tuple[str, ...] = ()) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            for line in header_lines:
                fh.write(f"# {line}\r\n")
            w = csv.writer(fh)
            w.writerow(["x", "y", "label"])
            for i, y in enumerate(self.axis):
                for j, x in enumerate(self.axis):
                    w.writerow([repr(float(x)), repr(float(y)), int(self.labels[i, j])])

    def pgm_bytes(self) -> bytes:
        """Binary greyscale PGM, top row = largest ``y``."""
        top = int(self.labels.max()) or 1
        img = np.round(255.0 * self.labels[::-1] / top).astype(np.uint8)
        return f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii") + img.tobytes()

    def to_pgm(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.pgm_bytes())


def map_regions(c: Constellation, noise_var: float, extent: float, resolution: int) -> DecisionGrid:
    """Label each grid cell with ``argmax_i p_i exp(-|y - x_i|^2 / noise_var)``.

    Ties go to the lowest symbol index.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    axis = np.linspace(-extent, extent, resolution)
    y = axis[None, :] + 1j * axis[:, None]
    score = np.log(c.probs)[None, None, :] - np.abs(y[..., None] - c.amplitudes[None, None, :]) ** 2 / noise_var
    return DecisionGrid(axis, np.argmax(score, axis=2))
