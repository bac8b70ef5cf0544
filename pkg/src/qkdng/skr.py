"""Key-rate quantities: the protocol non-Gaussianity bound, the channel
functional that separates Gaussian-compatible channels, and a Gaussian
Devetak-Winter rate."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .channels import (
    ChannelParams,
    PhaseDiffusionParams,
    constellation_state,
    gaussian_fock,
    output_cutoff,
    phase_diffusion,
    thermal_loss_moments,
    thermal_loss_output,
)
from .classical import QUADRATURE_NODES, capacity_gap
from .constellation import Constellation, constellation_moments
from .entropy import (
    CLAMP_TOL,
    bosonic_g,
    delta_vn,
    delta_vn_constellation,
    moments_from_fock,
)
from .fock import TAIL_TOL, ensemble_cutoff, hermitize

EPSILON_G_REVIEW = 1e-6
SUPPORT_MISMATCH_TOL = 1e-6


def link_snr(V_m: float, p: ChannelParams) -> float:
    """Link snr ``tau V_m / (1 + xi)`` used to evaluate the capacity gap."""
    return p.tau * V_m / (1.0 + p.xi)


@dataclass
class EpsilonGReport:
    delta_vn_in: float
    delta_vn_out: float
    capacity_gap: float
    epsilon_g_upper: float
    snr_used: float
    n_max_used: int
    complex_channel: bool = True
    warnings: list[str] = field(default_factory=list)

    def as_row(self) -> dict:
        row = asdict(self)
        row["warnings"] = "; ".join(self.warnings)
        return row


def epsilon_g_bound(
    c: Constellation,
    p: ChannelParams,
    tail_tol: float = TAIL_TOL,
    nodes: int = QUADRATURE_NODES,
    n_max: int | None = None,
) -> EpsilonGReport:
    """Upper bound on the key-rate loss from the Gaussian model.

    The thermal-loss channel itself stands in for the infimum over channels,
    so ``epsilon_g_upper = delta_vn(N(rho)) - D(snr)`` is an upper bound. The
    sign is not enforced; negative values are flagged for review.
    """
    if n_max is None:
        n_max = output_cutoff(c, p, tail_tol)
    out = thermal_loss_output(c, p, n_max, tail_tol)
    d_out = delta_vn(out)
    d_in = delta_vn_constellation(c)
    snr = link_snr(c.variance, p)
    warnings = list(out.flags)
    if c.size == 1:
        gap = 0.0
    elif c.axis is None:
        gap = float("nan")
        warnings.append("capacity gap undefined for non-product constellation")
    else:
        gap, info = capacity_gap(c, snr, nodes, full_output=True)
        if not info["converged"]:
            warnings.append(f"quadrature not converged: {info['values'][0]!r} vs {info['values'][1]!r}")
    eps = d_out - gap
    if eps < -EPSILON_G_REVIEW:
        warnings.append(f"epsilon_g_upper {eps:.3e} < 0: capacity gap exceeds output non-Gaussianity")
    return EpsilonGReport(d_in, d_out, gap, eps, snr, n_max, True, warnings)


@dataclass(frozen=True)
class DeltaFunctionalResult:
    value: float
    support_mismatch: float
    flags: tuple[str, ...] = ()


def _log2_on_support(a: np.ndarray, clamp_tol: float) -> tuple[np.ndarray, np.ndarray]:
    ev, vec = np.linalg.eigh(hermitize(a))
    keep = ev > clamp_tol
    v = vec[:, keep]
    log_a = (v * np.log2(ev[keep])[None, :]) @ v.conj().T
    return log_a, v @ v.conj().T


def delta_functional(
    c: Constellation,
    channel: ChannelParams | PhaseDiffusionParams,
    n_max: int | None = None,
    tail_tol: float = TAIL_TOL,
    clamp_tol: float = CLAMP_TOL,
) -> DeltaFunctionalResult:
    """``tr[N(rho) (log2 N(rho)^G - log2 N(rho^G))]`` for ``rho`` the constellation state.

    Both Gaussian states are built as Fock matrices and their logarithms taken
    on the eigen-support above ``clamp_tol``. The weight of ``N(rho)`` outside
    either support is returned as ``support_mismatch``.
    """
    rho_g_moments = constellation_moments(c)
    nu = rho_g_moments.symplectic_eigenvalue
    if isinstance(channel, ChannelParams):
        if n_max is None:
            # the Gaussian input (thermal with the constellation's variance) is the widest state
            n_max = max(
                output_cutoff(c, channel, tail_tol),
                ensemble_cutoff(
                    [np.sqrt(channel.tau) * rho_g_moments.displacement],
                    [1.0],
                    channel.tau * 0.5 * (nu - 1.0) + channel.output_thermal_photons,
                    tail_tol,
                ),
            )
        out = thermal_loss_output(c, channel, n_max, tail_tol)
        image_of_gaussian = gaussian_fock(thermal_loss_moments(rho_g_moments, channel), n_max, tail_tol)
    else:
        if n_max is None:
            n_max = max(
                ensemble_cutoff(c.amplitudes, c.probs, 0.0, tail_tol),
                ensemble_cutoff([rho_g_moments.displacement], [1.0], 0.5 * (nu - 1.0), tail_tol),
            )
        out = phase_diffusion(constellation_state(c, n_max, tail_tol), channel)
        image_of_gaussian = phase_diffusion(gaussian_fock(rho_g_moments, n_max, tail_tol), channel)
    out_gaussian = gaussian_fock(moments_from_fock(out), n_max, tail_tol)

    r = out.entries / out.trace
    log_a, proj_a = _log2_on_support(out_gaussian.entries, clamp_tol)
    log_b, proj_b = _log2_on_support(image_of_gaussian.entries, clamp_tol)
    value = float(np.trace(r @ (log_a - log_b)).real)
    mismatch = max(float(np.trace(r @ (np.eye(n_max + 1) - p)).real) for p in (proj_a, proj_b))
    flags = tuple(out.flags)
    if mismatch > SUPPORT_MISMATCH_TOL:
        flags += (f"support mismatch {mismatch:.3e} exceeds {SUPPORT_MISMATCH_TOL:g}",)
    return DeltaFunctionalResult(value, mismatch, flags)


def _physical(nu: float, what: str, V_m: float, p: ChannelParams) -> float:
    if nu < 1.0 - 1e-8:
        raise ValueError(f"unphysical {what} = {nu} for V_m={V_m}, tau={p.tau}, nbar={p.nbar}")
    return max(nu, 1.0)


def gaussian_dw_rate(V_m: float, p: ChannelParams, reconciliation_beta: float = 1.0) -> float:
    """Devetak-Winter rate (bits/use) of the Gaussian-modulated equivalent, heterodyne detection.

    The entanglement-based covariance matrix has blocks ``V I`` (Alice),
    ``b I`` (Bob) and ``c Z`` with ``V = 1 + 2 V_m``, ``b = tau (V - 1) + 1 + xi``
    and ``c^2 = tau (V^2 - 1)``. Eve's Holevo information is
    ``g(l1) + g(l2) - g(l3)`` where ``l1, l2`` are the two-mode symplectic
    eigenvalues and ``l3 = V - c^2 / (b + 1)`` is Alice's conditional
    eigenvalue after Bob's heterodyne. Bob's information uses the link snr.
    """
    if V_m <= 0:
        raise ValueError("V_m must be positive")
    if not 0.0 < reconciliation_beta <= 1.0:
        raise ValueError("reconciliation_beta must lie in (0, 1]")
    v = 1.0 + 2.0 * V_m
    b = p.tau * (v - 1.0) + 1.0 + p.xi
    c2 = p.tau * (v * v - 1.0)
    a_inv = v * v + b * b - 2.0 * c2
    d_inv = (v * b - c2) ** 2
    root = np.sqrt(max(a_inv * a_inv - 4.0 * d_inv, 0.0))
    l1 = _physical(np.sqrt(0.5 * (a_inv + root)), "symplectic eigenvalue", V_m, p)
    l2 = _physical(np.sqrt(max(0.5 * (a_inv - root), 0.0)), "symplectic eigenvalue", V_m, p)
    l3 = _physical(v - c2 / (b + 1.0), "conditional eigenvalue", V_m, p)
    chi = bosonic_g(l1) + bosonic_g(l2) - bosonic_g(l3)
    i_ab = np.log2(1.0 + link_snr(V_m, p))
    return float(reconciliation_beta * i_ab - chi)

