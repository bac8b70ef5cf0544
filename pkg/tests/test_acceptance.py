"""Acceptance gate: twelve end-to-end numerical criteria.

Each test records a PASS/FAIL line that the terminal summary prints after the
run (see ``conftest.py``). Run ``python tests/test_acceptance.py`` to evaluate
the criteria without pytest.
"""

import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from conftest import random_constellation, random_rotation_symmetric  # noqa: E402
from test_classical import trapezoid_mi  # noqa: E402

from qkdng.channels import (  # noqa: E402
    ChannelParams,
    PhaseDiffusionParams,
    constellation_state,
    phase_diffusion,
    thermal_fock,
    thermal_loss_output,
)
from qkdng.classical import capacity_gap, mi_1d  # noqa: E402
from qkdng.constellation import Constellation, constellation_moments, gauss_hermite_1d, make_constellation  # noqa: E402
from qkdng.entropy import delta_vn, delta_vn_constellation, gram_entropy, moments_from_fock, von_neumann_entropy  # noqa: E402
from qkdng.experiments import ExperimentConfig, render_csv, run  # noqa: E402
from qkdng.fock import choose_cutoff, ensemble_cutoff, trace_distance  # noqa: E402
from qkdng.skr import delta_functional  # noqa: E402

RESULTS: dict[int, str] = {}
RESOLUTION_FLOOR = 1e-12


def record(number: int, title: str, passed: bool, detail: str) -> bool:
    RESULTS[number] = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    return passed


def _coherent(x):
    return Constellation(np.array([complex(x)]), np.ones(1), abs(x) ** 2)


def test_gaussian_states_have_zero_non_gaussianity():
    worst = 0.0
    for x in (0, 1, 2, 3):
        worst = max(worst, delta_vn(constellation_state(_coherent(x), tail_tol=1e-12)))
    for nbar in (0.1, 1.0, 3.0):
        worst = max(worst, delta_vn(thermal_fock(nbar, choose_cutoff(0.0, nbar, 1e-12))))
    assert record(1, "Gaussian-zero suite", worst <= 1e-7, f"max delta_vn = {worst:.3e} (tol 1e-7)")


def test_gram_entropy_matches_fock_entropy():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(50):
        c = random_constellation(rng, max_points=64, max_vm=5.0)
        worst = max(worst, abs(gram_entropy(c) - von_neumann_entropy(constellation_state(c, tail_tol=1e-12))))
    assert record(2, "Gram oracle", worst <= 1e-6, f"max |S_gram - S_fock| = {worst:.3e} over 50 constellations (tol 1e-6)")


def test_thermal_states_are_fixed_by_dephasing():
    worst = 0.0
    for delta in (0.1, 1.0, math.inf):
        for nbar in (0.5, 2.0):
            rho = thermal_fock(nbar, choose_cutoff(0.0, nbar, 1e-12))
            worst = max(worst, trace_distance(phase_diffusion(rho, PhaseDiffusionParams(delta)), rho))
    assert record(3, "phase-diffusion fixed point", worst <= 1e-10, f"max trace distance = {worst:.3e} (tol 1e-10)")


def test_dephasing_preserves_moments_of_symmetric_constellations():
    rng = np.random.default_rng(4)
    family = [make_constellation(s, m, 2.5) for s, m in [("gh", 2), ("gh", 3), ("gh", 4), ("gh", 6), ("gh", 8),
                                                         ("rw", 2), ("rw", 3), ("rw", 5), ("rw", 7), ("rw", 8)]]
    family += [random_rotation_symmetric(rng, max_orbits=6) for _ in range(10)]
    worst = 0.0
    for c in family:
        target = constellation_moments(c)
        rho = constellation_state(c, tail_tol=1e-12)
        for delta in (0.15, math.inf):
            got = moments_from_fock(phase_diffusion(rho, PhaseDiffusionParams(delta)))
            worst = max(worst, np.max(np.abs(got.mean - target.mean)), np.max(np.abs(got.cov - target.cov)))
    assert record(4, "moment preservation", worst <= 1e-6, f"max moment error = {worst:.3e} over 20 constellations (tol 1e-6)")


def test_thermal_loss_does_not_increase_non_gaussianity():
    worst = -math.inf
    for shape in ("gh", "rw"):
        for m in (4, 8, 16):
            c = make_constellation(shape, m, 2.5)
            before = delta_vn_constellation(c)
            for tau in (0.2, 0.5, 0.9):
                for nbar in (0.0, 0.2, 0.4):
                    worst = max(worst, delta_vn(thermal_loss_output(c, ChannelParams(tau, nbar))) - before)
    assert record(5, "Gaussian-channel monotonicity", worst <= 1e-7, f"max increase = {worst:.3e} (tol 1e-7)")


def test_dephasing_does_not_increase_non_gaussianity():
    worst = -math.inf
    for m in range(1, 33):
        c = make_constellation("gh", m, 2.5)
        before = delta_vn_constellation(c)
        rho = constellation_state(c)
        for gamma in (0.15, math.inf):
            worst = max(worst, delta_vn(phase_diffusion(rho, PhaseDiffusionParams(gamma))) - before)
    assert record(6, "phase-diffusion non-increase", worst <= 1e-7, f"max increase = {worst:.3e} over m=1..32 (tol 1e-7)")


def test_delta_functional_vanishes():
    rng = np.random.default_rng(7)
    worst_loss = 0.0
    for _ in range(30):
        c = random_constellation(rng, max_points=32, max_vm=5.0)
        p = ChannelParams(float(rng.uniform(0.05, 1.0)), float(rng.uniform(0.0, 0.5)))
        worst_loss = max(worst_loss, abs(delta_functional(c, p).value))
    worst_dephase = 0.0
    symmetric = [make_constellation("gh", m, 2.5) for m in (2, 4, 8)] + [make_constellation("rw", 4, 2.5)]
    symmetric += [random_rotation_symmetric(rng) for _ in range(6)]
    for c in symmetric:
        for delta in (0.15, 1.0, math.inf):
            worst_dephase = max(worst_dephase, abs(delta_functional(c, PhaseDiffusionParams(delta)).value))
    passed = worst_loss <= 1e-6 and worst_dephase <= 1e-6
    assert record(7, "Delta-functional suite", passed,
                  f"thermal loss max {worst_loss:.3e}, dephasing max {worst_dephase:.3e} (tol 1e-6)")


def test_gauss_hermite_constellations_converge_to_thermal():
    ms = (2, 4, 8, 16, 32)
    dist, delta = [], []
    for m in ms:
        c = make_constellation("gh", m, 2.5)
        n_max = max(ensemble_cutoff(c.amplitudes, c.probs, 0.0, 1e-12), choose_cutoff(0.0, 2.5, 1e-12))
        dist.append(trace_distance(constellation_state(c, n_max), thermal_fock(2.5, n_max).normalized()))
        delta.append(delta_vn_constellation(c))
    decreasing = all(b < a for a, b in zip(dist, dist[1:])) and all(b < a for a, b in zip(delta, delta[1:]))
    ratio = delta[3] / delta[4]
    detail = "trace distance " + ", ".join(f"{v:.2e}" for v in dist) + "; delta_vn " + ", ".join(f"{v:.2e}" for v in delta)
    assert record(8, "convergence suite", decreasing and ratio >= 2.0, f"{detail}; m16/m32 ratio {ratio:.3g}")


def test_shaping_families_cross_over():
    small = {s: delta_vn_constellation(make_constellation(s, 4, 2.5)) for s in ("gh", "rw")}
    large = {s: delta_vn_constellation(make_constellation(s, 16, 2.5)) for s in ("gh", "rw")}
    passed = small["rw"] < small["gh"] and large["gh"] < large["rw"]
    detail = (f"N=16 rw {small['rw']:.3e} < gh {small['gh']:.3e}; "
              f"N=256 gh {large['gh']:.3e} < rw {large['rw']:.3e}")
    assert record(9, "crossover witness", passed, detail)


def test_capacity_gap_converges():
    gaps = [capacity_gap(make_constellation("gh", m, 3.0), 3.0) for m in (2, 4, 8, 16, 32)]
    monotone = all(b < a for a, b in zip(gaps, gaps[1:]))
    d = gauss_hermite_1d(2)
    err = abs(mi_1d(d, 1.0) - trapezoid_mi(d.points, d.weights, 1.0))
    passed = monotone and gaps[-1] < 1e-3 and err <= 1e-5
    detail = "gaps " + ", ".join(f"{g:.2e}" for g in gaps) + f"; BPSK quadrature vs trapezoid {err:.1e}"
    assert record(10, "capacity-gap convergence", passed, detail)


def test_headline_distance_sweep():
    c = make_constellation("gh", 16, 2.5)
    distances = list(range(0, 155, 5))
    values = [delta_vn(thermal_loss_output(c, ChannelParams.from_distance(d, 0.1))) for d in distances]
    below = [d for d, v in zip(distances, values) if v < 1e-5]
    # strict decrease while the previous value is resolvable; below the floor only non-increase within it
    ok = all(b < a if a > RESOLUTION_FLOOR else b <= a + RESOLUTION_FLOOR for a, b in zip(values, values[1:]))
    first = below[0] if below else None
    detail = f"d=0 {values[0]:.2e}, first below 1e-5 at d={first} km, d=60 {values[12]:.2e}, decreasing={ok}"
    assert record(11, "headline bound", bool(below) and ok, detail)


def test_identical_configs_give_identical_csv():
    configs = [
        ExperimentConfig("fig3a", shape="both", m_list=[4, 8], distance_km=[0.0, 25.0, 75.0, 150.0]),
        ExperimentConfig("fig5", m_list=[1, 2, 3, 4, 5, 6]),
        ExperimentConfig("sweep", shape="gh", m_list=[2, 4], distance_km=[0.0, 50.0]),
    ]
    identical = True
    for cfg in configs:
        texts = [render_csv(cfg, run(cfg)) for _ in range(2)]
        parallel = replace(cfg, jobs=4)
        texts.append(render_csv(parallel, run(parallel)))
        identical &= len({t.encode("utf-8") for t in texts}) == 1
    assert record(12, "determinism", identical, "fig3a, fig5, sweep: two serial runs and a 4-thread run byte-identical")


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for t in tests:
        try:
            t()
        except AssertionError:
            pass
    for k in sorted(RESULTS):
        print(RESULTS[k])
    sys.exit(0 if all("PASS" in RESULTS[k] for k in RESULTS) else 1)
