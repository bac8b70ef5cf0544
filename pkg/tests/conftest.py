import sys
import numpy as np
import pytest

from qkdng.constellation import Constellation, rotation_symmetric


def random_constellation(rng: np.random.Generator, max_points: int = 64, max_vm: float = 5.0) -> Constellation:
    """Arbitrary (non-symmetric) coherent-state constellation."""
    n = int(rng.integers(1, max_points + 1))
    amps = rng.normal(size=n) + 1j * rng.normal(size=n)
    probs = rng.dirichlet(np.ones(n))
    vm = float(rng.uniform(0.2, max_vm))
    energy = float(np.sum(probs * np.abs(amps) ** 2))
    return Constellation(amps * np.sqrt(vm / energy), probs, vm)


def random_rotation_symmetric(rng: np.random.Generator, max_orbits: int = 8, max_vm: float = 5.0) -> Constellation:
    k = int(rng.integers(1, max_orbits + 1))
    base = rng.normal(size=k) + 1j * rng.normal(size=k)
    return rotation_symmetric(base, rng.uniform(0.1, 1.0, size=k), float(rng.uniform(0.2, max_vm)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
