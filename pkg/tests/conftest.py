import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dumbbell_spectra.geometry import BulkDomain, DumbbellSpec, NeckProfile

settings.register_profile("ci", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

M_WIDTH = 28.0 ** (1.0 / 3.0)
MU1 = 4.0 * math.pi ** 2 / M_WIDTH ** 2
MU2 = math.pi ** 2 / M_WIDTH ** 2 + 4.0 * math.pi ** 2


def dumbbell(epsilon=0.05, length=2.0, samples=None):
    neck = NeckProfile.constant(1.0, length) if samples is None else \
        NeckProfile.piecewise_linear(samples, length)
    return DumbbellSpec(BulkDomain.rectangle(M_WIDTH, 1.0), neck, epsilon)


@pytest.fixture(scope="session")
def example_spec():
    return dumbbell(0.05)


@pytest.fixture(scope="session")
def small_mesh():
    from dumbbell_spectra.mesh import generate
    return generate(dumbbell(0.1), 0.08, 2)


@pytest.fixture(scope="session")
def acceptance_log(request):
    lines = []
    request.config._acceptance_lines = lines
    return lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def random_symmetric_profile(rng, length=1.0):
    half = int(rng.integers(1, 5))
    left = rng.uniform(0.2, 1.0, half + 1)
    samples = np.concatenate([left, left[-2::-1]])
    return NeckProfile.piecewise_linear(samples, length)
