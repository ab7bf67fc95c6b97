import json

import numpy as np
import pytest

from lbforge.cli import main
from lbforge.instances import InstanceParams, forge
from lbforge.models import DiscreteDistribution, EnsembleSpec

from .test_globals import C


@pytest.fixture(scope="function")
def rng():
    return np.random.default_rng(20260101)


@pytest.fixture(scope="function")
def forge_instance():
    def wrapped(family, epsilon, n, d=1, const_c=C):
        return forge(InstanceParams(family, epsilon, n, d, const_c))

    return wrapped


@pytest.fixture(scope="function")
def toy_spec():
    """ A single pair over a uniform base, with room for any amplitude up to the bound """

    def wrapped(amplitude=0.02, offset=0.5, order=3, q_first=0.1, q_second=0.1, rest=2):
        masses = [q_first, q_second] + [(1 - q_first - q_second) / rest] * rest
        return EnsembleSpec(DiscreteDistribution(masses), [[0, 1]], amplitude, offset, order)

    return wrapped


@pytest.fixture(scope="function")
def random_monotone():
    def wrapped(rng, n):
        masses = np.sort(rng.random(n))[::-1] + 1e-3
        return DiscreteDistribution(masses / masses.sum())

    return wrapped


@pytest.fixture(scope="function")
def run_cli(capsys):
    """ Runs the command line in process, returns (exit code, stdout JSON records, stderr) """

    def wrapped(*argv):
        code = main([str(arg) for arg in argv])
        captured = capsys.readouterr()
        records = [json.loads(line) for line in captured.out.splitlines() if line.strip()]
        return code, records, captured.err

    return wrapped
