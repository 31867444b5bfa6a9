from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from patchattack.network import build_network, load_network

FIXTURES = Path(__file__).parent / "fixtures"

F = Fraction


def toy_net(mode="rational"):
    return load_network(FIXTURES / "toy.net", mode)


def sign_net(mode="rational"):
    return load_network(FIXTURES / "sign.net", mode)


def random_rational_net(rng: np.random.Generator, n_layers: int, widths=None, max_w=4, den=4,
                        bias=True):
    """Random rational net with ``n_layers`` layers and weights k/den, |k| <= max_w * den."""
    if widths is None:
        widths = [int(rng.integers(2, 7)) for _ in range(n_layers)]
    weights, biases = [], []
    for a, b in zip(widths, widths[1:]):
        weights.append([[F(int(rng.integers(-max_w * den, max_w * den + 1)), den) for _ in range(a)]
                        for _ in range(b)])
        biases.append([F(int(rng.integers(-den, den + 1)), den) if bias else F(0) for _ in range(b)])
    return build_network(weights, biases, name="random")


def random_rational_vector(rng: np.random.Generator, n: int, den=4, lo=0, hi=1):
    return [F(int(rng.integers(lo * den, hi * den + 1)), den) for _ in range(n)]


@pytest.fixture
def toy():
    return toy_net()


@pytest.fixture
def sign():
    return sign_net()


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(line)
