from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from soa.game import Game

settings.register_profile("soa", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("soa")


def rationals(max_num=20, max_den=8):
    return st.builds(Fraction, st.integers(-max_num, max_num), st.integers(1, max_den))


@st.composite
def games(draw, min_d=1, max_d=6):
    d = draw(st.integers(min_d, max_d))
    vals = draw(st.lists(rationals(), min_size=(1 << d) - 1, max_size=(1 << d) - 1))
    return Game(d, [Fraction(0)] + vals)


@pytest.fixture
def switch_game():
    values = [0, 0, Fraction(1, 16), Fraction(1, 8), Fraction(1, 16), Fraction(1, 8), Fraction(1, 8), Fraction(1, 4)]
    return Game(3, values)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
