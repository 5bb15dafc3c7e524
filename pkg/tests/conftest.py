"""Fixtures partagées"""

import pytest

from src.abr import BitrateLadder, DecisionContext, Manifest
from src.qubo import QuboProblem
from src.trace import ThroughputTrace


@pytest.fixture
def ladder():
    return BitrateLadder()


@pytest.fixture
def manifest(ladder):
    return Manifest.cbr(ladder, 10)


@pytest.fixture
def small_ladder():
    """Échelle à 3 niveaux pour les tests exhaustifs"""
    return BitrateLadder((1.0, 2.5, 5.0), ("low", "mid", "high"))


@pytest.fixture
def two_var_problem():
    """{(0,0): −1, (1,1): −1, (0,1): 3}"""
    return QuboProblem(2).add_term(0, 0, -1).add_term(1, 1, -1).add_term(0, 1, 3)


def constant_trace(mbps: float, seconds: int = 400, name: str = "const") -> ThroughputTrace:
    return ThroughputTrace(tuple([mbps] * seconds), name=name)


def context(n=0, buffer=0.0, last_level=None, history=(), remaining=10) -> DecisionContext:
    return DecisionContext(n, buffer, last_level, tuple(history), remaining)
