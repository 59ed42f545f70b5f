import functools

import numpy as np
import pytest
from hypothesis import settings

from lke.ed import FockRep
from lke.model import ModelParams

settings.register_profile("repo", max_examples=40, deadline=None)
settings.load_profile("repo")

ACCEPTANCE_LINES: dict[int, str] = {}


def report(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


@functools.lru_cache(maxsize=None)
def fock(N, Jx=-1.0, Jz=-1.0, h=-0.8, alpha=3.0) -> FockRep:
    return FockRep(ModelParams(N, Jx, Jz, h, alpha))


def fock_expect(rep: FockRep, psi: np.ndarray, poly: dict) -> complex:
    return complex(np.vdot(psi, rep.poly_matrix(poly) @ psi))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
