from __future__ import annotations

from pathlib import Path

import pytest

from raceprune.ir import Program, parse

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


def load_program(name: str) -> Program:
    return parse((PROGRAMS / name).read_text())


@pytest.fixture(scope="session")
def showcase() -> Program:
    return load_program("showcase.mini")


@pytest.fixture(scope="session")
def diamond() -> Program:
    return load_program("diamond.mini")
