import logging
import random

import pytest

from src.curve import parse_curve


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    """Run every test from an empty directory with no env overrides and no log handlers."""
    monkeypatch.setattr(logging.getLogger(), '_slopekit_configured', True, raising=False)
    monkeypatch.delenv('SLOPEKIT_BUDGET', raising=False)
    monkeypatch.delenv('SLOPEKIT_CONFIG', raising=False)
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture
def elliptic():
    """y^2 - y = x^3 over F_2, L = 1 + 2T^2."""
    return parse_curve('p=2 u=1 s=1 f=x^3')


@pytest.fixture
def septic():
    return parse_curve('p=2 u=1 s=1 f=x^7')


@pytest.fixture
def rng():
    return random.Random(20240611)
