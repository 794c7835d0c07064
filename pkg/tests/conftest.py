"""Shared helpers for the test suite.

Tests are deliberately white-box where the contract demands it: fault flags
are hidden from the public API, so forcing and inspecting them goes through
the underscore internals.
"""

import pytest

from ftsim import CostLedger, RngStream, init_process


@pytest.fixture
def rng():
    return RngStream(12345)


@pytest.fixture
def ledger():
    return CostLedger()


def fresh(label=0, tau=0.0, rng=None, **kwargs):
    return init_process(label, tau, rng or RngStream(0), **kwargs)


def fresh_triple(label=0, tau=0.0, rng=None, **kwargs):
    rng = rng or RngStream(0)
    return [init_process(label, tau, rng, **kwargs) for _ in range(3)]


def flags(proc):
    """(bit_fault, phase_fault) of a process, read through the internals."""
    return (proc._box.bit_fault, proc._box.phase_fault)


def set_bit(proc, value=True):
    proc._box.bit_fault = value


def set_phase(proc, value=True):
    proc._box.phase_fault = value
