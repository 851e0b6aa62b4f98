"""Full acceptance gate. Slow: criteria 2, 5, 6, and 8 dominate.

Each test runs one criterion end to end and reports its detail dict on
failure, so a red run shows which contract broke and by how much.
"""
import pytest

from pointscat.acceptance import run_criterion


def _check(cid):
    res = run_criterion(cid)
    assert res.passed, (f"criterion {cid} ({res.name}) failed in "
                        f"{res.runtime_s:.1f}s: {res.details}")


def test_criterion_1_one_center_closed_form():
    _check(1)


def test_criterion_2_ground_state_homogenization():
    _check(2)


def test_criterion_3_equi_coerciveness():
    _check(3)


def test_criterion_4_pair_energies():
    _check(4)


def test_criterion_5_recovery_sequence():
    _check(5)


def test_criterion_6_resolvent_contracts():
    _check(6)


def test_criterion_7_kernel_certification():
    _check(7)


def test_criterion_8_thread_determinism():
    _check(8)
