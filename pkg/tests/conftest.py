import numpy as np
import pytest

from reachmdp.mdp import Mdp

LEFT, RIGHT, IDLE = 0, 1, 2

_ACCEPTANCE_LINES = []


def chain3_arrays(goal_reward=10.0):
    """s0 - s1 - g; left/right deterministic (left at s0 stays), idle stays."""
    T = np.zeros((3, 3, 3))
    R = np.zeros((3, 3, 3))
    T[0, LEFT, 0] = T[0, RIGHT, 1] = T[0, IDLE, 0] = 1.0
    T[1, LEFT, 0] = T[1, RIGHT, 2] = T[1, IDLE, 1] = 1.0
    T[2, :, 2] = 1.0
    R[1, RIGHT, 2] = goal_reward
    return T, R


@pytest.fixture
def chain3():
    T, R = chain3_arrays()
    return Mdp.from_dense(T, R, 0.9, [2], ("left", "right", "idle"))


@pytest.fixture
def acceptance_report():
    def report(name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" :: {detail}" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
