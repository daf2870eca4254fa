"""Shared oracles and group fixtures for the test suite."""

import numpy as np

from carnot_calc import group_core as gc


def group_zoo():
    rng = np.random.default_rng(7)
    return {
        "H1": gc.heisenberg(1),
        "H2": gc.heisenberg(2),
        "step2_random": gc.random_step2(3, 2, rng),
        "F2": gc.free_group(2),
        "F3": gc.free_group(3),
        "F4": gc.free_group(4),
        "engel": gc.engel(),
    }


ZOO = group_zoo()


def unipotent_log(M):
    """log of I + N for nilpotent N, by the terminating series."""
    n = M.shape[-1]
    N = M - np.eye(n)
    out = np.zeros_like(N)
    P = np.eye(n)
    for r in range(1, n):
        P = P @ N
        out = out + ((-1) ** (r + 1)) * P / r
    return out


# (criterion number, line) pairs filled by the acceptance suite
ACCEPTANCE_LINES = []
