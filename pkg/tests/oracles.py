"""Independent reference computations used by the tests.

Nothing here calls the package's evolution kernels: amplitudes come from
matrix permanents of the single-photon transfer matrix, which is itself
assembled from the element angles.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def permanent(m: np.ndarray) -> complex:
    """Ryser's formula; fine for the <= 8x8 matrices used here."""
    n = m.shape[0]
    if n == 0:
        return 1.0
    total = 0j
    for r in range(1, n + 1):
        for cols in itertools.combinations(range(n), r):
            total += (-1) ** r * np.prod(m[:, cols].sum(axis=1))
    return (-1) ** n * total


def transfer_matrix(mode_count: int, elements) -> np.ndarray:
    """``U[j, k]`` = amplitude for a photon entering mode k to leave in mode j."""
    u = np.eye(mode_count, dtype=complex)
    for el in elements:
        c, s = math.cos(el.theta), math.sin(el.theta)
        step = np.eye(mode_count, dtype=complex)
        a, b = el.mode_a, el.mode_b
        # a^dag -> c a^dag + s b^dag ; b^dag -> -s a^dag + c b^dag
        step[a, a], step[b, a], step[a, b], step[b, b] = c, s, -s, c
        u = step @ u
    return u


def fock_amplitude(u: np.ndarray, inp, out) -> complex:
    if sum(inp) != sum(out):
        return 0j
    rows = [j for j, k in enumerate(out) for _ in range(k)]
    cols = [j for j, k in enumerate(inp) for _ in range(k)]
    norm = math.prod(math.factorial(k) for k in inp) * math.prod(math.factorial(k) for k in out)
    return permanent(u[np.ix_(rows, cols)]) / math.sqrt(norm)


def outcomes(total: int, modes: int):
    if modes == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in outcomes(total - k, modes - 1):
            yield (k,) + rest


def evolve(u: np.ndarray, terms: dict) -> dict:
    """Dense evolution of ``{ket: amplitude}`` through the transfer matrix ``u``."""
    modes = u.shape[0]
    out: dict = {}
    for ket, amp in terms.items():
        for o in outcomes(sum(ket), modes):
            a = fock_amplitude(u, ket, o)
            if a != 0:
                out[o] = out.get(o, 0j) + amp * a
    return out


def no_bunching_probability(photons: int, leaves: int) -> float:
    """All photons from one mode spread uniformly: multinomial, so L!/(L-p)!/L^p."""
    if photons > leaves:
        return 0.0
    return math.perm(leaves, photons) / leaves**photons
