"""Sparse multimode Fock-space states.

A :class:`QuantumState` maps occupation tuples to complex amplitudes. Only
non-negligible amplitudes are stored, so states produced by beam-splitter
networks on a handful of photons stay small even when the full Fock space
is large.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

#: Amplitudes with magnitude below this are dropped after each circuit element.
PRUNE_THRESHOLD = 1e-14

NORM_TOL = 1e-12

DetectionPattern = Mapping[int, int]


class CapacityError(OverflowError):
    """Requested Fock space exceeds what can be indexed."""


class ModeMismatchError(ValueError):
    """Two states (or a state and an operation) disagree on the mode count."""


class NotNormalizedError(ValueError):
    """An operation that requires a unit-norm state received something else."""


class FockBasisState(tuple):
    """Occupation numbers ``(n_0, ..., n_{m-1})`` of a multimode number state.

    Behaves exactly like a tuple (hashing, ordering, equality), so plain
    tuples and ``FockBasisState`` instances are interchangeable as dict keys.
    """

    __slots__ = ()

    def __new__(cls, occupations: Iterable[int]) -> "FockBasisState":
        occ = tuple(int(n) for n in occupations)
        if any(n < 0 for n in occ):
            raise ValueError(f"occupations must be non-negative, got {occ}")
        return super().__new__(cls, occ)

    @property
    def total(self) -> int:
        return sum(self)

    @property
    def mode_count(self) -> int:
        return len(self)

    def __repr__(self) -> str:
        return "|" + ",".join(str(n) for n in self) + ">"


def fock_dimension(total_photons: int, modes: int) -> int:
    """Number of occupation tuples with ``total_photons`` spread over ``modes``.

    >>> fock_dimension(4, 2)
    5
    """
    if modes < 1:
        raise ValueError("modes must be >= 1")
    if total_photons < 0:
        raise ValueError("total_photons must be >= 0")
    dim = math.comb(total_photons + modes - 1, modes - 1)
    if dim > sys.maxsize:
        raise CapacityError(
            f"Fock space of {total_photons} photons in {modes} modes exceeds "
            f"the {sys.maxsize} index limit"
        )
    return dim


def occupation_tuples(total_photons: int, modes: int) -> Iterator[tuple[int, ...]]:
    """All occupation tuples of a fixed photon number, in lexicographic order."""
    if modes == 1:
        yield (total_photons,)
        return
    for head in range(total_photons + 1):
        for tail in occupation_tuples(total_photons - head, modes - 1):
            yield (head,) + tail


class QuantumState:
    """Immutable sparse state vector over ``mode_count`` bosonic modes."""

    __slots__ = ("_modes", "_terms")

    def __init__(
        self,
        mode_count: int,
        terms: Mapping[Sequence[int], complex] | Iterable[tuple[Sequence[int], complex]] = (),
        prune: float = PRUNE_THRESHOLD,
    ):
        if mode_count < 0:
            raise ValueError("mode_count must be non-negative")
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[tuple[int, ...], complex] = {}
        for ket, amp in items:
            key = tuple(FockBasisState(ket))
            if len(key) != mode_count:
                raise ModeMismatchError(
                    f"ket {key} has {len(key)} modes, state has {mode_count}"
                )
            acc[key] = acc.get(key, 0j) + complex(amp)
        self._modes = mode_count
        self._terms = {k: v for k, v in acc.items() if abs(v) >= prune}

    @classmethod
    def _wrap(cls, mode_count: int, terms: dict) -> "QuantumState":
        # trusted constructor: keys already tuples of the right length
        obj = cls.__new__(cls)
        obj._modes = mode_count
        obj._terms = terms
        return obj

    @classmethod
    def basis(cls, occupations: Sequence[int]) -> "QuantumState":
        occ = tuple(FockBasisState(occupations))
        return cls._wrap(len(occ), {occ: 1 + 0j})

    @classmethod
    def empty(cls, mode_count: int) -> "QuantumState":
        return cls._wrap(mode_count, {})

    @classmethod
    def vacuum(cls, mode_count: int) -> "QuantumState":
        return cls.basis((0,) * mode_count)

    @classmethod
    def single_mode(cls, coefficients: Sequence[complex]) -> "QuantumState":
        """``sum_k coefficients[k] |k>`` on one mode."""
        return cls(1, {(k,): c for k, c in enumerate(coefficients)}, prune=0.0)

    @property
    def mode_count(self) -> int:
        return self._modes

    @property
    def terms(self) -> Mapping[tuple[int, ...], complex]:
        return MappingProxyType(self._terms)

    def is_empty(self) -> bool:
        return not self._terms

    def amplitude(self, occupations: Sequence[int]) -> complex:
        return self._terms.get(tuple(occupations), 0j)

    def kets(self) -> list[FockBasisState]:
        return [FockBasisState(k) for k in sorted(self._terms)]

    def norm_squared(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self._terms.values())

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def is_normalized(self) -> bool:
        return abs(self.norm_squared() - 1.0) <= NORM_TOL

    def normalized(self) -> "QuantumState":
        nrm = self.norm()
        if nrm == 0.0:
            raise NotNormalizedError("cannot normalize the zero state")
        return self._wrap(self._modes, {k: a / nrm for k, a in self._terms.items()})

    def photon_numbers(self) -> set[int]:
        return {sum(k) for k in self._terms}

    def __mul__(self, scalar: complex) -> "QuantumState":
        return self._wrap(self._modes, {k: a * scalar for k, a in self._terms.items()})

    __rmul__ = __mul__

    def __add__(self, other: "QuantumState") -> "QuantumState":
        _check_modes(self, other)
        out = dict(self._terms)
        for k, a in other._terms.items():
            out[k] = out.get(k, 0j) + a
        return self._wrap(self._modes, {k: a for k, a in out.items() if a != 0})

    def __sub__(self, other: "QuantumState") -> "QuantumState":
        return self + other * -1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuantumState):
            return NotImplemented
        return self._modes == other._modes and self._terms == other._terms

    def __hash__(self):
        return hash((self._modes, frozenset(self._terms.items())))

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        if not self._terms:
            return f"QuantumState({self._modes}, 0)"
        parts = [f"({a:.6g}){FockBasisState(k)!r}" for k, a in sorted(self._terms.items())]
        return f"QuantumState({self._modes}, " + " + ".join(parts) + ")"

    def allclose(self, other: "QuantumState", atol: float = 1e-12) -> bool:
        _check_modes(self, other)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.amplitude(k) - other.amplitude(k)) <= atol for k in keys)

    def to_dict(self) -> dict:
        return {
            "modes": self._modes,
            "terms": [
                {"ket": list(k), "re": float(a.real), "im": float(a.imag)}
                for k, a in sorted(self._terms.items())
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> "QuantumState":
        return cls(
            int(data["modes"]),
            [(t["ket"], complex(t["re"], t["im"])) for t in data["terms"]],
            prune=0.0,
        )

    @classmethod
    def from_json(cls, text: str) -> "QuantumState":
        return cls.from_dict(json.loads(text))


def _check_modes(a: QuantumState, b: QuantumState) -> None:
    if a.mode_count != b.mode_count:
        raise ModeMismatchError(f"mode counts differ: {a.mode_count} vs {b.mode_count}")


def _require_normalized(state: QuantumState, tol: float = 1e-10) -> None:
    if abs(state.norm_squared() - 1.0) > tol:
        raise NotNormalizedError(f"state has squared norm {state.norm_squared():.3g}, expected 1")


def inner_product(a: QuantumState, b: QuantumState) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    _check_modes(a, b)
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for k, amp in small.terms.items():
        other = large.terms.get(k)
        if other is not None:
            total += amp.conjugate() * other if small is a else other.conjugate() * amp
    return total


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """Pure-state fidelity ``|<a|b>|^2``."""
    _check_modes(a, b)
    _require_normalized(a)
    _require_normalized(b)
    return min(1.0, abs(inner_product(a, b)) ** 2)


def tensor(a: QuantumState, b: QuantumState) -> QuantumState:
    """Tensor product; ``a`` occupies the leading modes."""
    terms = {
        ka + kb: x * y for ka, x in a.terms.items() for kb, y in b.terms.items()
    }
    return QuantumState._wrap(a.mode_count + b.mode_count, terms)


def postselect(state: QuantumState, pattern: DetectionPattern) -> QuantumState:
    """Unnormalized component matching ``pattern``, with the constrained modes removed."""
    for mode in pattern:
        if not 0 <= mode < state.mode_count:
            raise ValueError(f"pattern mode {mode} out of range for {state.mode_count} modes")
    keep = [i for i in range(state.mode_count) if i not in pattern]
    want = sorted(pattern.items())
    out = {}
    for ket, amp in state.terms.items():
        if all(ket[m] == n for m, n in want):
            out[tuple(ket[i] for i in keep)] = amp
    return QuantumState._wrap(len(keep), out)


def project(
    state: QuantumState, pattern: DetectionPattern
) -> tuple[QuantumState, float]:
    """Condition ``state`` on exact photon counts in some modes.

    Returns the renormalized conditional state on the unconstrained modes and
    the probability of the pattern. A pattern that never occurs yields an
    empty state and probability 0.
    """
    _require_normalized(state)
    cond = postselect(state, pattern)
    prob = min(1.0, cond.norm_squared())
    if prob == 0.0:
        return QuantumState.empty(cond.mode_count), 0.0
    return cond.normalized(), prob


def coefficient_matrix(state: QuantumState) -> tuple[np.ndarray, list[int], list[int]]:
    """Dense matrix ``M[i, j]`` of a two-mode state indexed by occupations."""
    if state.mode_count != 2:
        raise ModeMismatchError("coefficient matrix needs a two-mode state")
    rows = sorted({k[0] for k in state.terms})
    cols = sorted({k[1] for k in state.terms})
    r_idx = {n: i for i, n in enumerate(rows)}
    c_idx = {n: i for i, n in enumerate(cols)}
    mat = np.zeros((len(rows), len(cols)), dtype=complex)
    for (n1, n2), amp in state.terms.items():
        mat[r_idx[n1], c_idx[n2]] = amp
    return mat, rows, cols


def schmidt_coefficients(state: QuantumState) -> list[float]:
    """Schmidt coefficients of a normalized two-mode state, largest first."""
    _require_normalized(state, tol=NORM_TOL * 10)
    mat, _, _ = coefficient_matrix(state)
    sv = np.linalg.svd(mat, compute_uv=False)
    return sorted((float(x) for x in sv if x > 1e-15), reverse=True)


@dataclass(frozen=True)
class DensityMatrix:
    """Dense density matrix on the Fock labels that occur in the support."""

    entries: np.ndarray
    basis_labels: tuple[FockBasisState, ...]

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def is_valid(self, tol: float = 1e-12) -> bool:
        herm = np.allclose(self.entries, self.entries.conj().T, atol=tol)
        return herm and abs(self.trace() - 1.0) <= tol and self.eigenvalues().min() >= -1e-10


def reduced_density(state: QuantumState, keep_modes: Iterable[int]) -> DensityMatrix:
    """Partial trace over every mode not in ``keep_modes``."""
    keep = sorted(set(keep_modes))
    if not keep:
        raise ValueError("keep_modes must not be empty")
    if keep[0] < 0 or keep[-1] >= state.mode_count:
        raise ValueError(f"keep_modes {keep} out of range for {state.mode_count} modes")
    _require_normalized(state)
    rest = [i for i in range(state.mode_count) if i not in keep]

    groups: dict[tuple[int, ...], dict[tuple[int, ...], complex]] = {}
    for ket, amp in state.terms.items():
        kept = tuple(ket[i] for i in keep)
        env = tuple(ket[i] for i in rest)
        groups.setdefault(env, {})[kept] = amp

    labels = sorted({tuple(ket[i] for i in keep) for ket in state.terms})
    index = {lab: i for i, lab in enumerate(labels)}
    rho = np.zeros((len(labels), len(labels)), dtype=complex)
    for block in groups.values():
        vec = np.zeros(len(labels), dtype=complex)
        for lab, amp in block.items():
            vec[index[lab]] = amp
        rho += np.outer(vec, vec.conj())
    return DensityMatrix(rho, tuple(FockBasisState(lab) for lab in labels))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """``0.5 * ||rho - sigma||_1`` for Hermitian matrices of equal size."""
    diff = np.asarray(rho) - np.asarray(sigma)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())
