"""Beam-splitter circuits acting on sparse Fock states.

Port convention for an element on modes ``(a, b)`` with angle ``theta``::

    a^dag -> cos(theta) a^dag + sin(theta) b^dag
    b^dag -> -sin(theta) a^dag + cos(theta) b^dag

so the transmittivity is ``cos(theta)**2`` and the reflectivity
``sin(theta)**2``. The inverse element is the same element with ``-theta``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .fock import PRUNE_THRESHOLD, ModeMismatchError, QuantumState


def _wrap_angle(theta: float) -> float:
    # 2*pi shifts leave the element unchanged; keep theta in (-pi, pi]
    t = math.remainder(float(theta), 2 * math.pi)
    return math.pi if t == -math.pi else t


@dataclass(frozen=True)
class BeamSplitter:
    """Two-mode beam splitter.

    ``symbol`` optionally names the angle parameter this element realises
    (elements that share a symbol share an angle). A leading ``"-"`` marks
    an element whose angle is the negated parameter, as produced by
    :meth:`inverse`.
    """

    mode_a: int
    mode_b: int
    theta: float
    symbol: str | None = None

    def __post_init__(self):
        if self.mode_a == self.mode_b:
            raise ValueError("beam splitter needs two distinct modes")
        if self.mode_a < 0 or self.mode_b < 0:
            raise ValueError("mode indices must be non-negative")
        object.__setattr__(self, "theta", _wrap_angle(self.theta))

    @classmethod
    def from_transmittivity(cls, mode_a: int, mode_b: int, T: float, symbol: str | None = None):
        if not 0.0 <= T <= 1.0:
            raise ValueError(f"transmittivity must lie in [0, 1], got {T}")
        return cls(mode_a, mode_b, math.acos(math.sqrt(T)), symbol)

    @property
    def transmittivity(self) -> float:
        return math.cos(self.theta) ** 2

    @property
    def reflectivity(self) -> float:
        return math.sin(self.theta) ** 2

    def inverse(self) -> "BeamSplitter":
        sym = self.symbol
        if sym is not None:
            sym = sym[1:] if sym.startswith("-") else "-" + sym
        return BeamSplitter(self.mode_a, self.mode_b, -self.theta, sym)

    def matrix(self) -> np.ndarray:
        """2x2 single-photon transfer matrix; column j is the image of input port j."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Circuit:
    """Ordered sequence of beam splitters on ``mode_count`` modes."""

    mode_count: int
    elements: tuple[BeamSplitter, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        for el in self.elements:
            if max(el.mode_a, el.mode_b) >= self.mode_count:
                raise ValueError(
                    f"element on modes ({el.mode_a}, {el.mode_b}) exceeds {self.mode_count} modes"
                )

    def __len__(self) -> int:
        return len(self.elements)

    def then(self, other: "Circuit") -> "Circuit":
        """This circuit followed by ``other``."""
        if other.mode_count != self.mode_count:
            raise ModeMismatchError("circuits act on different mode counts")
        return Circuit(self.mode_count, self.elements + other.elements)

    def remap(self, mapping: Mapping[int, int], mode_count: int) -> "Circuit":
        """Relabel modes, e.g. to embed the circuit in a larger system."""
        els = [
            replace(el, mode_a=mapping[el.mode_a], mode_b=mapping[el.mode_b])
            for el in self.elements
        ]
        return Circuit(mode_count, tuple(els))

    def symbols(self) -> list[str]:
        """Distinct angle parameters, in order of first use, sign markers stripped."""
        seen: dict[str, None] = {}
        for i, el in enumerate(self.elements):
            seen.setdefault(_base_symbol(el, i), None)
        return list(seen)

    def last_use(self) -> dict[int, int]:
        """Index of the last element touching each mode (absent if untouched)."""
        out = {}
        for i, el in enumerate(self.elements):
            out[el.mode_a] = i
            out[el.mode_b] = i
        return out

    def to_dict(self) -> dict:
        els = []
        for el in self.elements:
            bs = {"a": el.mode_a, "b": el.mode_b, "theta": float(f"{el.theta:.17g}")}
            if el.symbol is not None:
                bs["symbol"] = el.symbol
            els.append({"bs": bs})
        return {"modes": self.mode_count, "elements": els}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> "Circuit":
        els = []
        for item in data["elements"]:
            bs = item["bs"]
            els.append(BeamSplitter(int(bs["a"]), int(bs["b"]), float(bs["theta"]), bs.get("symbol")))
        return cls(int(data["modes"]), tuple(els))

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))


def _base_symbol(el: BeamSplitter, index: int) -> str:
    if el.symbol is None:
        return f"e{index}"
    return el.symbol.lstrip("-")


# ---------------------------------------------------------------------------
# expansion kernel

@lru_cache(maxsize=None)
def _split_terms(n: int, m: int) -> tuple[tuple[tuple[float, int, int], ...], ...]:
    """Monomials of ``<p, n+m-p| U |n, m>`` for every output count ``p``.

    Entry ``p`` lists ``(coefficient, cos_power, sin_power)``.
    """
    total = n + m
    norm_in = math.factorial(n) * math.factorial(m)
    out = []
    for p in range(total + 1):
        norm = math.sqrt(math.factorial(p) * math.factorial(total - p) / norm_in)
        mono: dict[tuple[int, int], int] = {}
        # i photons of mode a stay in a, j photons of mode b move to a
        for i in range(max(0, p - m), min(n, p) + 1):
            j = p - i
            coef = math.comb(n, i) * math.comb(m, j) * (-1) ** j
            key = (i + m - j, n - i + j)
            mono[key] = mono.get(key, 0) + coef
        out.append(tuple((c * norm, ce, se) for (ce, se), c in mono.items() if c != 0))
    return tuple(out)


def _block(n: int, m: int, cpow, spow):
    """Amplitudes ``<p, n+m-p|U|n, m>`` for all p, from precomputed powers."""
    vals = []
    for mono in _split_terms(n, m):
        acc = 0.0
        for coef, ce, se in mono:
            acc = acc + coef * cpow[ce] * spow[se]
        vals.append(acc)
    return vals


def _powers(x, upto: int):
    out = [1.0, x]
    for _ in range(upto - 1):
        out.append(out[-1] * x)
    return out


def _apply_element(terms: dict, a: int, b: int, c, s, prune: float) -> dict:
    """Push a dict of amplitudes through one beam splitter.

    ``c`` and ``s`` may be floats or equally shaped numpy arrays; amplitudes
    follow suit. With array amplitudes a ket is pruned only if every entry
    is below ``prune``.
    """
    if not terms:
        return {}
    top = max(k[a] + k[b] for k in terms)
    cpow, spow = _powers(c, max(top, 1)), _powers(s, max(top, 1))
    blocks: dict[tuple[int, int], list] = {}
    out: dict[tuple[int, ...], object] = {}
    for ket, amp in terms.items():
        n, m = ket[a], ket[b]
        if n == 0 and m == 0:
            out[ket] = out.get(ket, 0.0) + amp
            continue
        blk = blocks.get((n, m))
        if blk is None:
            blk = blocks[(n, m)] = _block(n, m, cpow, spow)
        base = list(ket)
        total = n + m
        for p, val in enumerate(blk):
            base[a] = p
            base[b] = total - p
            key = tuple(base)
            out[key] = out.get(key, 0.0) + amp * val
    if prune > 0:
        return {k: v for k, v in out.items() if np.max(np.abs(v)) >= prune}
    return out


def _element_angle(el: BeamSplitter, params: Mapping[str, object] | None, index: int):
    if params is None:
        return el.theta
    sym = el.symbol if el.symbol is not None else f"e{index}"
    sign = -1.0 if sym.startswith("-") else 1.0
    return sign * params[sym.lstrip("-")]


def _trig(theta):
    if isinstance(theta, np.ndarray):
        return np.cos(theta), np.sin(theta)
    return math.cos(theta), math.sin(theta)


def apply_beam_splitter(
    state: QuantumState, bs: BeamSplitter, prune: float = PRUNE_THRESHOLD
) -> QuantumState:
    """Exact action of one beam splitter on a Fock-space state."""
    if max(bs.mode_a, bs.mode_b) >= state.mode_count:
        raise ValueError(
            f"beam splitter on modes ({bs.mode_a}, {bs.mode_b}) exceeds {state.mode_count} modes"
        )
    c, s = _trig(bs.theta)
    terms = _apply_element(dict(state.terms), bs.mode_a, bs.mode_b, c, s, prune)
    return QuantumState._wrap(state.mode_count, {k: complex(v) for k, v in terms.items()})


def apply_circuit(
    state: QuantumState, circuit: Circuit, prune: float = PRUNE_THRESHOLD
) -> QuantumState:
    """Apply the circuit's elements in order."""
    if state.mode_count != circuit.mode_count:
        raise ModeMismatchError(
            f"state has {state.mode_count} modes, circuit has {circuit.mode_count}"
        )
    terms = dict(state.terms)
    for el in circuit.elements:
        c, s = _trig(el.theta)
        terms = _apply_element(terms, el.mode_a, el.mode_b, c, s, prune)
    return QuantumState._wrap(state.mode_count, {k: complex(v) for k, v in terms.items()})


def run_heralded(
    terms: Mapping[tuple[int, ...], object],
    circuit: Circuit,
    pattern: Mapping[int, int],
    params: Mapping[str, object] | None = None,
    prune: float = 0.0,
) -> dict:
    """Evolve raw amplitudes and keep only the component matching ``pattern``.

    Each detected mode is filtered as soon as no later element touches it,
    which keeps the intermediate support small. The result is identical to
    evolving the full state and post-selecting at the end. Detected modes are
    left in place (not removed) in the returned keys.

    ``params`` maps symbol names to angles (floats or arrays); when given,
    element angles come from it instead of ``element.theta``.
    """
    last = circuit.last_use()
    due: dict[int, list[tuple[int, int]]] = {}
    cur = dict(terms)
    early = []
    for mode, count in pattern.items():
        if mode in last:
            due.setdefault(last[mode], []).append((mode, count))
        else:
            early.append((mode, count))
    if early:
        cur = {k: v for k, v in cur.items() if all(k[m] == n for m, n in early)}
    for i, el in enumerate(circuit.elements):
        c, s = _trig(_element_angle(el, params, i))
        cur = _apply_element(cur, el.mode_a, el.mode_b, c, s, prune)
        checks = due.get(i)
        if checks:
            cur = {k: v for k, v in cur.items() if all(k[m] == n for m, n in checks)}
    return cur


def adjoint(circuit: Circuit) -> Circuit:
    """Time-reversed circuit: elements reversed, each replaced by its inverse."""
    return Circuit(circuit.mode_count, tuple(el.inverse() for el in reversed(circuit.elements)))


def mode_unitary(circuit: Circuit) -> np.ndarray:
    """Single-photon transfer matrix ``U`` with ``U[j, k] = <1_j| C |1_k>``."""
    u = np.eye(circuit.mode_count, dtype=complex)
    for el in circuit.elements:
        step = np.eye(circuit.mode_count, dtype=complex)
        blk = el.matrix()
        idx = [el.mode_a, el.mode_b]
        step[np.ix_(idx, idx)] = blk
        u = step @ u
    return u


def random_circuit(
    rng: np.random.Generator, mode_count: int, depth: int
) -> Circuit:
    """Random element sequence; a test and benchmarking helper."""
    els = []
    for _ in range(depth):
        a, b = rng.choice(mode_count, size=2, replace=False)
        els.append(BeamSplitter(int(a), int(b), float(rng.uniform(-math.pi, math.pi))))
    return Circuit(mode_count, tuple(els))


def modes_touched(circuit: Circuit) -> set[int]:
    return {m for el in circuit.elements for m in (el.mode_a, el.mode_b)}


def concat(circuits: Iterable[Circuit]) -> Circuit:
    circuits = list(circuits)
    if not circuits:
        raise ValueError("nothing to concatenate")
    out = circuits[0]
    for c in circuits[1:]:
        out = out.then(c)
    return out


def elementwise_equal(c1: Circuit, c2: Circuit) -> bool:
    return c1.mode_count == c2.mode_count and c1.elements == c2.elements
