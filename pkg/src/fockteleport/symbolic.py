"""Exact beam-splitter amplitudes as polynomials in cos/sin of element angles.

Coefficients are ``Fraction * sqrt(r)`` with ``r`` a square-free positive
integer. Summands that share a monomial but carry different radicands are
stored separately, which keeps equality decidable without an algebraic
number tower.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .optics import Circuit, _base_symbol

# monomial: ((name, cos_power, sin_power), ...) sorted by name, no (0, 0) entries
Monomial = tuple
Key = tuple  # (monomial, radicand)


class UnassignedVariableError(KeyError):
    pass


def _squarefree(n: int) -> tuple[int, int]:
    """Split ``n = k**2 * r`` with ``r`` square-free; returns ``(k, r)``."""
    if n <= 0:
        raise ValueError(f"radicand must be positive, got {n}")
    k, r, p = 1, n, 2
    while p * p <= r:
        while r % (p * p) == 0:
            r //= p * p
            k *= p
        p += 1
    return k, r


def _sqrt_rational(q: Fraction) -> tuple[Fraction, int]:
    """Write ``sqrt(q)`` as ``coef * sqrt(r)``."""
    num, den = q.numerator, q.denominator
    k, r = _squarefree(num * den)
    return Fraction(k, den), r


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    acc = {name: [ce, se] for name, ce, se in m1}
    for name, ce, se in m2:
        if name in acc:
            acc[name][0] += ce
            acc[name][1] += se
        else:
            acc[name] = [ce, se]
    return tuple(sorted((n, ce, se) for n, (ce, se) in acc.items() if ce or se))


class TrigPolynomial:
    """Polynomial in ``c_x = cos(x)`` and ``s_x = sin(x)`` for named angles ``x``."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Key, Fraction] | None = None):
        self._terms: dict[Key, Fraction] = {}
        if terms:
            for key, coef in terms.items():
                if coef:
                    self._terms[key] = Fraction(coef)

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, value, radicand: int = 1) -> "TrigPolynomial":
        value = Fraction(value)
        k, r = _squarefree(radicand)
        return cls({((), r): value * k})

    @classmethod
    def sqrt(cls, n: int) -> "TrigPolynomial":
        return cls.constant(1, n)

    @classmethod
    def cos(cls, name: str) -> "TrigPolynomial":
        return cls({(((name, 1, 0),), 1): Fraction(1)})

    @classmethod
    def sin(cls, name: str) -> "TrigPolynomial":
        return cls({(((name, 0, 1),), 1): Fraction(1)})

    @classmethod
    def zero(cls) -> "TrigPolynomial":
        return cls()

    # -- introspection ------------------------------------------------------
    @property
    def terms(self) -> dict[Key, Fraction]:
        return dict(self._terms)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(sorted({name for (mono, _), _c in self._terms.items() for name, _, _ in mono}))

    def is_zero(self) -> bool:
        return not self.reduce()._terms

    def __len__(self) -> int:
        return len(self._terms)

    # -- arithmetic -----------------------------------------------------------
    def _coerce(self, other) -> "TrigPolynomial":
        if isinstance(other, TrigPolynomial):
            return other
        if isinstance(other, (int, Fraction)):
            return TrigPolynomial.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for key, coef in other._terms.items():
            out[key] = out.get(key, 0) + coef
        return TrigPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return TrigPolynomial({k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Key, Fraction] = {}
        for (m1, r1), c1 in self._terms.items():
            for (m2, r2), c2 in other._terms.items():
                g = math.gcd(r1, r2)
                key = (_mono_mul(m1, m2), (r1 // g) * (r2 // g))
                out[key] = out.get(key, 0) + c1 * c2 * g
        return TrigPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = TrigPolynomial.constant(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def scale(self, coef: Fraction, radicand: int = 1) -> "TrigPolynomial":
        """Multiply by ``coef * sqrt(radicand)``."""
        return self * TrigPolynomial.constant(coef, radicand)

    # -- canonical form -------------------------------------------------------
    def reduce(self) -> "TrigPolynomial":
        """Rewrite ``s**2 = 1 - c**2`` until every sine power is 0 or 1."""
        out: dict[Key, Fraction] = {}
        for (mono, rad), coef in self._terms.items():
            # each variable contributes sum_j C(k,j) (-1)^j c^(ce+2j) s^(se%2)
            expansions: list[list[tuple[tuple, int]]] = []
            for name, ce, se in mono:
                k, rest = divmod(se, 2)
                opts = []
                for j in range(k + 1):
                    sign = math.comb(k, j) * (-1) ** j
                    new = (name, ce + 2 * j, rest)
                    opts.append(((new,) if (new[1] or new[2]) else (), sign))
                expansions.append(opts)
            partial: list[tuple[tuple, int]] = [((), 1)]
            for opts in expansions:
                partial = [(m + e, w * f) for m, w in partial for e, f in opts]
            for m, w in partial:
                key = (tuple(sorted(m)), rad)
                out[key] = out.get(key, 0) + coef * w
        return TrigPolynomial(out)

    def canonical_items(self) -> list[tuple[Key, Fraction]]:
        red = self.reduce()
        return sorted(red._terms.items(), key=_order_key)

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return not (self - other).reduce()._terms

    def __hash__(self):
        return hash(tuple(self.canonical_items()))

    # -- evaluation -------------------------------------------------------------
    def evaluate(self, angles: Mapping[str, float]) -> float:
        """Value at the given angles (radians)."""
        missing = [v for v in self.variables if v not in angles]
        if missing:
            raise UnassignedVariableError(f"no angle given for {missing}")
        trig = {v: (math.cos(angles[v]), math.sin(angles[v])) for v in self.variables}
        parts = []
        for (mono, rad), coef in self._terms.items():
            val = float(coef) * math.sqrt(rad)
            for name, ce, se in mono:
                c, s = trig[name]
                val *= c**ce * s**se
            parts.append(val)
        return math.fsum(parts)

    def evaluate_many(self, angles: Mapping[str, np.ndarray]) -> np.ndarray:
        """Vectorised :meth:`evaluate` over equally shaped angle arrays."""
        missing = [v for v in self.variables if v not in angles]
        if missing:
            raise UnassignedVariableError(f"no angle given for {missing}")
        shape = np.broadcast(*[np.asarray(angles[v]) for v in self.variables]).shape if self.variables else ()
        trig = {v: (np.cos(angles[v]), np.sin(angles[v])) for v in self.variables}
        total = np.zeros(shape)
        for (mono, rad), coef in self._terms.items():
            val = float(coef) * math.sqrt(rad)
            for name, ce, se in mono:
                c, s = trig[name]
                val = val * c**ce * s**se
            total = total + val
        return total

    # -- text form -------------------------------------------------------------
    def to_text(self) -> str:
        """Stable text form, one summand per canonical term."""
        items = self.canonical_items()
        if not items:
            return "0"
        parts = []
        for (mono, rad), coef in items:
            factors = [f"{coef.numerator}/{coef.denominator}"]
            if rad != 1:
                factors.append(f"sqrt({rad})")
            for name, ce, se in mono:
                if ce:
                    factors.append(f"c_{name}" + (f"^{ce}" if ce > 1 else ""))
                if se:
                    factors.append(f"s_{name}" + (f"^{se}" if se > 1 else ""))
            parts.append("*".join(factors))
        return " + ".join(parts)

    @classmethod
    def from_text(cls, text: str) -> "TrigPolynomial":
        text = text.strip()
        if text == "0":
            return cls()
        out: dict[Key, Fraction] = {}
        for part in text.split(" + "):
            factors = part.split("*")
            coef = Fraction(factors[0])
            rad = 1
            mono: dict[str, list[int]] = {}
            for f in factors[1:]:
                m = re.fullmatch(r"sqrt\((\d+)\)", f)
                if m:
                    rad = int(m.group(1))
                    continue
                m = re.fullmatch(r"([cs])_([A-Za-z_][A-Za-z0-9_]*)(?:\^(\d+))?", f)
                if not m:
                    raise ValueError(f"cannot parse factor {f!r}")
                which, name, power = m.group(1), m.group(2), int(m.group(3) or 1)
                slot = mono.setdefault(name, [0, 0])
                slot[0 if which == "c" else 1] += power
            key = (tuple(sorted((n, ce, se) for n, (ce, se) in mono.items())), rad)
            out[key] = out.get(key, 0) + coef
        return cls(out)

    def __repr__(self) -> str:
        return f"TrigPolynomial({self.to_text()})"


def _order_key(item):
    (mono, rad), _ = item
    degree = sum(ce + se for _, ce, se in mono)
    return (-degree, tuple((n, -ce, -se) for n, ce, se in mono), rad)


def reduce(p: TrigPolynomial) -> TrigPolynomial:
    return p.reduce()


def evaluate(p: TrigPolynomial, angles: Mapping[str, float]) -> float:
    return p.evaluate(angles)


def matches_up_to_global_sign(p: TrigPolynomial, q: TrigPolynomial) -> bool:
    """True when ``p == q`` or ``p == -q`` after canonicalisation."""
    return p == q or p == -q


def c(name: str) -> TrigPolynomial:
    return TrigPolynomial.cos(name)


def s(name: str) -> TrigPolynomial:
    return TrigPolynomial.sin(name)


# ---------------------------------------------------------------------------
# circuit amplitudes

def _bs_block_symbolic(n: int, m: int, name: str, negated: bool) -> list[TrigPolynomial]:
    """Exact ``<p, n+m-p|U|n, m>`` for each ``p`` as trig polynomials."""
    total = n + m
    nf = math.factorial(n) * math.factorial(m)
    out = []
    for p in range(total + 1):
        coef, rad = _sqrt_rational(Fraction(math.factorial(p) * math.factorial(total - p), nf))
        terms: dict[Key, Fraction] = {}
        for i in range(max(0, p - m), min(n, p) + 1):
            j = p - i
            ce, se = i + m - j, n - i + j
            sign = (-1) ** j * ((-1) ** se if negated else 1)
            mono = ((name, ce, se),) if (ce or se) else ()
            key = (mono, rad)
            terms[key] = terms.get(key, 0) + coef * math.comb(n, i) * math.comb(m, j) * sign
        out.append(TrigPolynomial(terms))
    return out


def symbolic_amplitude(
    circuit: Circuit, input_state: Sequence[int], outcome: Sequence[int]
) -> TrigPolynomial:
    """Exact ``<outcome| U(angles) |input>`` for a circuit of beam splitters.

    Angle variables are the elements' symbols (``e{index}`` for unnamed
    elements). Inputs and outcomes with different photon numbers give the
    zero polynomial.
    """
    input_state, outcome = tuple(input_state), tuple(outcome)
    if len(input_state) != circuit.mode_count or len(outcome) != circuit.mode_count:
        raise ValueError("input and outcome must match the circuit's mode count")
    if sum(input_state) != sum(outcome):
        return TrigPolynomial.zero()

    last = circuit.last_use()
    terms: dict[tuple[int, ...], TrigPolynomial] = {input_state: TrigPolynomial.constant(1)}
    # modes never touched must already agree with the outcome
    for mode in range(circuit.mode_count):
        if mode not in last and input_state[mode] != outcome[mode]:
            return TrigPolynomial.zero()

    for idx, el in enumerate(circuit.elements):
        name = _base_symbol(el, idx)
        negated = el.symbol is not None and el.symbol.startswith("-")
        a, b = el.mode_a, el.mode_b
        fixed = [m for m in (a, b) if last[m] == idx]
        cache: dict[tuple[int, int], list[TrigPolynomial]] = {}
        new: dict[tuple[int, ...], TrigPolynomial] = {}
        for ket, amp in terms.items():
            n, m = ket[a], ket[b]
            blk = cache.get((n, m))
            if blk is None:
                blk = cache[(n, m)] = _bs_block_symbolic(n, m, name, negated)
            base = list(ket)
            for p, poly in enumerate(blk):
                base[a], base[b] = p, n + m - p
                if any(base[f] != outcome[f] for f in fixed):
                    continue
                if not poly._terms:
                    continue
                key = tuple(base)
                contrib = amp * poly
                new[key] = new[key] + contrib if key in new else contrib
        terms = {k: v.reduce() for k, v in new.items()}
        terms = {k: v for k, v in terms.items() if v._terms}
    return terms.get(outcome, TrigPolynomial.zero()).reduce()


def symbolic_amplitudes(
    circuit: Circuit, input_state: Sequence[int], outcomes: Iterable[Sequence[int]]
) -> dict[tuple[int, ...], TrigPolynomial]:
    return {tuple(o): symbolic_amplitude(circuit, input_state, o) for o in outcomes}
