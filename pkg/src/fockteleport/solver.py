"""Transmittivities that equalise the heralded output amplitudes.

Residuals are differences of consecutive normalized squared moduli
``|A_k|^2 / P - |A_{k+1}|^2 / P`` (``P`` the herald probability), so the
tolerance means the same thing for every ``n`` even though ``P`` falls by
orders of magnitude. Roots are found by Newton's method with a
central-difference Jacobian, started from every point of a regular grid
over the angle box and run for all starts at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from decimal import Decimal, getcontext
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import vsource
from .fock import schmidt_coefficients

HALF_PI = math.pi / 2


@dataclass(frozen=True)
class SolverConfig:
    grid_points: int = 32
    tol: float = 1e-10
    newton_tol: float = 1e-14
    max_iter: int = 60
    fd_step: float = 1e-7
    dedup_radius: float = 1e-6
    max_step: float = 0.25
    boundary_margin: float = 1e-7

    @classmethod
    def for_n(cls, n: int, **overrides) -> "SolverConfig":
        """Default config, with the grid thinned for ``n >= 4`` to bound the start count."""
        overrides.setdefault("grid_points", 32 if n <= 3 else 12 if n == 4 else 8)
        return cls(**overrides)


@dataclass
class EqualizationProblem:
    """``n`` angle unknowns, residuals as a vectorised function of them."""

    n: int
    amplitudes: Callable[[np.ndarray], np.ndarray]
    mode: str = "modulus"
    symmetric: bool = True
    spec_factory: Callable[[Sequence[float]], vsource.VSchemeSpec] | None = None

    @classmethod
    def for_source(
        cls,
        n: int,
        topology: str = vsource.DEFAULT_TOPOLOGY,
        mode: str = "modulus",
        inputs: tuple[int, int] | None = None,
    ) -> "EqualizationProblem":
        if mode not in ("modulus", "signed"):
            raise ValueError(f"unknown mode {mode!r}")
        symmetric = inputs is None or inputs[0] == inputs[1]

        def amps(angles):
            return vsource.bell_amplitudes_batch(n, angles, topology, inputs)

        def factory(angles):
            return vsource.VSchemeSpec(n, tuple(angles), topology, inputs)

        return cls(n, amps, mode, symmetric, factory)

    @property
    def residual_count(self) -> int:
        return self.residuals(np.full((1, self.n), 0.3)).shape[1]

    def residuals(self, angles: np.ndarray) -> np.ndarray:
        """Residual vectors, shape ``(batch, count)``; NaN where nothing is heralded."""
        amps = self.amplitudes(np.atleast_2d(angles))
        herald = np.sum(amps**2, axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            if self.mode == "modulus":
                q = amps**2 / herald
            else:
                q = amps / np.sqrt(herald)
        diff = q[:, :-1] - q[:, 1:]
        if self.symmetric:
            diff = diff[:, : self.n]
        return diff

    def herald(self, angles: np.ndarray) -> np.ndarray:
        amps = self.amplitudes(np.atleast_2d(angles))
        return np.sum(amps**2, axis=1)


@dataclass
class SolveResult:
    angles: tuple[float, ...]
    residual_norm: float
    herald_probability: float
    notes: list[str] = field(default_factory=list)

    @property
    def transmittivities(self) -> tuple[float, ...]:
        return tuple(math.cos(a) ** 2 for a in self.angles)

    @classmethod
    def from_transmittivities(cls, Ts: Sequence[float], problem: EqualizationProblem | None = None):
        angles = tuple(math.acos(math.sqrt(T)) for T in Ts)
        if problem is None:
            return cls(angles, float("nan"), float("nan"))
        x = np.array([angles])
        res = float(np.linalg.norm(problem.residuals(x)[0]))
        return cls(angles, res, float(problem.herald(x)[0]))

    def distance_to(self, Ts: Sequence[float] | None) -> float:
        """Largest absolute transmittivity difference from ``Ts``."""
        if Ts is None or len(Ts) != len(self.angles):
            return math.inf
        return max(abs(a - b) for a, b in zip(self.transmittivities, Ts))

    def to_dict(self) -> dict:
        return {
            "T": list(self.transmittivities),
            "theta": list(self.angles),
            "residual": self.residual_norm,
            "herald_probability": self.herald_probability,
            "notes": list(self.notes),
        }


def _fold(angles: np.ndarray) -> np.ndarray:
    # squared moduli depend only on cos^2, so fold every angle into [0, pi/2]
    a = np.mod(angles, math.pi)
    return np.where(a > HALF_PI, math.pi - a, a)


def _jacobian(problem: EqualizationProblem, x: np.ndarray, h: float) -> np.ndarray:
    B, n = x.shape
    cols = []
    for j in range(n):
        step = np.zeros(n)
        step[j] = h
        fp = problem.residuals(x + step)
        fm = problem.residuals(x - step)
        cols.append((fp - fm) / (2 * h))
    return np.stack(cols, axis=2)


def _newton_step(J: np.ndarray, F: np.ndarray) -> np.ndarray:
    B, m, n = J.shape
    if m == n:
        try:
            return -np.linalg.solve(J, F[..., None])[..., 0]
        except np.linalg.LinAlgError:
            pass
    # least squares via damped normal equations (also handles singular rows)
    JT = np.transpose(J, (0, 2, 1))
    A = JT @ J
    lam = 1e-14 * (np.trace(A, axis1=1, axis2=2) + 1e-300)
    A = A + lam[:, None, None] * np.eye(n)
    return -np.linalg.solve(A, (JT @ F[..., None]))[..., 0]


def newton(problem: EqualizationProblem, starts: np.ndarray, config: SolverConfig) -> tuple[np.ndarray, np.ndarray]:
    """Run Newton from every row of ``starts``; returns final points and residual norms."""
    x = np.array(starts, dtype=float)
    res = np.full(len(x), np.inf)
    active = np.arange(len(x))
    for _ in range(config.max_iter):
        if active.size == 0:
            break
        xa = x[active]
        F = problem.residuals(xa)
        nrm = np.linalg.norm(F, axis=1)
        res[active] = nrm
        bad = ~np.isfinite(nrm)
        done = nrm < config.newton_tol
        keep = ~(bad | done)
        active, xa, F = active[keep], xa[keep], F[keep]
        if active.size == 0:
            break
        J = _jacobian(problem, xa, config.fd_step)
        with np.errstate(all="ignore"):
            dx = _newton_step(J, F)
        dx = np.nan_to_num(dx, nan=0.0, posinf=0.0, neginf=0.0)
        size = np.linalg.norm(dx, axis=1)
        scale = np.minimum(1.0, config.max_step / np.maximum(size, 1e-300))
        x[active] = xa + dx * scale[:, None]
        stalled = size < 1e-16
        active = active[~stalled]
    final = problem.residuals(x)
    res = np.linalg.norm(final, axis=1)
    return x, res


def start_grid(n: int, points: int) -> np.ndarray:
    """Interior grid over ``(0, pi/2)^n``."""
    axis = (np.arange(points) + 0.5) * HALF_PI / points
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def solve(problem: EqualizationProblem, config: SolverConfig | None = None) -> list[SolveResult]:
    """All distinct equalising angle vectors reachable from the start grid.

    Results are sorted by angle vector, so identical inputs give identical
    output. Solutions with a transmittivity of 0 or 1 are dropped as
    degenerate.
    """
    if config is None:
        config = SolverConfig.for_n(problem.n)
    starts = start_grid(problem.n, config.grid_points)
    x, res = newton(problem, starts, config)
    ok = np.isfinite(res) & (res < config.tol)
    if problem.mode == "modulus":
        x = _fold(x)
    else:
        ok &= np.all((x > 0) & (x < HALF_PI), axis=1)
    T = np.cos(x) ** 2
    ok &= np.all((T > config.boundary_margin) & (T < 1 - config.boundary_margin), axis=1)
    cand = x[ok]
    if cand.size == 0:
        return []

    order = np.lexsort(cand.T[::-1])
    cand = cand[order]
    uniq: list[np.ndarray] = []
    for row in cand:
        if not any(np.max(np.abs(row - u)) <= config.dedup_radius for u in uniq):
            uniq.append(row)
    pts = np.array(uniq)
    # re-evaluate at the deduplicated points rather than trusting the loop's cached norms
    final_res = np.linalg.norm(problem.residuals(pts), axis=1)
    herald = problem.herald(pts)
    out = []
    for row, r, h in zip(pts, final_res, herald):
        if r < config.tol:
            out.append(SolveResult(tuple(float(v) for v in row), float(r), float(h)))
    return out


@dataclass
class Verification:
    ok: bool
    moduli: list[float]
    max_modulus_deviation: float
    schmidt_deviation: float
    residual_norm: float
    herald_probability: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify(result: SolveResult, problem: EqualizationProblem, tol: float = 1e-6) -> Verification:
    """Recompute the output at ``result`` and check it is maximally entangled."""
    spec = problem.spec_factory(result.angles) if problem.spec_factory else None
    x = np.array([result.angles])
    residual = float(np.linalg.norm(problem.residuals(x)[0]))
    if spec is not None:
        bell = vsource.bell_amplitudes(spec)
        moduli = bell.moduli()
        herald = bell.herald_probability
    else:
        amps = problem.amplitudes(x)[0]
        herald = float(np.sum(amps**2))
        moduli = np.abs(amps) / math.sqrt(herald) if herald > 0 else np.zeros_like(amps)
    dev = float(moduli.max() - moduli.min())
    d = len(moduli)
    if herald > 0 and spec is not None:
        sc = schmidt_coefficients(bell.state())
        sc = sc + [0.0] * (d - len(sc))
        sdev = max(abs(v - 1 / math.sqrt(d)) for v in sc)
    else:
        sdev = 1.0
    return Verification(
        ok=dev < tol and sdev < tol,
        moduli=[float(m) for m in moduli],
        max_modulus_deviation=dev,
        schmidt_deviation=float(sdev),
        residual_norm=residual,
        herald_probability=float(herald),
    )


@dataclass(frozen=True)
class QuadraticSurd:
    """Exact number ``rational + coef * sqrt(radicand)``."""

    rational: Fraction
    coef: Fraction
    radicand: int

    def __float__(self) -> float:
        return float(self.rational) + float(self.coef) * math.sqrt(self.radicand)

    def decimal(self, digits: int = 30) -> Decimal:
        getcontext().prec = digits + 5
        r = Decimal(self.rational.numerator) / Decimal(self.rational.denominator)
        k = Decimal(self.coef.numerator) / Decimal(self.coef.denominator)
        return +(r + k * Decimal(self.radicand).sqrt())

    def __str__(self) -> str:
        sign = "+" if self.coef >= 0 else "-"
        return f"{self.rational} {sign} {abs(self.coef)}*sqrt({self.radicand})"


def _quadratic_roots(a: int, b: int, c: int) -> tuple[QuadraticSurd, QuadraticSurd]:
    from .symbolic import _squarefree

    disc = b * b - 4 * a * c
    if disc < 0:
        raise ValueError("complex roots")
    k, r = _squarefree(disc) if disc else (0, 1)
    base = Fraction(-b, 2 * a)
    half = Fraction(k, 2 * a)
    return QuadraticSurd(base, -half, r), QuadraticSurd(base, half, r)


def closed_form_quadratic(n: int = 1) -> tuple[QuadraticSurd, QuadraticSurd]:
    """Exact transmittivities for the single-element source.

    Equal moduli need ``(T - R)^2 = 2 T R`` with ``R = 1 - T``, i.e.
    ``6 T^2 - 6 T + 1 = 0``.
    """
    if n != 1:
        raise ValueError("a closed form exists only for n = 1")
    return _quadratic_roots(6, -6, 1)


@lru_cache(maxsize=None)
def _solutions(n: int, topology: str, inputs: tuple[int, int] | None) -> tuple[SolveResult, ...]:
    return tuple(solve(EqualizationProblem.for_source(n, topology, inputs=inputs)))


def solutions(n: int, topology: str = vsource.DEFAULT_TOPOLOGY, inputs: tuple[int, int] | None = None) -> list[SolveResult]:
    """Cached :func:`solve` with the default config for ``n``."""
    return list(_solutions(n, topology, inputs))


def preferred_solution(
    n: int,
    topology: str = vsource.DEFAULT_TOPOLOGY,
    inputs: tuple[int, int] | None = None,
    target: Sequence[float] | None = None,
) -> SolveResult | None:
    """Solution closest to ``target`` (default: first in sorted order)."""
    sols = solutions(n, topology, inputs)
    if not sols:
        return None
    if target is None:
        return sols[0]
    return min(sols, key=lambda r: r.distance_to(target))


def solved_spec(n: int, topology: str = vsource.DEFAULT_TOPOLOGY, target: Sequence[float] | None = None) -> vsource.VSchemeSpec | None:
    best = preferred_solution(n, topology, target=target)
    return None if best is None else vsource.VSchemeSpec(n, best.angles, topology)
