"""End-to-end teleportation of a photon-number qudit.

Mode layout: 0 holds the teleportee, 1 and 2 the two halves of the source's
Bell state (Alice keeps 1, Bob holds 2); the analyser's herald ports follow
from mode 3 on.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .bsa import build_bsa
from .fock import (
    DensityMatrix,
    QuantumState,
    fidelity,
    postselect,
    reduced_density,
    tensor,
    trace_distance,
)
from .optics import apply_circuit
from .vsource import VSchemeSpec, bell_amplitudes, build_layout

SOLVED_TOL = 1e-6


class UnsolvedSourceError(ValueError):
    """The source's heralded amplitudes are not of equal modulus."""


@dataclass(frozen=True)
class QuditState:
    coefficients: np.ndarray

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=complex)
        if coef.ndim != 1 or coef.size < 1:
            raise ValueError("coefficients must be a non-empty vector")
        if abs(np.vdot(coef, coef).real - 1.0) > 1e-12:
            raise ValueError("qudit coefficients must have unit norm")
        object.__setattr__(self, "coefficients", coef)

    @property
    def dimension(self) -> int:
        return self.coefficients.size

    @classmethod
    def random(cls, d: int, rng: np.random.Generator) -> "QuditState":
        """Haar-random pure state (normalized complex Gaussian vector)."""
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        return cls(v / np.linalg.norm(v))

    @classmethod
    def basis(cls, d: int, k: int) -> "QuditState":
        v = np.zeros(d, dtype=complex)
        v[k] = 1
        return cls(v)

    def state(self) -> QuantumState:
        return QuantumState.single_mode(self.coefficients)


@dataclass(frozen=True)
class TeleportRecord:
    d: int
    herald_probability: float
    bob_state: QuantumState
    fidelity_before_correction: float
    fidelity_after_correction: float
    alice_remnant: DensityMatrix

    @property
    def alice_trace_distance(self) -> float:
        return _distance_to_mixed(self.alice_remnant, self.d)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "herald_p": self.herald_probability,
            "fidelity": self.fidelity_after_correction,
            "alice_trace_distance": self.alice_trace_distance,
        }


def _distance_to_mixed(rho: DensityMatrix, d: int) -> float:
    full = np.zeros((d, d), dtype=complex)
    idx = [lab[0] for lab in rho.basis_labels]
    full[np.ix_(idx, idx)] = rho.entries
    return trace_distance(full, np.eye(d) / d)


def correction(resource: np.ndarray, projector: np.ndarray | None = None) -> np.ndarray:
    """Diagonal phase fix Bob applies to Fock levels ``0 .. N``.

    ``resource[k]`` and ``projector[k]`` are the amplitudes of ``|N-k, k>``
    in the shared Bell state and in the state the analyser projects onto
    (the same source by default). Bob's level ``j`` then carries the factor
    ``conj(projector[N-j]) * resource[j]``; the correction undoes its phase.
    """
    resource = np.asarray(resource, dtype=complex)
    projector = resource if projector is None else np.asarray(projector, dtype=complex)
    N = len(resource) - 1
    weights = np.conj(projector[::-1]) * resource
    phases = np.ones(N + 1, dtype=complex)
    nz = np.abs(weights) > 0
    phases[nz] = np.conj(weights[nz]) / np.abs(weights[nz])
    return phases


def _check_solved(amps: np.ndarray) -> None:
    mod = np.abs(amps) / math.sqrt(np.sum(np.abs(amps) ** 2))
    if mod.max() - mod.min() > SOLVED_TOL:
        raise UnsolvedSourceError(
            f"source amplitudes are not equal in modulus (spread {mod.max() - mod.min():.3g})"
        )


def _bsa_on_teleport_modes(spec: VSchemeSpec):
    """Analyser circuit remapped onto (teleportee, Alice) plus herald ports, and its target pattern."""
    lay = build_layout(spec)
    bsa = build_bsa(spec)
    o1, o2 = lay.outputs
    others = sorted(m for m in range(lay.circuit.mode_count) if m not in (o1, o2))
    mapping = {o1: 0, o2: 1}
    mapping.update({m: 3 + i for i, m in enumerate(others)})
    total = 3 + len(others)
    circuit = bsa.remap(mapping, total)
    target = {mapping[m]: lay.input_ket[m] for m in range(lay.circuit.mode_count)}
    herald_inputs = tuple(lay.pattern[m] for m in others)
    return circuit, target, herald_inputs


def bob_amplitudes(coefficients: np.ndarray, spec: VSchemeSpec, apply_correction: bool = True) -> np.ndarray:
    """Bob's unnormalized level amplitudes for the flagged analyser outcome.

    Linear in ``coefficients``, which need not be normalized; the squared
    norm of the result is the herald probability for a unit-norm input.
    """
    coefficients = np.asarray(coefficients, dtype=complex)
    d = spec.dimension
    if coefficients.shape != (d,):
        raise ValueError(f"teleportee has dimension {coefficients.size}, source supports {d}")
    bell = bell_amplitudes(spec)
    _check_solved(bell.amplitudes)
    circuit, target, herald_inputs = _bsa_on_teleport_modes(spec)
    full = tensor(tensor(QuantumState.single_mode(coefficients), bell.state()), QuantumState.basis(herald_inputs))
    bob = postselect(apply_circuit(full, circuit), target)
    out = np.zeros(d, dtype=complex)
    for (k,), a in bob.terms.items():
        out[k] = a
    if apply_correction:
        out *= correction(bell.normalized())
    return out


def teleport_once(psi: QuditState, spec: VSchemeSpec, apply_correction: bool = True) -> TeleportRecord:
    """Teleport ``psi`` using the source ``spec`` and its time-reversed analyser."""
    d = spec.dimension
    if psi.dimension != d:
        raise ValueError(f"teleportee has dimension {psi.dimension}, source supports {d}")
    raw = bob_amplitudes(psi.coefficients, spec, apply_correction=False)
    herald = min(1.0, float(np.vdot(raw, raw).real))
    if herald == 0.0:
        raise UnsolvedSourceError("analyser never flags the Bell outcome")
    raw = raw / math.sqrt(herald)
    target = psi.state()
    before = fidelity(target, QuantumState.single_mode(raw))
    amps = bell_amplitudes(spec).normalized()
    fixed = raw * correction(amps) if apply_correction else raw
    bob = QuantumState.single_mode(fixed)
    after = fidelity(target, bob)

    N = d - 1
    projector = QuantumState(2, {(N - k, k): np.conj(amps[k]) for k in range(d)}, prune=0.0)
    remnant = reduced_density(projector, [0])
    return TeleportRecord(d, herald, bob, float(before), float(after), remnant)


def ideal_bell_measurement(d: int, total: int | None = None) -> list[tuple[tuple[int, int], QuantumState]]:
    """The ``d**2`` generalized Bell states on two ``d``-level modes.

    ``Phi[p, q] = sum_j w**(p j) |j, (N - j + q) mod d> / sqrt(d)`` with
    ``w = exp(2 pi i / d)`` and ``N = total`` (default ``d - 1``), so
    ``Phi[0, 0]`` is the anti-correlated state the source produces.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    N = d - 1 if total is None else total
    w = cmath.exp(2j * math.pi / d)
    out = []
    for p in range(d):
        for q in range(d):
            terms = {(j, (N - j + q) % d): w ** (p * j) / math.sqrt(d) for j in range(d)}
            out.append(((p, q), QuantumState(2, terms, prune=0.0)))
    return out


def _contract_first_two(phi: QuantumState, total: QuantumState) -> QuantumState:
    """``<phi|_{01} total`` as an unnormalized state on the remaining modes."""
    out: dict[tuple[int, ...], complex] = {}
    for ket, amp in total.terms.items():
        c = phi.terms.get(ket[:2])
        if c is not None:
            rest = ket[2:]
            out[rest] = out.get(rest, 0j) + c.conjugate() * amp
    return QuantumState._wrap(total.mode_count - 2, out)


def destroyed_original_check(
    psi: QuditState,
    spec: VSchemeSpec | None = None,
    measurement: list[QuantumState] | None = None,
    resource: QuantumState | None = None,
) -> float:
    """Largest trace distance between the teleportee's post-measurement state and ``I/d``.

    Modes 0 (teleportee) and 1 (Alice's half of ``resource``) are measured
    in ``measurement`` (the ideal Bell basis by default); the maximum runs
    over outcomes with non-zero probability.
    """
    d = psi.dimension
    if resource is None:
        if spec is None:
            raise ValueError("need a source spec or an explicit resource")
        resource = bell_amplitudes(spec).state()
    if measurement is None:
        measurement = [phi for _, phi in ideal_bell_measurement(d)]
    total = tensor(psi.state(), resource)
    worst = 0.0
    for phi in measurement:
        rest = _contract_first_two(phi, total)
        if rest.norm_squared() < 1e-14:
            continue
        post = tensor(phi, rest.normalized())
        rho = reduced_density(post, [0])
        worst = max(worst, _distance_to_mixed(rho, d))
    return worst


def run_trials(d: int, spec: VSchemeSpec, trials: int, seed: int) -> list[TeleportRecord]:
    """Independent random teleportees, each with its own child seed of ``seed``."""
    children = np.random.SeedSequence(seed).spawn(trials)
    out = []
    for child in children:
        psi = QuditState.random(d, np.random.default_rng(child))
        out.append(teleport_once(psi, spec))
    return out
