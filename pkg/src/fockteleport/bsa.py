"""Bell-state analyser: the EPR source run backwards.

Feeding a two-mode state into the source's output ports (with the herald
photons re-injected at the detector ports) and running the adjoint circuit
returns the source's own input pattern exactly when the state was the
source's Bell state. Only that one Bell state is identifiable, so a
``d``-level teleportee is analysed with efficiency ``1/d**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .fock import CapacityError, FockBasisState, QuantumState, ModeMismatchError
from .optics import BeamSplitter, Circuit, adjoint, apply_circuit
from .vsource import VSchemeSpec, build_layout

MAX_CASCADE_PHOTONS = 8


@dataclass(frozen=True)
class BellOutcome:
    pattern: FockBasisState
    identified: str | None = None


def bell_label(spec: VSchemeSpec) -> str:
    n1, n2 = spec.vertex_inputs
    return f"bell[{spec.topology}:{n1},{n2}]"


def build_bsa(spec: VSchemeSpec) -> Circuit:
    """Adjoint of the source circuit on the same mode labels."""
    return adjoint(build_layout(spec).circuit)


def embed_bell_input(state: QuantumState, spec: VSchemeSpec) -> QuantumState:
    """Place a two-mode state on the analyser's Bell ports, herald photons elsewhere."""
    lay = build_layout(spec)
    m = lay.circuit.mode_count
    o1, o2 = lay.outputs
    terms = {}
    for (x, y), amp in state.terms.items():
        ket = [0] * m
        for mode, cnt in lay.pattern.items():
            ket[mode] = cnt
        ket[o1], ket[o2] = x, y
        terms[tuple(ket)] = amp
    return QuantumState._wrap(m, terms)


def analyze(state: QuantumState, spec: VSchemeSpec) -> list[tuple[BellOutcome, float]]:
    """Outcome distribution of the analyser.

    ``state`` is either a two-mode state on the Bell ports or a state on
    every mode of the source circuit. Outcomes are sorted by pattern; the
    single pattern equal to the source's input ket carries the Bell label.
    """
    lay = build_layout(spec)
    if state.mode_count == 2 and lay.circuit.mode_count != 2:
        state = embed_bell_input(state, spec)
    if state.mode_count != lay.circuit.mode_count:
        raise ModeMismatchError(
            f"analyser takes 2 or {lay.circuit.mode_count} modes, got {state.mode_count}"
        )
    out = apply_circuit(state, adjoint(lay.circuit))
    label = bell_label(spec)
    dist = []
    for ket in sorted(out.terms):
        p = abs(out.terms[ket]) ** 2
        ident = label if ket == lay.input_ket else None
        dist.append((BellOutcome(FockBasisState(ket), ident), p))
    return dist


def identified_probability(dist: list[tuple[BellOutcome, float]]) -> float:
    return math.fsum(p for o, p in dist if o.identified is not None)


def distribution_to_json(dist: list[tuple[BellOutcome, float]]) -> list[dict]:
    return [
        {"pattern": list(o.pattern), "p": p, "identified": o.identified is not None}
        for o, p in dist
    ]


def discrimination_efficiency(d: int) -> float:
    """Fraction ``1/d**2`` of Bell outcomes a single-state analyser can flag."""
    if d < 2:
        raise ValueError("qudit dimension must be >= 2")
    return 1.0 / d**2


def splitter_tree(depth: int) -> Circuit:
    """Balanced 50:50 tree fanning mode 0 out to ``2**depth`` leaves."""
    leaves = 2**depth
    els = []
    for level in range(depth):
        span = 2**level
        for i in range(span):
            els.append(BeamSplitter(i, i + span, math.pi / 4))
    return Circuit(leaves, tuple(els))


def cascade_resolution_probability(photons: int, depth: int) -> float:
    """Probability that no leaf of a balanced splitter tree sees more than one photon."""
    if photons < 0 or depth < 0:
        raise ValueError("photons and depth must be non-negative")
    if photons > MAX_CASCADE_PHOTONS:
        raise CapacityError(f"cascade simulation is limited to {MAX_CASCADE_PHOTONS} photons")
    if photons <= 1:
        return 1.0
    tree = splitter_tree(depth)
    start = QuantumState.basis((photons,) + (0,) * (tree.mode_count - 1))
    out = apply_circuit(start, tree, prune=0.0)
    return min(1.0, math.fsum(abs(a) ** 2 for k, a in out.terms.items() if max(k) <= 1))
