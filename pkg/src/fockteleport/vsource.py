"""V-layout EPR sources built from beam-splitter cascades.

A source for ``|n>|n>`` has one shared beam splitter (angle ``theta``) and
``n - 1`` further elements along each branch (angles ``phi1 ... phi{n-1}``,
equal at equal distance on the two branches), so ``2n - 1`` elements in
total. How the side elements are wired is a registered *topology*; the
outcomes on the two output modes are post-selected on the side detectors.

Topologies
----------
``photon_chain``
    Each side element mixes the branch with a one-photon ancilla; each side
    detector must register exactly one photon.
``vacuum_chain``
    Side elements mix the branch with vacuum; side detectors must stay dark.
``crossed_chain``
    As ``photon_chain``, but the branch continues through the reflected port
    at every side element (beams cross) and the transmitted port is detected.
``retro_arm``
    One vacuum side arm per branch that every side element of that branch
    couples back into; the arm's detector must stay dark.
``two_mode_cascade``
    No ancillas: every element acts on the two output modes.

With ``n = 1`` all topologies reduce to a single beam splitter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fock import QuantumState, fock_dimension, postselect, project
from .optics import BeamSplitter, Circuit, apply_circuit, run_heralded
from . import reference
from .symbolic import matches_up_to_global_sign, symbolic_amplitude

DEFAULT_TOPOLOGY = "photon_chain"


def parameter_names(n: int) -> tuple[str, ...]:
    return ("theta",) + tuple(f"phi{j}" for j in range(1, n))


def required_bs_count(n: int) -> int:
    """Beam splitters in a source for ``|n>|n>``: ``2n - 1``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2 * n - 1


def independent_equation_count(n: int) -> int:
    """Independent equalisation conditions for ``|n>|n>``: ``n``.

    The ``n + 1`` distinct moduli (the rest follow by branch symmetry) give
    ``n`` equalities.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return n


@dataclass(frozen=True)
class VSchemeSpec:
    """Source description: photons per branch, wiring and element angles."""

    n: int
    angles: tuple[float, ...]
    topology: str = DEFAULT_TOPOLOGY
    inputs: tuple[int, int] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        if len(self.angles) != self.n:
            raise ValueError(f"expected {self.n} angles (theta, phi1..), got {len(self.angles)}")
        if self.topology not in TOPOLOGIES:
            raise KeyError(f"unknown topology {self.topology!r}; known: {sorted(TOPOLOGIES)}")
        if self.inputs is not None:
            n1, n2 = self.inputs
            if n1 < 0 or n2 < 0 or n1 + n2 == 0:
                raise ValueError(f"invalid inputs {self.inputs}")
            object.__setattr__(self, "inputs", (int(n1), int(n2)))

    @classmethod
    def from_transmittivities(cls, n: int, Ts: Sequence[float], topology: str = DEFAULT_TOPOLOGY, inputs=None):
        return cls(n, tuple(math.acos(math.sqrt(T)) for T in Ts), topology, inputs)

    @property
    def transmittivities(self) -> tuple[float, ...]:
        return tuple(math.cos(a) ** 2 for a in self.angles)

    @property
    def vertex_inputs(self) -> tuple[int, int]:
        return self.inputs if self.inputs is not None else (self.n, self.n)

    @property
    def total_photons(self) -> int:
        """Photons that end up in the two output modes."""
        return sum(self.vertex_inputs)

    @property
    def is_symmetric(self) -> bool:
        n1, n2 = self.vertex_inputs
        return n1 == n2

    @property
    def dimension(self) -> int:
        return self.total_photons + 1

    def with_angles(self, angles: Sequence[float]) -> "VSchemeSpec":
        return VSchemeSpec(self.n, tuple(angles), self.topology, self.inputs)


@dataclass(frozen=True)
class SourceLayout:
    """A built source: circuit, input ket, herald pattern and output modes."""

    circuit: Circuit
    input_ket: tuple[int, ...]
    pattern: dict[int, int]
    outputs: tuple[int, int]

    def bell_outcome(self, k: int, total: int) -> tuple[int, ...]:
        """Full ket for ``|total - k, k>`` on the outputs with the herald pattern elsewhere."""
        ket = [0] * self.circuit.mode_count
        for mode, cnt in self.pattern.items():
            ket[mode] = cnt
        ket[self.outputs[0]] = total - k
        ket[self.outputs[1]] = k
        return tuple(ket)


def _chain(spec: VSchemeSpec, ancilla: int, detect: int, crossed: bool) -> SourceLayout:
    n = spec.n
    names = parameter_names(n)
    modes = 2 + 2 * (n - 1)
    els = [BeamSplitter(0, 1, spec.angles[0], names[0])]
    cur = [0, 1]
    pattern: dict[int, int] = {}
    for j in range(1, n):
        for br in (0, 1):
            anc = 2 + 2 * (j - 1) + br
            els.append(BeamSplitter(cur[br], anc, spec.angles[j], names[j]))
            if crossed:
                pattern[cur[br]] = detect
                cur[br] = anc
            else:
                pattern[anc] = detect
    n1, n2 = spec.vertex_inputs
    ket = (n1, n2) + (ancilla,) * (modes - 2)
    return SourceLayout(Circuit(modes, tuple(els)), ket, pattern, (cur[0], cur[1]))


def _photon_chain(spec):
    return _chain(spec, ancilla=1, detect=1, crossed=False)


def _vacuum_chain(spec):
    return _chain(spec, ancilla=0, detect=0, crossed=False)


def _crossed_chain(spec):
    return _chain(spec, ancilla=1, detect=1, crossed=True)


def _retro_arm(spec: VSchemeSpec) -> SourceLayout:
    n = spec.n
    names = parameter_names(n)
    modes = 2 if n == 1 else 4
    els = [BeamSplitter(0, 1, spec.angles[0], names[0])]
    for j in range(1, n):
        for br in (0, 1):
            els.append(BeamSplitter(br, 2 + br, spec.angles[j], names[j]))
    pattern = {} if n == 1 else {2: 0, 3: 0}
    n1, n2 = spec.vertex_inputs
    ket = (n1, n2) + (0,) * (modes - 2)
    return SourceLayout(Circuit(modes, tuple(els)), ket, pattern, (0, 1))


def _two_mode_cascade(spec: VSchemeSpec) -> SourceLayout:
    names = parameter_names(spec.n)
    els = [BeamSplitter(0, 1, spec.angles[0], names[0])]
    for j in range(1, spec.n):
        els.append(BeamSplitter(0, 1, spec.angles[j], names[j]))
        els.append(BeamSplitter(0, 1, spec.angles[j], names[j]))
    return SourceLayout(Circuit(2, tuple(els)), spec.vertex_inputs, {}, (0, 1))


TOPOLOGIES: dict[str, Callable[[VSchemeSpec], SourceLayout]] = {
    "photon_chain": _photon_chain,
    "vacuum_chain": _vacuum_chain,
    "crossed_chain": _crossed_chain,
    "retro_arm": _retro_arm,
    "two_mode_cascade": _two_mode_cascade,
}


def build_layout(spec: VSchemeSpec) -> SourceLayout:
    return TOPOLOGIES[spec.topology](spec)


def build_circuit(spec: VSchemeSpec) -> tuple[Circuit, dict[int, int], tuple[int, int]]:
    """Circuit, detection pattern and the two output modes ``(1', 2')``."""
    lay = build_layout(spec)
    return lay.circuit, dict(lay.pattern), lay.outputs


@dataclass(frozen=True)
class BellAmplitudeVector:
    """Post-selected amplitudes ``A_k`` of ``|N - k, k>`` on the output modes.

    Amplitudes are unnormalized: their squared moduli sum to the herald
    probability.
    """

    amplitudes: np.ndarray
    herald_probability: float

    @property
    def total_photons(self) -> int:
        return len(self.amplitudes) - 1

    def normalized(self) -> np.ndarray:
        if self.herald_probability == 0:
            return np.zeros_like(self.amplitudes)
        return self.amplitudes / math.sqrt(self.herald_probability)

    def moduli(self) -> np.ndarray:
        return np.abs(self.normalized())

    def signs(self) -> list[int]:
        return [int(np.sign(a.real)) if abs(a) > 0 else 0 for a in self.amplitudes]

    def state(self) -> QuantumState:
        """Normalized two-mode state ``sum_k A_k |N - k, k> / sqrt(P)``."""
        N = self.total_photons
        amps = self.normalized()
        return QuantumState(2, {(N - k, k): amps[k] for k in range(N + 1)}, prune=0.0)

    def to_dict(self) -> dict:
        return {
            "amplitudes": [{"re": float(a.real), "im": float(a.imag)} for a in self.amplitudes],
            "herald_probability": self.herald_probability,
        }


def bell_amplitudes(spec: VSchemeSpec) -> BellAmplitudeVector:
    """Run the source on its input and read off the heralded output amplitudes."""
    lay = build_layout(spec)
    raw = run_heralded({lay.input_ket: 1.0 + 0j}, lay.circuit, lay.pattern)
    N = spec.total_photons
    amps = np.array([complex(raw.get(lay.bell_outcome(k, N), 0.0)) for k in range(N + 1)])
    herald = math.fsum(abs(a) ** 2 for a in amps)
    return BellAmplitudeVector(amps, min(1.0, herald))


def bell_state(spec: VSchemeSpec) -> QuantumState:
    return bell_amplitudes(spec).state()


def source_output(spec: VSchemeSpec) -> QuantumState:
    """Full (unheralded) output state on every mode of the source circuit."""
    lay = build_layout(spec)
    return apply_circuit(QuantumState.basis(lay.input_ket), lay.circuit)


def heralded_by_projection(spec: VSchemeSpec) -> tuple[QuantumState, float]:
    """Same quantity as :func:`bell_amplitudes`, via full evolution and :func:`project`."""
    lay = build_layout(spec)
    return project(source_output(spec), lay.pattern)


def source_efficiency(spec: VSchemeSpec) -> float:
    """Herald probability of the source (squared norm of the post-selected part)."""
    return bell_amplitudes(spec).herald_probability


def bell_amplitudes_batch(
    n: int,
    angles: np.ndarray,
    topology: str = DEFAULT_TOPOLOGY,
    inputs: tuple[int, int] | None = None,
) -> np.ndarray:
    """Heralded amplitudes for many angle vectors at once.

    ``angles`` has shape ``(batch, n)``; the result has shape
    ``(batch, N + 1)`` with real entries (beam-splitter circuits on Fock
    inputs have real amplitudes).
    """
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    if angles.shape[1] != n:
        raise ValueError(f"angles must have {n} columns")
    proto = VSchemeSpec(n, (0.0,) * n, topology, inputs)
    lay = build_layout(proto)
    params = {name: angles[:, j] for j, name in enumerate(parameter_names(n))}
    raw = run_heralded({lay.input_ket: np.ones(len(angles))}, lay.circuit, lay.pattern, params)
    N = proto.total_photons
    zero = np.zeros(len(angles))
    return np.stack([np.real(raw.get(lay.bell_outcome(k, N), zero)) for k in range(N + 1)], axis=1)


def symbolic_bell_amplitudes(spec: VSchemeSpec) -> dict[tuple[int, int], object]:
    """Exact amplitudes of each output ``(N - k, k)`` as trig polynomials."""
    lay = build_layout(spec)
    N = spec.total_photons
    return {
        (N - k, k): symbolic_amplitude(lay.circuit, lay.input_ket, lay.bell_outcome(k, N))
        for k in range(N + 1)
    }


# ---------------------------------------------------------------------------
# topology calibration

@dataclass
class CandidateResult:
    candidate: str
    amplitude_match: bool | None
    solved_T: list[float]
    table1_match: bool
    residual: float | None
    herald_probability: float | None = None
    n_solutions: int = 0
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "candidate": self.candidate,
            "amplitude_match": self.amplitude_match,
            "solved_T": list(self.solved_T),
            "table1_match": self.table1_match,
            "residual": self.residual,
            "herald_probability": self.herald_probability,
            "n_solutions": self.n_solutions,
            "notes": list(self.notes),
        }


@dataclass
class TopologyReport:
    n: int
    candidates: list[CandidateResult]
    reference_T: list[float] | None
    notes: list[str] = field(default_factory=list)

    def entry(self, name: str) -> CandidateResult:
        for c in self.candidates:
            if c.candidate == name:
                return c
        raise KeyError(name)

    @property
    def matching(self) -> list[str]:
        return [c.candidate for c in self.candidates if c.amplitude_match]

    @property
    def calibrated(self) -> list[str]:
        """Candidates that meet every available target."""
        return [
            c.candidate
            for c in self.candidates
            if c.table1_match and c.amplitude_match is not False
        ]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "reference_T": self.reference_T,
            "candidates": [c.to_dict() for c in self.candidates],
            "calibrated": self.calibrated,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        head = f"{'candidate':<18} {'amp_match':<9} {'table_match':<11} {'residual':<10} {'herald':<10} solved T"
        lines = [f"topology calibration, n={self.n}", head, "-" * len(head)]
        for c in self.candidates:
            am = "n/a" if c.amplitude_match is None else str(c.amplitude_match)
            res = "-" if c.residual is None else f"{c.residual:.2e}"
            her = "-" if c.herald_probability is None else f"{c.herald_probability:.4g}"
            sol = ", ".join(f"{t:.7f}" for t in c.solved_T) or "-"
            lines.append(f"{c.candidate:<18} {am:<9} {str(c.table1_match):<11} {res:<10} {her:<10} {sol}")
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines)


def amplitude_match(n: int, topology: str) -> bool | None:
    """Compare a topology's exact amplitudes with the reference polynomials.

    ``None`` when no reference polynomials exist for this ``n``.
    """
    targets = reference.reference_amplitudes(n)
    if targets is None:
        return None
    spec = VSchemeSpec(n, (0.3,) * n, topology)
    exact = symbolic_bell_amplitudes(spec)
    return all(matches_up_to_global_sign(exact[out], poly) for out, poly in targets.items())


def calibrate_topology(n: int, config=None, topologies: Sequence[str] | None = None, tol: float = 1e-5) -> TopologyReport:
    """Score every registered wiring against the reference amplitudes and transmittivities."""
    from .solver import EqualizationProblem, SolverConfig, solve

    if config is None:
        config = SolverConfig.for_n(n)
    ref_row = reference.SYMMETRIC.get(n)
    ref_T = list(ref_row.transmittivities) if ref_row else None
    results = []
    for name in topologies or TOPOLOGIES:
        am = amplitude_match(n, name)
        sols = solve(EqualizationProblem.for_source(n, name), config)
        entry = CandidateResult(name, am, [], False, None, n_solutions=len(sols))
        if sols:
            best = min(sols, key=lambda r: r.distance_to(ref_T)) if ref_T else sols[0]
            entry.solved_T = list(best.transmittivities)
            entry.residual = best.residual_norm
            entry.herald_probability = best.herald_probability
            if ref_T:
                entry.table1_match = best.distance_to(ref_T) <= tol
        else:
            entry.notes.append("no equalising solution found")
        if am and ref_T and not entry.table1_match:
            entry.notes.append("matches reference amplitudes but not the reference transmittivities")
        results.append(entry)

    report = TopologyReport(n, results, ref_T)
    if n == 2:
        moduli = reference_amplitude_moduli_at_reference_T()
        report.notes.append(
            "reference A, B, C evaluated at the reference transmittivities have moduli "
            + ", ".join(f"{m:.6f}" for m in moduli)
            + "; they are not equal, so no wiring reproducing A, B, C can reproduce that row"
        )
    return report


def reference_amplitude_moduli_at_reference_T() -> list[float]:
    """|A|, |B|, |C| of the reference ``n = 2`` polynomials at the reference ``(T_theta, T_phi)``."""
    polys = reference.reference_amplitudes(2)
    T = reference.SYMMETRIC[2].transmittivities
    ang = {"theta": math.acos(math.sqrt(T[0])), "phi1": math.acos(math.sqrt(T[1]))}
    return [abs(polys[k].evaluate(ang)) for k in ((4, 0), (3, 1), (2, 2))]


def dimension_for(n: int) -> int:
    return 2 * n + 1


def support_size(spec: VSchemeSpec) -> int:
    lay = build_layout(spec)
    return fock_dimension(sum(lay.input_ket), lay.circuit.mode_count)
