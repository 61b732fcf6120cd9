import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from fockteleport.bsa import (
    analyze,
    build_bsa,
    cascade_resolution_probability,
    discrimination_efficiency,
    distribution_to_json,
    identified_probability,
)
from fockteleport.fock import CapacityError, ModeMismatchError, QuantumState, project
from fockteleport.optics import adjoint, apply_circuit, elementwise_equal
from fockteleport.solver import preferred_solution
from fockteleport.vsource import VSchemeSpec, bell_state, build_layout, source_output


@pytest.fixture(scope="module")
def spec1():
    return VSchemeSpec(1, preferred_solution(1, target=(0.211325,)).angles)


@pytest.fixture(scope="module")
def spec2():
    return VSchemeSpec(2, preferred_solution(2).angles)


def test_bsa_is_adjoint(spec2):
    lay = build_layout(spec2)
    assert elementwise_equal(adjoint(build_bsa(spec2)), lay.circuit)


def test_bell_state_is_identified(spec1):
    dist = analyze(bell_state(spec1), spec1)
    assert abs(identified_probability(dist) - 1) < 1e-12
    assert math.fsum(p for _, p in dist) == pytest.approx(1, abs=1e-10)


def test_full_output_round_trip(spec2):
    dist = analyze(source_output(spec2), spec2)
    assert abs(identified_probability(dist) - 1) < 1e-10


def test_heralded_output_is_flagged_with_herald_probability(spec2):
    # only the heralded part goes back in, so the flag fires with the source's herald probability
    from fockteleport.vsource import source_efficiency

    dist = analyze(bell_state(spec2), spec2)
    assert abs(identified_probability(dist) - source_efficiency(spec2)) < 1e-12


def test_non_bell_input_overlap_rule(spec1):
    dist = analyze(QuantumState.basis((2, 0)), spec1)
    assert abs(identified_probability(dist) - 1 / 3) < 1e-12


def test_orthogonal_input_never_flagged(spec1):
    bell = bell_state(spec1)
    amps = [bell.amplitude((2 - k, k)) for k in range(3)]
    # a vector orthogonal to the Bell amplitudes inside the same subspace
    ortho = np.cross(np.real(amps), [1.0, 0.0, 0.0])
    ortho /= np.linalg.norm(ortho)
    state = QuantumState(2, {(2 - k, k): ortho[k] for k in range(3)})
    assert identified_probability(analyze(state, spec1)) < 1e-24


def test_exactly_one_label(spec2):
    dist = analyze(source_output(spec2), spec2)
    labels = {o.identified for o, _ in dist if o.identified}
    flagged = [o for o, _ in dist if o.identified]
    assert len(labels) == 1 and len(flagged) == 1
    assert tuple(flagged[0].pattern) == build_layout(spec2).input_ket


def test_born_consistency(spec2):
    rng = np.random.default_rng(0)
    vec = rng.normal(size=5) + 1j * rng.normal(size=5)
    vec /= np.linalg.norm(vec)
    state = QuantumState(2, {(4 - k, k): vec[k] for k in range(5)})
    dist = analyze(state, spec2)
    from fockteleport.bsa import embed_bell_input

    full = apply_circuit(embed_bell_input(state, spec2), build_bsa(spec2))
    for outcome, p in dist:
        _, q = project(full, dict(enumerate(outcome.pattern)))
        assert abs(p - q) < 1e-12


def test_mode_mismatch(spec2):
    with pytest.raises(ModeMismatchError):
        analyze(QuantumState.basis((1, 1, 1)), spec2)


def test_distribution_json(spec1, validate):
    doc = distribution_to_json(analyze(QuantumState.basis((2, 0)), spec1))
    validate("outcome_distribution", doc)
    assert sum(d["identified"] for d in doc) == 1


@pytest.mark.parametrize("d, want", [(2, 0.25), (3, 1 / 9), (5, 0.04)])
def test_discrimination_efficiency(d, want):
    assert discrimination_efficiency(d) == pytest.approx(want, abs=1e-15)


def test_discrimination_efficiency_domain():
    with pytest.raises(ValueError):
        discrimination_efficiency(1)


@pytest.mark.parametrize("photons, depth, want", [(1, 0, 1.0), (1, 3, 1.0), (2, 1, 0.5), (2, 2, 0.75)])
def test_cascade_values(photons, depth, want):
    assert abs(cascade_resolution_probability(photons, depth) - want) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 5), st.integers(0, 3))
def test_cascade_matches_multinomial(photons, depth):
    got = cascade_resolution_probability(photons, depth)
    assert abs(got - oracles.no_bunching_probability(photons, 2**depth)) < 1e-12


@pytest.mark.parametrize("photons", [1, 2, 3, 4])
def test_cascade_monotone_in_depth(photons):
    vals = [cascade_resolution_probability(photons, d) for d in range(5)]
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))


def test_cascade_capacity():
    with pytest.raises(CapacityError):
        cascade_resolution_probability(9, 1)
