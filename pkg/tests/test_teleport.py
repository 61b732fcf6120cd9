import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fockteleport.fock import QuantumState, schmidt_coefficients
from fockteleport.solver import preferred_solution
from fockteleport.teleport import (
    QuditState,
    UnsolvedSourceError,
    bob_amplitudes,
    correction,
    destroyed_original_check,
    ideal_bell_measurement,
    run_trials,
    teleport_once,
)
from fockteleport.vsource import VSchemeSpec, bell_amplitudes, source_efficiency


@pytest.fixture(scope="module")
def spec1():
    return VSchemeSpec(1, preferred_solution(1, target=(0.211325,)).angles)


@pytest.fixture(scope="module")
def spec2():
    return VSchemeSpec(2, preferred_solution(2).angles)


def test_qudit_validation():
    with pytest.raises(ValueError):
        QuditState([1.0, 1.0])
    psi = QuditState.random(5, np.random.default_rng(1))
    assert psi.dimension == 5
    assert abs(np.linalg.norm(psi.coefficients) - 1) < 1e-14


def test_basis_teleportee(spec1):
    rec = teleport_once(QuditState.basis(3, 0), spec1)
    assert rec.fidelity_after_correction > 1 - 1e-12
    assert abs(rec.herald_probability - 1 / 9) < 1e-12


def test_uniform_superposition(spec1):
    rec = teleport_once(QuditState(np.ones(3) / math.sqrt(3)), spec1)
    assert abs(rec.fidelity_after_correction - 1) < 1e-9


def test_bob_amplitudes_follow_projection_algebra(spec1):
    # Bob's level j carries psi_j * conj(A_{N-j}) * b_j with A the unnormalized
    # source amplitudes and b = A / |A|: no index reversal
    psi = QuditState.random(3, np.random.default_rng(5))
    raw = bob_amplitudes(psi.coefficients, spec1, apply_correction=False)
    A = bell_amplitudes(spec1).amplitudes
    b = A / np.linalg.norm(A)
    assert np.allclose(raw, psi.coefficients * np.conj(A[::-1]) * b, atol=1e-14)


def test_correction_identity_for_positive_resource():
    assert np.allclose(correction(np.ones(5) / math.sqrt(5)), np.ones(5))


def test_correction_for_signed_source(spec1):
    amps = bell_amplitudes(spec1).normalized()
    assert [int(np.sign(a.real)) for a in amps] == [-1, -1, 1]
    assert np.allclose(correction(amps), [-1, 1, -1])


def test_wrong_correction_loses_fidelity(spec1):
    psi = QuditState.random(3, np.random.default_rng(2))
    rec = teleport_once(psi, spec1, apply_correction=False)
    assert rec.fidelity_before_correction < 0.99
    assert rec.fidelity_after_correction == rec.fidelity_before_correction


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_qutrits(seed):
    spec = VSchemeSpec(1, (math.acos(math.sqrt(0.5 - math.sqrt(3) / 6)),))
    rec = teleport_once(QuditState.random(3, np.random.default_rng(seed)), spec)
    assert rec.fidelity_after_correction > 1 - 1e-9
    assert abs(rec.herald_probability - 1 / 9) < 1e-10


def test_two_photon_source_teleports(spec2):
    records = run_trials(5, spec2, 100, seed=11)
    p = source_efficiency(spec2) / 25
    for rec in records:
        assert rec.fidelity_after_correction >= 1 - 1e-9
        assert abs(rec.herald_probability - p) < 1e-10 * max(1, p)
        assert rec.alice_trace_distance < 1e-10


def test_linearity(spec2):
    rng = np.random.default_rng(4)
    a = rng.normal(size=5) + 1j * rng.normal(size=5)
    b = rng.normal(size=5) + 1j * rng.normal(size=5)
    alpha, beta = 0.3 - 0.2j, -1.1 + 0.5j
    lhs = bob_amplitudes(alpha * a + beta * b, spec2)
    rhs = alpha * bob_amplitudes(a, spec2) + beta * bob_amplitudes(b, spec2)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_dimension_mismatch(spec1):
    with pytest.raises(ValueError):
        teleport_once(QuditState.basis(5, 0), spec1)


def test_unsolved_source_rejected():
    with pytest.raises(UnsolvedSourceError):
        teleport_once(QuditState.basis(3, 0), VSchemeSpec(1, (0.3,)))


def test_record_json(spec1, validate):
    rec = teleport_once(QuditState.basis(3, 1), spec1)
    validate("teleport_record", rec.to_dict())


@pytest.mark.parametrize("d", [2, 3, 5])
def test_ideal_bell_basis(d):
    states = ideal_bell_measurement(d)
    assert len(states) == d * d
    keys = sorted({k for _, s in states for k in s.terms})
    index = {k: i for i, k in enumerate(keys)}
    mat = np.zeros((len(states), len(keys)), dtype=complex)
    for r, (_, s) in enumerate(states):
        for k, a in s.terms.items():
            mat[r, index[k]] = a
        assert np.allclose(schmidt_coefficients(s), [1 / math.sqrt(d)] * d, atol=1e-12)
    assert np.allclose(mat @ mat.conj().T, np.eye(d * d), atol=1e-12)
    # completeness on the d x d two-mode block
    assert len(keys) == d * d
    assert np.allclose(mat.conj().T @ mat, np.eye(d * d), atol=1e-12)


def test_source_state_is_first_bell_state():
    _, phi00 = ideal_bell_measurement(3)[0]
    assert phi00.allclose(QuantumState(2, {(2, 0): 1, (1, 1): 1, (0, 2): 1}) * (1 / math.sqrt(3)))


@pytest.mark.parametrize("seed", range(5))
def test_original_is_destroyed(spec1, seed):
    psi = QuditState.random(3, np.random.default_rng(seed))
    assert destroyed_original_check(psi, spec1) < 1e-10


def test_original_destroyed_qubit():
    resource = QuantumState(2, {(1, 0): 1, (0, 1): 1}) * (1 / math.sqrt(2))
    psi = QuditState.random(2, np.random.default_rng(9))
    assert destroyed_original_check(psi, resource=resource) < 1e-10


def test_product_measurement_leaves_original_pure(spec1):
    psi = QuditState.random(3, np.random.default_rng(3))
    product = [QuantumState.basis((j, k)) for j in range(3) for k in range(3)]
    assert destroyed_original_check(psi, spec1, measurement=product) > 0.5


def test_product_resource_still_mixed_under_bell_measurement():
    # a maximally entangled projective measurement alone already leaves I/d
    psi = QuditState.random(3, np.random.default_rng(8))
    resource = QuantumState.basis((1, 1))
    assert destroyed_original_check(psi, resource=resource) < 1e-10
