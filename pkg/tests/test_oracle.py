import warnings

import numpy as np
import pytest
from scipy.linalg import expm

from _oracles import node_bit, site_op
from spinbus.effective import BusCouplings
from spinbus.errors import BudgetError, DomainError, WeakCouplingError
from spinbus.ladder import LadderSpec
from spinbus.oracle import (
    Attachment,
    coupling_scaling,
    evolve_exact,
    full_hamiltonian,
    reduced_qubit_state,
    single_qubit_channel,
    spin_matrix,
    validate_effective_spectrum,
)


@pytest.mark.parametrize("axis", ["x", "y", "z"])
def test_spin_matrix_matches_reference(axis):
    for n in range(1, 7):
        assert np.allclose(spin_matrix(n, axis, 3).toarray(), site_op(node_bit(n, 3), axis, 6))


def test_full_system_structure():
    spec = LadderSpec(2, 1.0, 0.5)
    sys_ = full_hamiltonian(spec, [Attachment("B", 3, 0.02), Attachment("A", 1, 0.01)])
    assert [a.qubit for a in sys_.attachments] == ["A", "B"]
    assert sys_.dim == 64
    H = sys_.dense()
    assert np.allclose(H, H.conj().T)
    Sz = sys_.total_sz().toarray()
    assert np.allclose(H @ Sz, Sz @ H)


def test_coupling_term_reference():
    spec = LadderSpec(2, 1.0, 1.0)
    bare = full_hamiltonian(spec).dense()
    H = full_hamiltonian(spec, [Attachment("A", 2, 0.05)]).dense()
    tau = {a: m for a, m in zip("xyz", [np.array([[0, 1], [1, 0]]) / 2,
                                        np.array([[0, -1j], [1j, 0]]) / 2,
                                        np.diag([0.5, -0.5])])}
    want = np.kron(bare, np.eye(2)) + 0.05 * sum(
        np.kron(site_op(node_bit(2, 2), a, 4), tau[a]) for a in "xyz"
    )
    assert np.allclose(H, want)


def test_uncoupled_qubits_only_multiply_degeneracy():
    spec = LadderSpec(2, 1.0, 0.3)
    e_bus = np.linalg.eigvalsh(full_hamiltonian(spec).dense())
    e_all = full_hamiltonian(spec, [Attachment("A", 1, 0.0), Attachment("B", 2, 0.0)]).eigh()[0]
    assert np.allclose(e_all, np.sort(np.repeat(e_bus, 4)))


def test_full_system_guards():
    spec = LadderSpec(2)
    with pytest.raises(DomainError):
        full_hamiltonian(spec, [Attachment("A", 1, 0.01), Attachment("A", 2, 0.01)])
    with pytest.raises(BudgetError):
        full_hamiltonian(LadderSpec(3), [Attachment("A", 1, 0.01)], max_dim=64)
    with pytest.raises(DomainError):
        Attachment("C", 1, 0.1)
    with pytest.warns(UserWarning):
        full_hamiltonian(spec, [Attachment("A", 1, 0.5)])


def test_exact_evolution():
    sys_ = full_hamiltonian(LadderSpec(2, 1.0, 0.7), [Attachment("A", 1, 0.05)])
    psi = np.random.default_rng(4).standard_normal(sys_.dim).astype(complex)
    psi /= np.linalg.norm(psi)
    out = evolve_exact(sys_, psi, 3.3)
    assert np.allclose(out, expm(-3.3j * sys_.dense()) @ psi)
    assert np.linalg.norm(out) == pytest.approx(1.0)
    rho = reduced_qubit_state(out, sys_, "A")
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.allclose(rho, rho.conj().T)
    assert np.linalg.eigvalsh(rho).min() > -1e-12
    with pytest.raises(DomainError):
        reduced_qubit_state(out, sys_, "B")


@pytest.mark.parametrize("delta,pattern", [(1.0, [1, 3]), (0.5, None)])
def test_effective_model_against_exact(delta, pattern):
    v = validate_effective_spectrum(LadderSpec(2, 1.0, delta), 1, 2, 0.01, 0.01)
    assert v.ok(0.05)
    if pattern:
        assert v.degeneracy_pattern() == pattern


def test_discrepancy_shrinks_with_coupling():
    s = coupling_scaling(LadderSpec(2, 1.0, 0.5), 1, 2, 0.01)
    assert s.rel_error_halved < s.rel_error
    assert 2.0 <= s.ratio <= 8.0


def test_level_crossing_is_refused():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(WeakCouplingError):
            validate_effective_spectrum(LadderSpec(2, 1.0, 1.0), 1, 2, 2.0, 2.0)


def test_qubit_ground_state_input():
    g = BusCouplings(LadderSpec(2, 1.0, 1.0)).ground
    assert g.energy == pytest.approx(-2.0)
    assert g.gap == pytest.approx(1.0)


@pytest.mark.parametrize("axis", ["x", "z"])
def test_negative_rotation_channel(axis):
    ch = single_qubit_channel(LadderSpec(2, 1.0, 0.5), 3, 0.01, axis, -1.0)
    assert ch.theta == pytest.approx(-1.0)
    assert ch.infidelity < 1e-3
    with pytest.raises(DomainError):
        single_qubit_channel(LadderSpec(2), 1, 0.01, "w", 1.0)
