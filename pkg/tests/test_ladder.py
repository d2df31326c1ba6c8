import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import ladder_dense, site_op
from spinbus.errors import DomainError
from spinbus.ladder import (
    LadderSpec,
    apply_fluctuations,
    build_hamiltonian,
    incident_bonds,
    swap_chains,
)


@settings(max_examples=15, deadline=None)
@given(L=st.integers(2, 3), J=st.floats(0.1, 20), delta=st.floats(0.01, 1.0))
def test_hamiltonian_matches_kron_reference(L, J, delta):
    H = build_hamiltonian(LadderSpec(L, J, delta))
    ref = ladder_dense(L, J, delta)
    assert np.allclose(H.to_sparse().toarray(), ref, atol=1e-12)


def test_matrix_free_apply_matches_sparse():
    H = build_hamiltonian(LadderSpec(3, 2.0, 0.3, {(1, 2): 0.4}))
    rng = np.random.default_rng(3)
    v = rng.standard_normal((H.dim, 3))
    assert np.allclose(H.apply(v), H.to_sparse() @ v, atol=1e-12)
    assert np.allclose(H.apply(v[:, 0]), H.to_sparse() @ v[:, 0], atol=1e-12)


def test_hermitian_and_conserves_sz():
    H = build_hamiltonian(LadderSpec(3, 1.0, 0.5)).to_sparse().toarray()
    assert np.allclose(H, H.conj().T)
    Sz = sum(site_op(b, "z", 6) for b in range(6))
    assert np.allclose(H @ Sz, Sz @ H)


def test_bond_override_enters_only_that_bond():
    over = {(2, 1): 0.7}
    H = build_hamiltonian(LadderSpec(3, 1.0, 0.2, over)).to_sparse().toarray()
    assert np.allclose(H, ladder_dense(3, 1.0, 0.2, over))


def test_norm_bound_is_an_upper_bound():
    H = build_hamiltonian(LadderSpec(3, 1.5, 0.4))
    assert np.abs(np.linalg.eigvalsh(H.to_sparse().toarray())).max() <= H.norm_bound


@pytest.mark.parametrize(
    "kwargs",
    [dict(L=1), dict(L=2, J=0.0), dict(L=2, delta=0.0), dict(L=2, delta=1.2),
     dict(L=2, bond_overrides={(1, 2): 0.5}), dict(L=3, bond_overrides={(3, 1): 0.5}),
     dict(L=3, bond_overrides={(1, 1): -0.1})],
)
def test_spec_rejects_invalid(kwargs):
    with pytest.raises(DomainError):
        LadderSpec(**kwargs)


def test_spec_is_hashable_and_canonical():
    a = LadderSpec(3, 1.0, 0.5, {(2, 1): 0.3, (1, 2): 0.4})
    b = LadderSpec(3, 1.0, 0.5, [((1, 2), 0.4), ((2, 1), 0.3)])
    assert a == b and hash(a) == hash(b)


def test_incident_bonds():
    assert incident_bonds(1, 4) == [(1, 1)]  # end node
    assert incident_bonds(3, 4) == [(2, 1), (2, 2)]  # interior node on chain 2
    assert incident_bonds(8, 4) == [(1, 3)]  # node 8 = (1, 4)


def test_fluctuations_touch_incident_bonds_only():
    spec = LadderSpec(4, 10.0, 0.2)
    f = apply_fluctuations(spec, 1, 0.01, 3, -0.02)
    assert f.overrides == pytest.approx({(1, 1): 0.202, (2, 1): 0.196, (2, 2): 0.196})
    assert apply_fluctuations(spec, 1, 0.0, 2, 0.0) is spec


def test_fluctuation_errors():
    spec = LadderSpec(3, 1.0, 0.5)
    with pytest.raises(DomainError):
        apply_fluctuations(spec, 1, 0.2, 2, 0.0)
    with pytest.raises(DomainError):
        apply_fluctuations(spec, 2, 0.01, 2, 0.01)
    with pytest.raises(DomainError):
        # nodes 1=(1,1) and 4=(1,2) share bond (1,1)
        apply_fluctuations(spec, 1, 0.01, 4, -0.01)
    assert apply_fluctuations(spec, 1, 0.01, 4, 0.01).overrides[(1, 1)] == pytest.approx(0.505)


def test_chain_swap_preserves_spectrum():
    spec = LadderSpec(3, 1.0, 0.3, {(1, 1): 0.6})
    e1 = np.linalg.eigvalsh(build_hamiltonian(spec).to_sparse().toarray())
    e2 = np.linalg.eigvalsh(build_hamiltonian(swap_chains(spec)).to_sparse().toarray())
    assert swap_chains(spec).overrides == {(2, 1): 0.6}
    assert np.allclose(e1, e2)
