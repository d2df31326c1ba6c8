import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import spinbus.effective as eff
from _oracles import gamma_dense
from spinbus.effective import (
    BusCouplings,
    CorrectionVectors,
    antiferro_ferro_profile,
    c_eff,
    compute_coupling,
    correlator,
    effective_hamiltonian,
    length_sweep,
    two_qubit_xxz,
)
from spinbus.errors import ConvergenceError, DegenerateGroundStateError, DomainError
from spinbus.ladder import LadderSpec, build_hamiltonian
from spinbus.spectra import full_spectrum, remix_degenerate


@settings(max_examples=12, deadline=None)
@given(L=st.sampled_from([2, 3]), delta=st.floats(0.05, 1.0), data=st.data())
def test_sum_backend_matches_dense_reference(L, delta, data):
    m = data.draw(st.integers(1, 2 * L))
    n = data.draw(st.integers(1, 2 * L))
    axis = data.draw(st.sampled_from("xyz"))
    bus = BusCouplings(LadderSpec(L, 2.0, delta), "sum")
    assert bus.gamma(m, n, axis) == pytest.approx(gamma_dense(L, 2.0, delta, m, n, axis), abs=1e-12)


@pytest.mark.parametrize("L,delta", [(3, 0.4), (4, 0.2), (4, 1.0)])
def test_backends_agree(L, delta):
    spec = LadderSpec(L, 1.0, delta)
    a, b = BusCouplings(spec, "sum"), BusCouplings(spec, "resolvent")
    for n in range(1, 2 * L + 1):
        for axis in "xz":
            assert a.gamma(1, n, axis) == pytest.approx(b.gamma(1, n, axis), abs=1e-10)


@pytest.mark.parametrize("method", ["sum", "resolvent"])
@pytest.mark.parametrize("J", [1.0, 10.0])
def test_isotropic_two_rung_values(method, J):
    bus = BusCouplings(LadderSpec(2, J, 1.0), method)
    for axis in "xyz":
        assert bus.gamma(1, 2, axis) == pytest.approx(1 / (6 * J), abs=1e-12)
        assert bus.gamma(1, 3, axis) == pytest.approx(-1 / (8 * J), abs=1e-12)
        assert bus.gamma(1, 4, axis) == pytest.approx(1 / (6 * J), abs=1e-12)


@pytest.mark.parametrize("delta", [0.2, 0.7])
def test_cross_axis_terms_vanish(delta):
    bus = BusCouplings(LadderSpec(3, 1.0, delta))
    for a, b in [("x", "y"), ("x", "z"), ("y", "z"), ("z", "x")]:
        assert abs(bus.correlator(1, 4, a, b)) < 1e-12


def test_degenerate_levels_do_not_change_gamma():
    H = build_hamiltonian(LadderSpec(2, 1.0, 1.0))
    s = full_spectrum(H)
    mixed = remix_degenerate(s, rng=11)
    for n in (2, 3, 4):
        assert correlator(mixed, 1, n, "x", "x") == pytest.approx(correlator(s, 1, n, "x", "x"), abs=1e-13)


def test_degenerate_ground_state_refused():
    H = build_hamiltonian(LadderSpec(2, 1.0, 1.0))
    with pytest.raises(DegenerateGroundStateError):
        CorrectionVectors(H, -2.0, np.ones(16), gap=0.0)


def test_solver_failure_is_reported(monkeypatch):
    monkeypatch.setattr(eff, "cg", lambda op, b, **kw: (np.zeros_like(b), 7))
    bus = BusCouplings(LadderSpec(3, 1.0, 0.5), "resolvent")
    with pytest.raises(ConvergenceError):
        bus.gamma(1, 2, "x")


def test_unknown_backend():
    with pytest.raises(DomainError):
        BusCouplings(LadderSpec(2), "lanczos")


def test_effective_hamiltonian_structure():
    c = compute_coupling(LadderSpec(2, 1.0, 0.5), 1, 2, J_A=0.1, J_B=0.2)
    H, const = effective_hamiltonian(c)
    assert np.allclose(H, H.conj().T)
    jx, jy, jz = c.exchange
    assert jx == pytest.approx(2 * 0.1 * 0.2 * c.gamma_x)
    assert jx == pytest.approx(jy)
    # XXZ on two spin-1/2: eigenvalues (jz/4 twice, -jz/4 +- jx/2)
    want = sorted([jz / 4, jz / 4, -jz / 4 + jx / 2, -jz / 4 - jx / 2])
    assert np.allclose(np.linalg.eigvalsh(H), want)
    assert const == pytest.approx(c.c_eff)
    assert c_eff(c.gamma_mm, c.gamma_nn, 0.2, 0.4) == pytest.approx(4 * const)


def test_two_qubit_xxz_commutes_with_total_z():
    H = two_qubit_xxz(0.3, 0.8)
    Z = np.diag([1, 0, 0, -1])
    assert np.allclose(H @ Z, Z @ H)


def test_profile_signs_alternate():
    rows = antiferro_ferro_profile(LadderSpec(4, 10.0, 0.2), method="resolvent")
    assert [r.n for r in rows] == list(range(2, 9))
    for r in rows:
        assert r.sign == (1 if r.distance % 2 else -1)


def test_profile_decreases_within_each_parity():
    rows = antiferro_ferro_profile(LadderSpec(6, 10.0, 0.2), method="resolvent")
    for parity in (0, 1):
        mags = [abs(r.gamma_x) for r in rows if r.distance % 2 == parity]
        assert all(b < a for a, b in zip(mags, mags[1:]))


def test_length_sweep_rows():
    rows = length_sweep([2, 3], J=10.0, delta=0.2, J_A=1.0, J_B=0.5)
    assert [r[0] for r in rows] == [2, 3]
    assert rows[0][2] == pytest.approx(2 * 0.5 * rows[0][1])
