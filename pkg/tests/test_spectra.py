import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import bisect_roots, ladder_dense
from spinbus.errors import BudgetError, DomainError
from spinbus.ladder import LadderSpec, build_hamiltonian
from spinbus.spectra import (
    analytic_spectrum_l2,
    cubic_roots,
    display_ket,
    fit_gap_constant,
    full_spectrum,
    gap_estimate,
    ground_and_gap,
    group_levels,
    remix_degenerate,
)


@pytest.mark.parametrize("L,delta", [(2, 1.0), (2, 0.3), (3, 0.5), (3, 1.0)])
def test_full_spectrum_matches_dense_reference(L, delta):
    H = build_hamiltonian(LadderSpec(L, 1.3, delta))
    s = full_spectrum(H)
    assert np.allclose(s.eigenvalues, np.linalg.eigvalsh(ladder_dense(L, 1.3, delta)), atol=1e-11)
    assert s.max_residual(H) < 1e-11
    assert np.all(np.diff(s.eigenvalues) >= 0)


def test_eigenvectors_embed_correctly():
    H = build_hamiltonian(LadderSpec(3, 1.0, 0.4))
    s = full_spectrum(H)
    for k in (0, 5, 17):
        v = s.vector(k)
        assert np.allclose(H.apply(v), s.eigenvalues[k] * v, atol=1e-11)


def test_dense_budget_enforced():
    with pytest.raises(BudgetError):
        full_spectrum(build_hamiltonian(LadderSpec(4, 1.0, 1.0)), dense_threshold=100)


@pytest.mark.parametrize("L", [3, 4, 5])
def test_iterative_ground_state_matches_dense(L):
    H = build_hamiltonian(LadderSpec(L, 1.0, 0.6))
    s = full_spectrum(H)
    g = ground_and_gap(H)
    assert g.energy == pytest.approx(s.ground_energy, abs=1e-10)
    assert g.gap == pytest.approx(s.gap, abs=1e-9)
    assert abs(abs(np.vdot(g.state, s.ground_state)) - 1) < 1e-9


def test_iterative_path_for_large_blocks():
    H = build_hamiltonian(LadderSpec(6, 1.0, 0.2))  # Sz=0 block has 924 states
    g = ground_and_gap(H)
    assert np.linalg.norm(H.apply(g.state) - g.energy * g.state) < 1e-8
    assert 0 < g.gap < 1.0


def test_group_levels_multiplicities():
    levels = group_levels([-1.0, -1.0 + 1e-13, 0.0, 0.5, 0.5])
    assert [d for _, d in levels] == [2, 1, 2]
    assert [e for e, _ in levels] == pytest.approx([-1.0, 0.0, 0.5], abs=1e-12)


def test_remixing_degenerate_levels_keeps_eigenpairs():
    H = build_hamiltonian(LadderSpec(2, 1.0, 1.0))
    s = remix_degenerate(full_spectrum(H), rng=5)
    for k in range(16):
        v = s.vector(k)
        assert np.allclose(H.apply(v), s.eigenvalues[k] * v, atol=1e-12)


# ------------------------------------------------------------- closed form


def _reference_cubic(delta):
    s = (1 - delta) ** 2
    return lambda x: x**3 + (1 + delta) / 2 * x**2 - (2 + s / 4) * x - s * (1 + delta) / 8


def _symmetric_block(delta):
    """Sz=0 states symmetric under the full flip, solved numerically (units of J)."""
    H = ladder_dense(2, 1.0, delta)
    basis = [
        (display_ket("dudu") + display_ket("udud")) / np.sqrt(2),
        (display_ket("dduu") + display_ket("uudd")) / np.sqrt(2),
        (display_ket("duud") + display_ket("uddu")) / np.sqrt(2),
    ]
    P = np.array(basis).T
    return np.linalg.eigvalsh(P.T @ H @ P)


def test_isotropic_roots_exact():
    assert cubic_roots(1.0) == pytest.approx((-2.0, 0.0, 1.0), abs=1e-12)


@settings(max_examples=40)
@given(delta=st.floats(0.01, 1.0))
def test_cubic_roots_against_bisection_and_projection(delta):
    roots = cubic_roots(delta)
    ref = bisect_roots(_reference_cubic(delta), -3.0, 2.0)
    if len(ref) == 3:
        assert roots == pytest.approx(tuple(ref), abs=1e-11)
    assert roots == pytest.approx(tuple(_symmetric_block(delta)), abs=1e-11)
    assert sum(roots) == pytest.approx(-(1 + delta) / 2, abs=1e-12)


def test_cubic_rejects_out_of_range():
    with pytest.raises(DomainError):
        cubic_roots(0.0)
    with pytest.raises(DomainError):
        cubic_roots(1.5)


@settings(max_examples=25, deadline=None)
@given(delta=st.floats(0.02, 1.0), J=st.floats(0.2, 10.0))
def test_closed_form_eigenpairs(delta, J):
    a = analytic_spectrum_l2(delta, J)
    H = ladder_dense(2, J, delta)
    assert np.allclose(a.eigenvalues(), np.linalg.eigvalsh(H), atol=1e-10 * J)
    vecs = np.array([v for _, v in a.pairs()])
    assert np.allclose(vecs @ vecs.T, np.eye(16), atol=1e-10)
    for e, v in a.pairs():
        assert np.linalg.norm(H @ v - e * v) < 1e-10 * J


def test_isotropic_limit_vector():
    """At delta=1 the middle symmetric state must still be an eigenvector."""
    a = analytic_spectrum_l2(1.0)
    level = next(lv for lv in a.levels if lv.label == "e4")
    v = level.vectors[0]
    assert np.linalg.norm(ladder_dense(2, 1.0, 1.0) @ v - level.energy * v) < 1e-12
    near = analytic_spectrum_l2(1 - 1e-7)
    assert abs(abs(v @ next(lv for lv in near.levels if lv.label == "e4").vectors[0]) - 1) < 1e-6


def test_gap_estimate_and_fit():
    assert gap_estimate(np.inf, 2.0, 3.0) == 1.0
    lengths = np.array([2, 3, 4, 5])
    gaps = np.array([gap_estimate(L, 1.0, 0.8) for L in lengths])
    fit = fit_gap_constant(lengths, gaps, 1.0)
    assert fit.C == pytest.approx(0.8)
    assert np.allclose(fit.residuals, 0, atol=1e-14)


def test_isotropic_middle_coefficients():
    a = analytic_spectrum_l2(1.0)
    assert a.a[1] == 0.0
    assert abs(a.b[1]) == abs(a.c[1]) == 0.5
    assert a.b[1] == -a.c[1]
