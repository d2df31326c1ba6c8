"""Second-order effective exchange between two qubits attached to the bus.

The central quantity is

    gamma^a_{m,n} = - sum_{k>0} <0|s^a_m|k><k|s^a_n|0> / (e_k - e_0),

evaluated either as an explicit sum over the full spectrum (``"sum"``) or by
solving one shifted linear system per node and axis (``"resolvent"``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .errors import ConvergenceError, DegenerateGroundStateError, DomainError
from .hilbert import AXES, apply_spin, as_site, build_sector
from .ladder import LadderSpec, build_hamiltonian
from .spectra import GroundAndGap, SpectrumResult, degeneracy_tol, full_spectrum, ground_and_gap

METHODS = ("sum", "resolvent")
IMAG_TOL = 1e-10

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _require_gap(gap: float, e0: float):
    if gap <= degeneracy_tol(e0):
        raise DegenerateGroundStateError(f"ground state is degenerate (gap {gap:.3e})")


# ------------------------------------------------------------ spectrum sum


def correlator(spectrum: SpectrumResult, m, n, alpha: str, beta: str) -> complex:
    """``-sum_k <0|s^alpha_m|k><k|s^beta_n|0> / (e_k - e_0)`` over excited states."""
    L = spectrum.L
    _require_gap(spectrum.gap, spectrum.ground_energy)
    psi0 = spectrum.ground_state
    wm = apply_spin(as_site(m, L), alpha, psi0, L)
    wn = apply_spin(as_site(n, L), beta, psi0, L)
    e0 = spectrum.ground_energy
    g_sz, g_col = spectrum.ground_index
    total = 0j
    for sz, block in spectrum.blocks.items():
        members = build_sector(L, sz).members
        V = block.vectors
        cm = V.conj().T @ wm[members]  # <k|s_m|0>
        cn = V.conj().T @ wn[members]
        denom = block.energies - e0
        keep = np.ones(len(denom), dtype=bool)
        if sz == g_sz:
            keep[g_col] = False
        total += np.sum(cm[keep].conj() * cn[keep] / denom[keep])
    return -complex(total)


def _real(value: complex, what: str) -> float:
    if abs(value.imag) > IMAG_TOL:
        raise ArithmeticError(f"{what} has imaginary part {value.imag:.3e}")
    return float(value.real)


def gamma_spectrum_sum(spectrum: SpectrumResult, m, n, axis: str) -> float:
    return _real(correlator(spectrum, m, n, axis, axis), f"gamma^{axis}")


# --------------------------------------------------------------- resolvent


class CorrectionVectors:
    """Solves ``(H - e0) x = Q s^a_n |0>`` on the complement of the ground state.

    Solutions are cached per ``(node, axis)``, so a whole row of gammas costs
    one linear solve per axis.
    """

    def __init__(self, H, e0: float, psi0: np.ndarray, gap: float | None = None, rtol: float = 1e-13):
        if gap is not None:
            _require_gap(gap, e0)
        self.H = H
        self.e0 = e0
        self.psi0 = psi0 / np.linalg.norm(psi0)
        self.rtol = rtol
        self._cache: dict[tuple, np.ndarray] = {}

    def _project(self, x):
        return x - self.psi0 * np.vdot(self.psi0, x)

    def solve(self, n, axis: str) -> np.ndarray:
        site = as_site(n, self.H.L)
        key = (site, axis)
        if key in self._cache:
            return self._cache[key]
        rhs = self._project(apply_spin(site, axis, self.psi0, self.H.L))
        dtype = complex if np.iscomplexobj(rhs) else float
        op = LinearOperator(
            (self.H.dim, self.H.dim),
            matvec=lambda x: self._project(self.H.apply(self._project(x)) - self.e0 * x),
            dtype=dtype,
        )
        bnorm = np.linalg.norm(rhs)
        if bnorm == 0:
            x = np.zeros_like(rhs)
        else:
            x, info = cg(op, rhs, rtol=self.rtol, atol=0.0, maxiter=20 * self.H.dim)
            x = self._project(x)
            resid = np.linalg.norm(op.matvec(x) - rhs)
            if info != 0 or resid > 1e3 * self.rtol * bnorm:
                raise ConvergenceError(f"CG failed for node {n}, axis {axis}", resid)
        self._cache[key] = x
        return x

    def gamma(self, m, n, axis: str, beta: str | None = None) -> complex:
        beta = beta or axis
        x = self.solve(n, beta)
        wm = apply_spin(as_site(m, self.H.L), axis, self.psi0, self.H.L)
        return -complex(np.vdot(wm, x))


def gamma_resolvent(H, e0: float, psi0: np.ndarray, m, n, axis: str, rtol: float = 1e-13) -> float:
    return _real(CorrectionVectors(H, e0, psi0, rtol=rtol).gamma(m, n, axis), f"gamma^{axis}")


# --------------------------------------------------------- coupling records


@dataclass(frozen=True)
class EffectiveCoupling:
    m: int
    n: int
    gamma_x: float
    gamma_y: float
    gamma_z: float
    gamma_mm: tuple[float, float, float]
    gamma_nn: tuple[float, float, float]
    J_A: float
    J_B: float
    method: str
    context: dict = field(default_factory=dict, compare=False)

    @property
    def delta_eff(self) -> float:
        return self.gamma_z / self.gamma_x

    @property
    def c_eff(self) -> float:
        return c_eff(self.gamma_mm, self.gamma_nn, self.J_A, self.J_B)

    @property
    def exchange(self) -> tuple[float, float, float]:
        """``J^a_{m,n} = 2 J_A J_B gamma^a`` for a = x, y, z."""
        k = 2 * self.J_A * self.J_B
        return k * self.gamma_x, k * self.gamma_y, k * self.gamma_z


def c_eff(gamma_mm, gamma_nn, J_A: float, J_B: float) -> float:
    # J_A**2 / 4 (not J_A / 4): the constant is second order in the coupling
    return J_A**2 / 4 * sum(gamma_mm) + J_B**2 / 4 * sum(gamma_nn)


class BusCouplings:
    """Lazily evaluated gamma coefficients of one bus configuration."""

    def __init__(self, spec: LadderSpec, method: str = "sum"):
        if method not in METHODS:
            raise DomainError(f"method must be one of {METHODS}, got {method!r}")
        self.spec = spec
        self.method = method
        self.H = build_hamiltonian(spec)
        self._spectrum = None
        self._ground = None
        self._solver = None

    @property
    def spectrum(self) -> SpectrumResult:
        if self._spectrum is None:
            self._spectrum = full_spectrum(self.H)
        return self._spectrum

    @property
    def ground(self):
        """``(energy, state, gap)`` from the backend in use."""
        if self._ground is None:
            if self.method == "sum":
                s = self.spectrum
                self._ground = GroundAndGap(s.ground_energy, s.ground_state, s.gap)
            else:
                self._ground = ground_and_gap(self.H)
        return self._ground

    @property
    def gap(self) -> float:
        return self.ground.gap

    @property
    def solver(self) -> CorrectionVectors:
        if self._solver is None:
            gs = self.ground
            self._solver = CorrectionVectors(self.H, gs.energy, gs.state, gap=gs.gap)
        return self._solver

    def correlator(self, m, n, alpha: str, beta: str) -> complex:
        if self.method == "sum":
            return correlator(self.spectrum, m, n, alpha, beta)
        return self.solver.gamma(m, n, alpha, beta)

    def gamma(self, m, n, axis: str) -> float:
        if axis not in AXES:
            raise DomainError(f"axis must be one of {AXES}")
        return _real(self.correlator(m, n, axis, axis), f"gamma^{axis}")

    def gammas(self, m, n) -> tuple[float, float, float]:
        return tuple(self.gamma(m, n, a) for a in AXES)

    def coupling(self, m, n, J_A: float = 1.0, J_B: float = 1.0) -> EffectiveCoupling:
        gx, gy, gz = self.gammas(m, n)
        return EffectiveCoupling(
            m=m, n=n, gamma_x=gx, gamma_y=gy, gamma_z=gz,
            gamma_mm=self.gammas(m, m), gamma_nn=self.gammas(n, n),
            J_A=J_A, J_B=J_B, method=self.method,
            context={"L": self.spec.L, "J": self.spec.J, "delta": self.spec.delta,
                     "overrides": self.spec.overrides},
        )


def compute_coupling(spec: LadderSpec, m, n, J_A=1.0, J_B=1.0, method="sum") -> EffectiveCoupling:
    return BusCouplings(spec, method).coupling(m, n, J_A, J_B)


# ------------------------------------------------------ two-qubit operator


def tau_pair(a: str, b: str) -> np.ndarray:
    """``tau^a_A tau^b_B`` on the qubit pair, qubit A being the left factor."""
    return np.kron(PAULI[a], PAULI[b]) / 4


def two_qubit_xxz(jx: float, jz: float, jy: float | None = None) -> np.ndarray:
    jy = jx if jy is None else jy
    return jx * tau_pair("x", "x") + jy * tau_pair("y", "y") + jz * tau_pair("z", "z")


def effective_hamiltonian(coupling: EffectiveCoupling, J_A: float | None = None, J_B: float | None = None):
    """Interaction matrix ``2 J_A J_B [g^x (XX + YY) + g^z ZZ]`` (tau = sigma/2) and ``C_eff``.

    The constant is returned separately and is not added to the matrix.
    """
    J_A = coupling.J_A if J_A is None else J_A
    J_B = coupling.J_B if J_B is None else J_B
    k = 2 * J_A * J_B
    H = two_qubit_xxz(k * coupling.gamma_x, k * coupling.gamma_z)
    return H, c_eff(coupling.gamma_mm, coupling.gamma_nn, J_A, J_B)


# ------------------------------------------------------------------ sweeps


class ProfileRow(NamedTuple):
    n: int
    distance: int
    gamma_x: float
    J_x: float
    sign: int


def antiferro_ferro_profile(spec: LadderSpec, m=1, J_A=1.0, J_B=1.0, method="sum") -> list[ProfileRow]:
    """``gamma^x_{m,n}`` for every other node ``n``, ordered by node label."""
    bus = BusCouplings(spec, method)
    rows = []
    for n in range(1, 2 * spec.L + 1):
        if n == m:
            continue
        g = bus.gamma(m, n, "x")
        rows.append(ProfileRow(n, abs(n - m), g, 2 * J_A * J_B * g, int(np.sign(g))))
    return rows


def anisotropy_sweep(deltas, L=2, J=10.0, m=1, n=2, J_A=1.0, J_B=1.0, method="sum"):
    return [compute_coupling(LadderSpec(L, J, d), m, n, J_A, J_B, method) for d in deltas]


def length_sweep(lengths, J=10.0, delta=0.2, m=1, n=2, J_A=1.0, J_B=1.0, method="sum"):
    out = []
    for L in lengths:
        g = BusCouplings(LadderSpec(L, J, delta), method).gamma(m, n, "x")
        out.append((L, g, 2 * J_A * J_B * g))
    return out
