"""Brute-force reference: the bus plus one or two attached qubits, solved exactly.

Tensor order is bus first, then qubit A, then qubit B. Each qubit is a
spin-1/2 with ``|0>`` = up, coupled as ``J_A tau_A . s_m``. A local field
``b`` on a qubit contributes ``-b . tau``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh, expm_multiply

from .effective import PAULI, BusCouplings, effective_hamiltonian
from .errors import BudgetError, DomainError, WeakCouplingError
from .gates import single_qubit_pulse, single_qubit_rotation
from .hilbert import AXES, as_site
from .ladder import HamiltonianOp, LadderSpec, build_hamiltonian

DENSE_BUDGET = 2**14
EIGH_LIMIT = 4096
WEAK_COUPLING_RATIO = 0.2


@dataclass(frozen=True)
class Attachment:
    qubit: str
    node: int
    coupling: float
    field: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.qubit not in ("A", "B"):
            raise DomainError(f"qubit must be 'A' or 'B', got {self.qubit!r}")
        if len(self.field) != 3:
            raise DomainError("field must be a 3-vector")


def spin_matrix(site, axis: str, L: int) -> sp.csr_matrix:
    """Sparse ``s^axis`` at one bus site, in the full ``4**L`` product basis."""
    bit = as_site(site, L).bit(L)
    states = np.arange(4**L)
    up = (states >> bit) & 1 == 1
    if axis == "z":
        return sp.diags(np.where(up, 0.5, -0.5)).tocsr()
    if axis == "x":
        vals = np.full(len(states), 0.5, dtype=complex)
    elif axis == "y":
        vals = np.where(up, -0.5j, 0.5j)
    else:
        raise DomainError(f"axis must be one of {AXES}")
    return sp.csr_matrix((vals, (states, states ^ (1 << bit))), shape=(4**L, 4**L))


@dataclass
class FullSystem:
    """``H = H_0 + H_in`` on bus (x) qubits, as a sparse matrix."""

    spec: LadderSpec
    attachments: tuple[Attachment, ...]
    matrix: sp.csr_matrix
    bus: HamiltonianOp
    _eig: tuple | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return len(self.attachments)

    @property
    def bus_dim(self) -> int:
        return self.bus.dim

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def eigh(self):
        if self.dim > EIGH_LIMIT:
            raise BudgetError(f"dense eigendecomposition above {EIGH_LIMIT} states")
        if self._eig is None:
            self._eig = np.linalg.eigh(self.dense())
        return self._eig

    def lowest(self, k: int) -> np.ndarray:
        if self.dim <= EIGH_LIMIT:
            return self.eigh()[0][:k]
        v0 = np.random.default_rng(7).standard_normal(self.dim)
        return np.sort(eigsh(self.matrix, k=k, which="SA", tol=1e-14, v0=v0)[0])

    def total_sz(self) -> sp.csr_matrix:
        L = self.spec.L
        bus = sum(spin_matrix((c, r), "z", L) for c in (1, 2) for r in range(1, L + 1))
        tz = sp.csr_matrix(PAULI["z"].real / 2)
        qdim = 2**self.n_qubits
        total = sp.kron(bus, sp.identity(qdim))
        for slot in range(self.n_qubits):
            total = total + sp.kron(sp.identity(self.bus_dim), _qubit_factor(tz, slot, self.n_qubits))
        return total.tocsr()


def _qubit_factor(op, slot: int, n_qubits: int):
    factors = [sp.identity(2)] * n_qubits
    factors[slot] = sp.csr_matrix(op)
    out = factors[0]
    for f in factors[1:]:
        out = sp.kron(out, f)
    return out


def full_hamiltonian(spec: LadderSpec, attachments=(), max_dim: int = DENSE_BUDGET) -> FullSystem:
    attachments = tuple(sorted(attachments, key=lambda a: a.qubit))
    if len({a.qubit for a in attachments}) != len(attachments):
        raise DomainError("each qubit may be attached only once")
    n_q = len(attachments)
    bus = build_hamiltonian(spec)
    dim = bus.dim * 2**n_q
    if dim > max_dim:
        raise BudgetError(f"full system of dimension {dim} exceeds budget {max_dim}")
    for a in attachments:
        if abs(a.coupling) > WEAK_COUPLING_RATIO * spec.J:
            warnings.warn(f"coupling {a.coupling} of qubit {a.qubit} is not weak compared with J={spec.J}")

    H = sp.kron(bus.to_sparse(), sp.identity(2**n_q), format="csr").astype(complex)
    eye_bus = sp.identity(bus.dim)
    for slot, a in enumerate(attachments):
        for axis in AXES:
            tau = _qubit_factor(PAULI[axis] / 2, slot, n_q)
            if a.coupling:
                H = H + a.coupling * sp.kron(spin_matrix(a.node, axis, spec.L), tau)
            b = a.field[AXES.index(axis)]
            if b:
                H = H - b * sp.kron(eye_bus, tau)
    return FullSystem(spec, attachments, H.tocsr(), bus)


# --------------------------------------------------------------- evolution


def evolve_exact(H, initial: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i H t) |initial>``; ``H`` may be a FullSystem, HamiltonianOp or array."""
    initial = np.asarray(initial, dtype=complex)
    if isinstance(H, FullSystem):
        if H.dim <= EIGH_LIMIT:
            e, V = H.eigh()
            return V @ (np.exp(-1j * e * t) * (V.conj().T @ initial))
        return expm_multiply(-1j * t * H.matrix, initial)
    if isinstance(H, HamiltonianOp):
        H = H.to_sparse()
    if sp.issparse(H):
        if H.shape[0] > DENSE_BUDGET:
            raise BudgetError("state space above dense budget")
        H = H.toarray()
    e, V = np.linalg.eigh(H)
    return V @ (np.exp(-1j * e * t) * (V.conj().T @ initial))


def reduced_qubit_state(state: np.ndarray, system: FullSystem, qubit: str = "A") -> np.ndarray:
    """Single-qubit density matrix after tracing out the bus and the other qubit."""
    slots = [a.qubit for a in system.attachments]
    if qubit not in slots:
        raise DomainError(f"qubit {qubit} is not attached")
    psi = state.reshape((system.bus_dim,) + (2,) * system.n_qubits)
    keep = 1 + slots.index(qubit)
    psi = np.moveaxis(psi, keep, 0).reshape(2, -1)
    return psi @ psi.conj().T


# -------------------------------------------------------------- validation


@dataclass(frozen=True)
class EffectiveValidation:
    exact_levels: np.ndarray
    effective_levels: np.ndarray
    exact_splittings: np.ndarray
    effective_splittings: np.ndarray
    abs_error: float
    rel_error: float
    bus_gap: float

    def ok(self, tol: float = 0.05) -> bool:
        return self.rel_error <= tol

    def degeneracy_pattern(self, tol: float | None = None) -> list[int]:
        """Multiplicities of the exact quadruplet, lowest level first."""
        levels = self.exact_levels
        tol = tol if tol is not None else 1e-3 * max(self.exact_splittings.max(), 1e-300)
        pattern = [1]
        for a, b in zip(levels[:-1], levels[1:]):
            if b - a <= tol:
                pattern[-1] += 1
            else:
                pattern.append(1)
        return pattern


def validate_effective_spectrum(spec: LadderSpec, m, n, J_A, J_B, method="sum") -> EffectiveValidation:
    """Lowest four exact levels of bus + 2 qubits against ``e0 + C_eff + H_eff``."""
    bus = BusCouplings(spec, method)
    coupling = bus.coupling(m, n, J_A, J_B)
    H_int, ceff = effective_hamiltonian(coupling)
    eff = np.sort(bus.ground.energy + ceff + np.linalg.eigvalsh(H_int))

    system = full_hamiltonian(spec, [Attachment("A", m, J_A), Attachment("B", n, J_B)])
    exact = system.lowest(5)
    if exact[4] - bus.ground.energy < bus.gap / 2:
        raise WeakCouplingError(
            f"fifth exact level {exact[4]:.6g} within half a bus gap of e0={bus.ground.energy:.6g}: "
            "the qubit quadruplet crosses bus excitations"
        )
    exact = exact[:4]
    ds_exact = exact - exact[0]
    ds_eff = eff - eff[0]
    abs_err = float(np.max(np.abs(ds_exact - ds_eff)))
    scale = float(np.max(np.abs(ds_eff)))
    rel = abs_err / scale if scale > 0 else (0.0 if abs_err < 1e-12 else np.inf)
    return EffectiveValidation(exact, eff, ds_exact, ds_eff, abs_err, rel, bus.gap)


class ScalingCheck(NamedTuple):
    rel_error: float
    rel_error_halved: float
    ratio: float


def coupling_scaling(spec: LadderSpec, m, n, J_A, J_B=None, factor=2.0, method="sum") -> ScalingCheck:
    """How much the effective-model discrepancy drops when both couplings shrink."""
    J_B = J_A if J_B is None else J_B
    big = validate_effective_spectrum(spec, m, n, J_A, J_B, method).rel_error
    small = validate_effective_spectrum(spec, m, n, J_A / factor, J_B / factor, method).rel_error
    return ScalingCheck(big, small, big / small)


class ChannelCheck(NamedTuple):
    theta: float
    duration: float
    infidelity: float


_PROBES = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "+i": np.array([1, 1j], dtype=complex) / np.sqrt(2),
}


def single_qubit_channel(spec: LadderSpec, node, J_A, axis: str, theta: float, b_magnitude=None) -> ChannelCheck:
    """Worst-case infidelity of the exact reduced qubit dynamics against ``R^axis(theta)``.

    Qubit A sits on ``node`` in a field along ``axis``; the bus starts in its
    ground state. Probes are the four states ``|0>, |1>, |+>, |+i>``.
    """
    if axis not in AXES:
        raise DomainError(f"axis must be one of {AXES}")
    b = spec.J / 50 if b_magnitude is None else b_magnitude
    duration = abs(theta / b)
    b = -np.sign(theta) * abs(b) if theta else b
    pulse = single_qubit_pulse(axis, b, duration, J_A, (0.0, 0.0, 0.0))
    field = tuple(b if a == axis else 0.0 for a in AXES)
    system = full_hamiltonian(spec, [Attachment("A", node, J_A, field)])
    ground = BusCouplings(spec).ground.state
    target = single_qubit_rotation(axis, pulse.theta)
    worst = 0.0
    for probe in _PROBES.values():
        psi = evolve_exact(system, np.kron(ground, probe), duration)
        rho = reduced_qubit_state(psi, system, "A")
        want = target @ probe
        worst = max(worst, 1 - float(np.real(want.conj() @ rho @ want)))
    return ChannelCheck(float(pulse.theta), float(duration), worst)

