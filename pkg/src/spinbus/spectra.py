"""Eigensolvers for the bus, plus the closed-form L=2 spectrum.

Energies carry the units of ``J`` that the :class:`LadderSpec` was built with.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import ArpackNoConvergence, eigsh
from scipy.stats import unitary_group

from .errors import BudgetError, ConvergenceError, DomainError
from .hilbert import build_sector
from .ladder import HamiltonianOp

DENSE_THRESHOLD = 4**6
DEGENERACY_RTOL = 1e-9
# sector blocks at or below this size are diagonalized densely even on the iterative path
_SMALL_BLOCK = 600


def degeneracy_tol(energy: float) -> float:
    return DEGENERACY_RTOL * max(1.0, abs(energy))


def group_levels(energies, tol_fn=degeneracy_tol) -> list[tuple[float, int]]:
    """Collapse sorted energies into ``(level, multiplicity)`` pairs."""
    groups: list[list[float]] = []
    for e in np.sort(np.asarray(energies, dtype=float)):
        if groups and abs(e - groups[-1][0]) <= tol_fn(groups[-1][0]):
            groups[-1].append(e)
        else:
            groups.append([e])
    return [(float(np.mean(g)), len(g)) for g in groups]


# --------------------------------------------------------------------- full ED


@dataclass(frozen=True)
class SectorBlock:
    total_sz: int
    energies: np.ndarray
    vectors: np.ndarray  # columns, in the sector basis


@dataclass(frozen=True)
class SpectrumResult:
    """Complete eigensystem of a bus Hamiltonian, stored sector by sector."""

    L: int
    blocks: dict[int, SectorBlock]
    eigenvalues: np.ndarray = field(init=False)
    sector_tags: np.ndarray = field(init=False)
    _local: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        energies = np.concatenate([b.energies for b in self.blocks.values()])
        tags = np.concatenate([np.full(len(b.energies), sz) for sz, b in self.blocks.items()])
        local = np.concatenate([np.arange(len(b.energies)) for b in self.blocks.values()])
        order = np.argsort(energies, kind="stable")
        object.__setattr__(self, "eigenvalues", energies[order])
        object.__setattr__(self, "sector_tags", tags[order])
        object.__setattr__(self, "_local", local[order])

    def __len__(self):
        return len(self.eigenvalues)

    def vector(self, k: int) -> np.ndarray:
        """The ``k``-th eigenvector embedded in the full product space."""
        sz = int(self.sector_tags[k])
        return build_sector(self.L, sz).embed(self.blocks[sz].vectors[:, self._local[k]])

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def ground_state(self) -> np.ndarray:
        return self.vector(0)

    @property
    def ground_index(self) -> tuple[int, int]:
        """``(sector, column)`` locating the ground state inside ``blocks``."""
        return int(self.sector_tags[0]), int(self._local[0])

    @property
    def gap(self) -> float:
        return float(self.eigenvalues[1] - self.eigenvalues[0])

    def levels(self) -> list[tuple[float, int]]:
        return group_levels(self.eigenvalues)

    def max_residual(self, H: HamiltonianOp) -> float:
        worst = 0.0
        for sz, block in self.blocks.items():
            M = H.sector_matrix(sz)
            r = M @ block.vectors - block.vectors * block.energies
            worst = max(worst, float(np.max(np.linalg.norm(r, axis=0), initial=0.0)))
        return worst


def full_spectrum(H: HamiltonianOp, dense_threshold: int = DENSE_THRESHOLD) -> SpectrumResult:
    if H.dim > dense_threshold:
        raise BudgetError(
            f"dimension {H.dim} exceeds dense threshold {dense_threshold}; "
            "use ground_and_gap or the resolvent backend instead"
        )
    blocks = {}
    for sz in range(-H.L, H.L + 1):
        e, v = np.linalg.eigh(H.sector_dense(sz))
        blocks[sz] = SectorBlock(sz, e, v)
    return SpectrumResult(H.L, blocks)


def remix_degenerate(spectrum: SpectrumResult, rng=None, tol_fn=degeneracy_tol) -> SpectrumResult:
    """Rotate every degenerate eigenspace by a random unitary.

    Used to check that downstream quantities do not depend on which basis a
    degenerate level was diagonalized in.
    """
    rng = np.random.default_rng(rng)
    blocks = {}
    for sz, block in spectrum.blocks.items():
        vecs = block.vectors.astype(complex)
        start = 0
        e = block.energies
        while start < len(e):
            stop = start + 1
            while stop < len(e) and abs(e[stop] - e[start]) <= tol_fn(e[start]):
                stop += 1
            d = stop - start
            if d > 1:
                U = unitary_group.rvs(d, random_state=rng)
                vecs[:, start:stop] = vecs[:, start:stop] @ U
            start = stop
        blocks[sz] = SectorBlock(sz, e, vecs)
    return SpectrumResult(spectrum.L, blocks)


# ---------------------------------------------------------- iterative extremal


class GroundAndGap(NamedTuple):
    energy: float
    state: np.ndarray  # full product space
    gap: float


def _lowest(H: HamiltonianOp, sz: int, k: int, tol: float):
    M = H.sector_matrix(sz)
    dim = M.shape[0]
    if dim <= _SMALL_BLOCK or k >= dim - 1:
        e, v = np.linalg.eigh(M.toarray())
        return e[:k], v[:, :k]
    v0 = np.random.default_rng(1234 + sz).standard_normal(dim)
    try:
        e, v = eigsh(M, k=k, which="SA", tol=tol, v0=v0, ncv=max(2 * k + 1, 30))
    except ArpackNoConvergence as exc:
        raise ConvergenceError(f"Lanczos did not converge in sector Sz={sz}") from exc
    order = np.argsort(e)
    e, v = e[order], v[:, order]
    resid = np.linalg.norm(M @ v - v * e, axis=0).max()
    if resid > 1e-9 * H.norm_bound:
        raise ConvergenceError(f"Lanczos residual too large in sector Sz={sz}", resid)
    return e, v


def ground_and_gap(H: HamiltonianOp, tol: float = 1e-14) -> GroundAndGap:
    """Ground state of the Sz=0 sector and the gap to the first excitation.

    The first excitation is searched in sectors 0 and +-1.
    """
    e0s, v0s = _lowest(H, 0, 2, tol)
    candidates = [e0s[1]]
    for sz in (1, -1):
        e, _ = _lowest(H, sz, 1, tol)
        if e[0] < e0s[0] - degeneracy_tol(e0s[0]):
            raise DomainError(f"ground state lies in sector Sz={sz}, not Sz=0")
        candidates.append(e[0])
    psi = build_sector(H.L, 0).embed(v0s[:, 0])
    return GroundAndGap(float(e0s[0]), psi, float(min(candidates) - e0s[0]))


# ----------------------------------------------------------- closed form, L=2


def _cubic(delta: float):
    s = (1 - delta) ** 2
    return np.array([1.0, (1 + delta) / 2, -(2 + s / 4), -s * (1 + delta) / 8])


def cubic_roots(delta: float) -> tuple[float, float, float]:
    """Ordered real roots of the cubic fixing the Sz=0 symmetric L=2 levels."""
    if not 0 < delta <= 1:
        raise DomainError(f"delta must lie in (0, 1], got {delta}")
    coeffs = _cubic(delta)
    roots = np.roots(coeffs)
    if np.max(np.abs(roots.imag)) > 1e-8:
        raise ArithmeticError(f"cubic has complex roots at delta={delta}: {roots}")
    roots = np.sort(roots.real)
    dp = np.polyder(coeffs)
    for _ in range(3):
        step = np.polyval(coeffs, roots) / np.polyval(dp, roots)
        roots = roots - np.where(np.isfinite(step), step, 0.0)
    if not (roots[0] < roots[1] < roots[2]):
        raise ArithmeticError(f"cubic roots not distinct at delta={delta}: {roots}")
    return tuple(float(r) for r in roots)


# kets are written in the order s_{1,1} s_{1,2} s_{2,2} s_{2,1}
_DISPLAY_SITES = ((1, 1), (1, 2), (2, 2), (2, 1))


def display_ket(label: str) -> np.ndarray:
    """Basis vector (chain-major bits) for a ket like ``"udud"``."""
    if len(label) != 4 or set(label) - {"u", "d"}:
        raise DomainError(f"bad ket label {label!r}")
    index = 0
    for ch, (chain, rung) in zip(label, _DISPLAY_SITES):
        if ch == "u":
            index |= 1 << ((chain - 1) * 2 + rung - 1)
    out = np.zeros(16)
    out[index] = 1.0
    return out


def _combo(*terms) -> np.ndarray:
    return sum(c * display_ket(k) for c, k in terms)


@dataclass(frozen=True)
class AnalyticLevel:
    label: str
    energy: float
    vectors: np.ndarray  # rows

    @property
    def degeneracy(self) -> int:
        return len(self.vectors)


@dataclass(frozen=True)
class AnalyticL2:
    delta: float
    J: float
    roots: tuple[float, float, float]
    a: tuple[float, float, float]
    b: tuple[float, float, float]
    c: tuple[float, float, float]
    levels: tuple[AnalyticLevel, ...]

    def eigenvalues(self) -> np.ndarray:
        return np.sort(np.concatenate([np.full(lv.degeneracy, lv.energy) for lv in self.levels]))

    def pairs(self):
        for lv in self.levels:
            for vec in lv.vectors:
                yield lv.energy, vec


def _coefficients(eta: float, delta: float) -> tuple[float, float, float]:
    h = (1 - delta) / 2
    p, q = eta + h, eta - h
    if min(abs(p), abs(q)) < 1e-12:
        # isotropic limit of the middle root: p -> 0+, q -> 0-, so b = -c = 1/2
        return 0.0, 0.5, -0.5
    a = 1 / sqrt(2 * (1 + 1 / p**2 + 1 / q**2))
    return a, a / p, a / q


def analytic_spectrum_l2(delta: float, J: float = 1.0) -> AnalyticL2:
    """All sixteen eigenpairs of the two-rung bus in closed form."""
    etas = cubic_roots(delta)
    coeffs = [_coefficients(eta, delta) for eta in etas]
    r2 = 1 / sqrt(2)

    def symmetric(f):
        a, b, c = coeffs[f]
        return _combo((a, "dudu"), (a, "udud"), (b, "dduu"), (b, "uudd"), (c, "duud"), (c, "uddu"))

    def quad(s1, s2, s3, s4, up=True):
        keys = ("duuu", "uduu", "uudu", "uuud") if up else ("uddd", "dudd", "ddud", "dddu")
        return _combo(*((0.5 * s, k) for s, k in zip((s1, s2, s3, s4), keys)))

    spec = [
        ("e0", J * etas[0], [symmetric(0)]),
        ("e1", -J, [quad(1, -1, 1, -1), quad(1, -1, 1, -1, up=False)]),
        ("e2", -J * (1 + delta) / 2, [_combo((r2, "dudu"), (-r2, "udud"))]),
        ("e3", -J * (1 - delta) / 2, [_combo((r2, "dduu"), (-r2, "uudd"))]),
        ("e4", J * etas[1], [symmetric(1)]),
        ("e5", 0.0, [quad(1, 1, -1, -1), quad(1, -1, -1, 1), quad(1, 1, -1, -1, up=False),
                     quad(1, -1, -1, 1, up=False)]),
        ("e6", J * (1 - delta) / 2, [_combo((r2, "duud"), (-r2, "uddu"))]),
        ("e7", J * (1 + delta) / 2, [display_ket("dddd"), display_ket("uuuu")]),
        ("e8", J, [quad(1, 1, 1, 1), quad(1, 1, 1, 1, up=False)]),
        ("e9", J * etas[2], [symmetric(2)]),
    ]
    levels = tuple(AnalyticLevel(lbl, float(e), np.array(vs)) for lbl, e, vs in spec)
    a, b, c = zip(*coeffs)
    return AnalyticL2(delta, J, etas, a, b, c, levels)


# ------------------------------------------------------------- gap estimate


def gap_estimate(L: float, J: float, C: float) -> float:
    """Asymptotic ladder gap ``J/2 + C J exp(-L/4) / L``."""
    if np.isinf(L):
        return J / 2
    return J / 2 + C * J * np.exp(-L / 4) / L


class GapFit(NamedTuple):
    C: float
    residuals: np.ndarray


def fit_gap_constant(lengths, gaps, J: float) -> GapFit:
    """Least-squares ``C`` in :func:`gap_estimate` for computed gaps."""
    lengths = np.asarray(lengths, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    basis = J * np.exp(-lengths / 4) / lengths
    (C,), *_ = sla.lstsq(basis[:, None], gaps - J / 2)
    return GapFit(float(C), gaps - np.array([gap_estimate(L, J, C) for L in lengths]))
