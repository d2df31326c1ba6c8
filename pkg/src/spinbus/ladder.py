"""The bus Hamiltonian: two open XXZ chains joined by isotropic rungs."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from .errors import DomainError
from .hilbert import SiteIndex, SzSector, as_site, build_sector

FLUCTUATION_BOUND = 0.1


@dataclass(frozen=True)
class LadderSpec:
    """Geometry and couplings of the bus.

    ``bond_overrides`` maps an intra-chain bond ``(chain, j)``, joining rungs
    ``j`` and ``j+1``, to its own anisotropy. Any mapping or iterable of pairs
    is accepted and stored as a sorted tuple so specs stay hashable.
    """

    L: int
    J: float = 1.0
    delta: float = 1.0
    bond_overrides: tuple = field(default=())

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise DomainError(f"L must be an integer >= 2, got {self.L}")
        if not self.J > 0:
            raise DomainError(f"J must be positive, got {self.J}")
        if not 0 < self.delta <= 1:
            raise DomainError(f"delta must lie in (0, 1], got {self.delta}")
        items = self.bond_overrides
        if hasattr(items, "items"):
            items = items.items()
        normalized = {}
        for key, value in items:
            chain, j = (int(k) for k in key)
            if chain not in (1, 2) or not 1 <= j <= self.L - 1:
                raise DomainError(f"no intra-chain bond {key} in a ladder with L={self.L}")
            if not value > 0:
                raise DomainError(f"bond anisotropy must be positive, got {value} at {key}")
            normalized[(chain, j)] = float(value)
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "bond_overrides", tuple(sorted(normalized.items())))

    @property
    def overrides(self) -> dict:
        return dict(self.bond_overrides)

    def anisotropy(self, chain: int, j: int) -> float:
        return self.overrides.get((chain, j), self.delta)


@dataclass(frozen=True)
class Bond:
    a: int  # bit positions
    b: int
    jxy: float
    jz: float


def bonds(spec: LadderSpec) -> list[Bond]:
    L, J = spec.L, spec.J
    out = []
    for chain in (1, 2):
        for j in range(1, L):
            a = SiteIndex(chain, j).bit(L)
            b = SiteIndex(chain, j + 1).bit(L)
            out.append(Bond(a, b, J, J * spec.anisotropy(chain, j)))
    for j in range(1, L + 1):
        out.append(Bond(SiteIndex(1, j).bit(L), SiteIndex(2, j).bit(L), J, J))
    return out


class HamiltonianOp:
    """Sector-blocked bus Hamiltonian.

    Full-space products are computed on the fly from bit operations. Sector
    blocks are assembled once as sparse CSR matrices; nothing dense is formed
    unless :meth:`sector_dense` is asked for.
    """

    def __init__(self, spec: LadderSpec):
        self.spec = spec
        self.L = spec.L
        self.dim = 4**spec.L
        self.bonds = bonds(spec)
        self._blocks: dict[int, sp.csr_matrix] = {}

    def __repr__(self):
        return f"HamiltonianOp({self.spec!r})"

    def diagonal(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=np.int64)
        d = np.zeros(len(states))
        for bd in self.bonds:
            same = ((states >> bd.a) & 1) == ((states >> bd.b) & 1)
            d += np.where(same, 0.25, -0.25) * bd.jz
        return d

    @cached_property
    def _full_diagonal(self) -> np.ndarray:
        return self.diagonal(np.arange(self.dim))

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Return ``H @ v`` for a full-space vector (or a stack of columns)."""
        v = np.asarray(v)
        if v.shape[0] != self.dim:
            raise DomainError(f"expected leading dimension {self.dim}, got {v.shape}")
        states = np.arange(self.dim)
        diag = self._full_diagonal if v.ndim == 1 else self._full_diagonal[:, None]
        out = diag * v
        for bd in self.bonds:
            flip = (1 << bd.a) | (1 << bd.b)
            differ = ((states >> bd.a) ^ (states >> bd.b)) & 1
            # the hop amplitude is jxy/2; zero it where the two spins are parallel
            amp = 0.5 * bd.jxy * differ
            if v.ndim > 1:
                amp = amp[:, None]
            out = out + amp * v[states ^ flip]
        return out

    def sector_matrix(self, total_sz) -> sp.csr_matrix:
        sector = build_sector(self.L, total_sz)
        if sector.total_sz not in self._blocks:
            self._blocks[sector.total_sz] = self._assemble(sector)
        return self._blocks[sector.total_sz]

    def _assemble(self, sector: SzSector) -> sp.csr_matrix:
        S = sector.members
        rows = [np.arange(sector.dim)]
        cols = [np.arange(sector.dim)]
        vals = [self.diagonal(S)]
        for bd in self.bonds:
            differ = np.flatnonzero(((S >> bd.a) ^ (S >> bd.b)) & 1)
            if len(differ) == 0 or bd.jxy == 0:
                continue
            target = sector.index_of(S[differ] ^ ((1 << bd.a) | (1 << bd.b)))
            rows.append(target)
            cols.append(differ)
            vals.append(np.full(len(differ), 0.5 * bd.jxy))
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(sector.dim, sector.dim),
        )

    def sector_dense(self, total_sz) -> np.ndarray:
        return self.sector_matrix(total_sz).toarray()

    def to_sparse(self) -> sp.csr_matrix:
        """The whole Hamiltonian as one sparse matrix in the full product basis."""
        rows, cols, vals = [], [], []
        for sz in range(-self.L, self.L + 1):
            sector = build_sector(self.L, sz)
            block = self.sector_matrix(sz).tocoo()
            rows.append(sector.members[block.row])
            cols.append(sector.members[block.col])
            vals.append(block.data)
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.dim, self.dim),
        )

    def as_linear_operator(self, shift: float = 0.0, dtype=float) -> LinearOperator:
        return LinearOperator(
            (self.dim, self.dim),
            matvec=lambda x: self.apply(x) - shift * x,
            rmatvec=lambda x: self.apply(x) - shift * x,
            dtype=dtype,
        )

    @cached_property
    def norm_bound(self) -> float:
        """Cheap upper bound on the spectral norm."""
        return sum(abs(bd.jxy) / 2 + abs(bd.jz) / 4 for bd in self.bonds)


def build_hamiltonian(spec: LadderSpec) -> HamiltonianOp:
    return HamiltonianOp(spec)


def incident_bonds(node, L: int) -> list[tuple[int, int]]:
    """Intra-chain bonds ``(chain, j)`` touching a node."""
    site = as_site(node, L)
    return [(site.chain, j) for j in (site.rung - 1, site.rung) if 1 <= j <= L - 1]


def apply_fluctuations(spec: LadderSpec, m, delta_m: float, n, delta_n: float) -> LadderSpec:
    """Set ``Delta (1 + delta_m)`` on every intra-chain bond incident to node ``m``.

    Likewise for node ``n``. Rung bonds are never touched.
    """
    site_m, site_n = as_site(m, spec.L), as_site(n, spec.L)
    if site_m == site_n:
        raise DomainError("fluctuating nodes must differ")
    for d in (delta_m, delta_n):
        if abs(d) > FLUCTUATION_BOUND:
            raise DomainError(f"fluctuation {d} exceeds sanity bound {FLUCTUATION_BOUND}")
    if delta_m == 0 and delta_n == 0:
        return spec

    assigned = {}
    for site, d in ((site_m, delta_m), (site_n, delta_n)):
        value = spec.delta * (1 + d)
        for bond in incident_bonds(site, spec.L):
            if bond in assigned and assigned[bond] != value:
                raise DomainError(f"bond {bond} is shared by both nodes with conflicting fluctuations")
            assigned[bond] = value
    overrides = spec.overrides
    overrides.update(assigned)
    return replace(spec, bond_overrides=overrides)


def swap_chains(spec: LadderSpec) -> LadderSpec:
    """Mirror the ladder across its axis (chain 1 <-> chain 2)."""
    flipped = {(3 - chain, j): v for (chain, j), v in spec.bond_overrides}
    return replace(spec, bond_overrides=flipped)
