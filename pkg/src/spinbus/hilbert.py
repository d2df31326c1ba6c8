"""Product basis, Sz sectors and single-site spin operators of the two-leg bus.

A basis state is an integer bitmask over the ``2L`` sites. Bit ``(chain-1)*L +
(rung-1)`` is set when that spin points up. This chain-major order is the only
one used by the numerical kernels.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from .errors import DomainError

AXES = ("x", "y", "z")


@dataclass(frozen=True, order=True)
class SiteIndex:
    """Position ``(chain, rung)`` of a bus spin, both 1-based."""

    chain: int
    rung: int

    def __post_init__(self):
        if self.chain not in (1, 2):
            raise DomainError(f"chain must be 1 or 2, got {self.chain}")
        if self.rung < 1:
            raise DomainError(f"rung must be >= 1, got {self.rung}")

    def bit(self, L: int) -> int:
        if self.rung > L:
            raise DomainError(f"rung {self.rung} outside ladder of length {L}")
        return (self.chain - 1) * L + (self.rung - 1)


def node_to_site(n: int, L: int) -> SiteIndex:
    """Map a connecting-node label onto the ladder.

    Nodes follow a snake through the rungs: 1=(1,1), 2=(2,1), 3=(2,2),
    4=(1,2), 5=(1,3), 6=(2,3), ...
    """
    if not 1 <= n <= 2 * L:
        raise DomainError(f"node {n} outside 1..{2 * L}")
    rung = (n + 1) // 2
    first = 1 if rung % 2 else 2
    chain = first if n % 2 else 3 - first
    return SiteIndex(chain, rung)


def site_to_node(site: SiteIndex, L: int) -> int:
    site.bit(L)
    first = 1 if site.rung % 2 else 2
    return 2 * site.rung - 1 if site.chain == first else 2 * site.rung


def as_site(where, L: int) -> SiteIndex:
    """Accept a node label, a ``SiteIndex`` or a ``(chain, rung)`` pair."""
    if isinstance(where, SiteIndex):
        where.bit(L)
        return where
    if isinstance(where, tuple):
        site = SiteIndex(*where)
        site.bit(L)
        return site
    return node_to_site(int(where), L)


def popcount(states: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.asarray(states, dtype=np.int64)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class SzSector:
    """All basis states of a ``2L``-spin bus sharing one total Sz."""

    L: int
    total_sz: int
    members: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.members)

    def index_of(self, states) -> np.ndarray:
        states = np.asarray(states, dtype=np.int64)
        idx = np.searchsorted(self.members, states)
        idx = np.minimum(idx, self.dim - 1)
        if not np.array_equal(self.members[idx], states):
            raise DomainError("state not in sector")
        return idx

    def embed(self, v: np.ndarray) -> np.ndarray:
        """Lift a sector vector into the full ``4**L`` space."""
        out = np.zeros(4**self.L, dtype=np.result_type(v, float))
        out[self.members] = v
        return out

    def restrict(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v)[self.members]


def _check_sz(L: int, total_sz) -> int:
    twice = 2 * total_sz
    if abs(twice - round(twice)) > 1e-12:
        raise DomainError(f"total_sz must be a half-integer, got {total_sz}")
    twice = int(round(twice))
    # 2L spin-1/2 sites: 2*Sz has the parity of 2L, i.e. it is even
    if twice % 2 or abs(twice) > 2 * L:
        raise DomainError(f"no sector with total_sz={total_sz} for L={L}")
    return twice // 2


@lru_cache(maxsize=None)
def _sector(L: int, sz: int) -> SzSector:
    n_up = L + sz
    members = np.array(
        sorted(sum(1 << b for b in bits) for bits in combinations(range(2 * L), n_up)),
        dtype=np.int64,
    )
    members.setflags(write=False)
    assert len(members) == comb(2 * L, n_up)
    return SzSector(L, sz, members)


def build_sector(L: int, total_sz) -> SzSector:
    if L < 1:
        raise DomainError(f"L must be positive, got {L}")
    return _sector(int(L), _check_sz(L, total_sz))


def all_sectors(L: int) -> list[SzSector]:
    return [build_sector(L, sz) for sz in range(-L, L + 1)]


def _apply_full(bit: int, axis: str, v: np.ndarray) -> np.ndarray:
    states = np.arange(len(v))
    up = (states >> bit) & 1 == 1
    if axis == "z":
        return np.where(up, 0.5, -0.5) * v
    flipped = v[states ^ (1 << bit)]
    if axis == "x":
        return 0.5 * flipped
    # <up|s^y|down> = -i/2, <down|s^y|up> = +i/2
    return np.where(up, -0.5j, 0.5j) * flipped


def apply_ladder_op(site: SiteIndex, raising: bool, v: np.ndarray, sector: SzSector):
    """Apply ``s^+`` (or ``s^-``) to a sector vector.

    Returns ``(target_sector, w)``; ``target_sector`` is None when the target
    Sz lies outside the Hilbert space (the result is then identically zero).
    """
    L = sector.L
    bit = site.bit(L)
    target_sz = sector.total_sz + (1 if raising else -1)
    if abs(target_sz) > L:
        return None, np.zeros(0, dtype=np.result_type(v, float))
    target = build_sector(L, target_sz)
    src_spin = (sector.members >> bit) & 1
    src = np.flatnonzero(src_spin == (0 if raising else 1))
    w = np.zeros(target.dim, dtype=np.result_type(v, float))
    w[target.index_of(sector.members[src] ^ (1 << bit))] = v[src]
    return target, w


def apply_spin(site, axis: str, v: np.ndarray, L: int, sector: SzSector | None = None):
    """Apply the spin-1/2 operator ``s^axis`` at one site, matrix-free.

    With ``sector=None`` the vector must live in the full ``4**L`` space and
    the result does too. For a sector vector, ``z`` returns a vector in the
    same sector while ``x`` and ``y`` return ``{total_sz: vector}`` for the
    neighbouring sectors they reach.
    """
    if axis not in AXES:
        raise DomainError(f"axis must be one of {AXES}, got {axis!r}")
    site = as_site(site, L)
    v = np.asarray(v)
    if sector is None:
        if v.shape != (4**L,):
            raise DomainError(f"expected a vector of length {4**L}, got shape {v.shape}")
        return _apply_full(site.bit(L), axis, v)

    if sector.L != L or v.shape != (sector.dim,):
        raise DomainError(f"vector shape {v.shape} does not match sector of dim {sector.dim}")
    if axis == "z":
        up = (sector.members >> site.bit(L)) & 1 == 1
        return np.where(up, 0.5, -0.5) * v
    out = {}
    # s^x = (s+ + s-)/2, s^y = (s+ - s-)/(2i)
    for raising, coef in ((True, 0.5), (False, 0.5)):
        target, w = apply_ladder_op(site, raising, v, sector)
        if target is None:
            continue
        if axis == "y":
            coef = -0.5j if raising else 0.5j
        out[target.total_sz] = coef * w
    return out
