"""Independent reference constructions used across the test modules.

Everything here is built from explicit Kronecker products, with none of the
bit tricks or sector bookkeeping used by the package.
"""

import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
SZ = np.array([[1, 0], [0, -1]], dtype=complex) / 2
# basis order within one spin follows the bit value: index 0 = down, 1 = up
_FLIP = np.array([[0, 1], [1, 0]])
LOCAL = {a: _FLIP @ m @ _FLIP for a, m in (("x", SX), ("y", SY), ("z", SZ))}


def site_op(bit: int, axis: str, n_bits: int) -> np.ndarray:
    """Dense ``s^axis`` acting on bit ``bit`` of an ``n_bits``-bit integer basis."""
    out = np.eye(1, dtype=complex)
    for b in reversed(range(n_bits)):
        out = np.kron(out, LOCAL[axis] if b == bit else np.eye(2))
    return out


def bit_of(chain: int, rung: int, L: int) -> int:
    return (chain - 1) * L + (rung - 1)


def ladder_dense(L: int, J: float, delta: float, bond_delta=None) -> np.ndarray:
    """Reference bus Hamiltonian; ``bond_delta`` maps ``(chain, j)`` to its anisotropy."""
    bond_delta = bond_delta or {}
    N = 2 * L
    ops = {(b, a): site_op(b, a, N) for b in range(N) for a in "xyz"}
    H = np.zeros((4**L, 4**L), dtype=complex)

    def couple(i, k, wz):
        return ops[i, "x"] @ ops[k, "x"] + ops[i, "y"] @ ops[k, "y"] + wz * ops[i, "z"] @ ops[k, "z"]

    for chain in (1, 2):
        for j in range(1, L):
            d = bond_delta.get((chain, j), delta)
            H += J * couple(bit_of(chain, j, L), bit_of(chain, j + 1, L), d)
    for j in range(1, L + 1):
        H += J * couple(bit_of(1, j, L), bit_of(2, j, L), 1.0)
    return H


def node_bit(n: int, L: int) -> int:
    """Snake labelling written out independently: odd rungs start on chain 1."""
    rung = (n + 1) // 2
    lower = n % 2 == 1
    chain = (1 if lower else 2) if rung % 2 == 1 else (2 if lower else 1)
    return bit_of(chain, rung, L)


def gamma_dense(L, J, delta, m, n, axis, bond_delta=None) -> float:
    """Second-order coefficient by brute force over the full dense spectrum."""
    H = ladder_dense(L, J, delta, bond_delta)
    e, V = np.linalg.eigh(H)
    assert e[1] - e[0] > 1e-8
    psi = V[:, 0]
    A = V.conj().T @ (site_op(node_bit(m, L), axis, 2 * L) @ psi)
    B = V.conj().T @ (site_op(node_bit(n, L), axis, 2 * L) @ psi)
    val = -np.sum(A[1:].conj() * B[1:] / (e[1:] - e[0]))
    return float(val.real)


def bisect_roots(f, lo, hi, samples=4000, tol=1e-15):
    """All sign-change roots of ``f`` on ``[lo, hi]`` by scanning and bisection."""
    xs = np.linspace(lo, hi, samples)
    ys = np.array([f(x) for x in xs])
    roots = []
    for i in range(samples - 1):
        if ys[i] == 0:
            roots.append(xs[i])
        elif ys[i] * ys[i + 1] < 0:
            a, b = xs[i], xs[i + 1]
            while b - a > tol:
                mid = (a + b) / 2
                if f(a) * f(mid) <= 0:
                    b = mid
                else:
                    a = mid
            roots.append((a + b) / 2)
    return roots
