"""Bus gap versus ladder length, and the fitted constant of J/2 + C J e^{-L/4}/L.

    python scripts/gap_scaling.py [--delta 1.0] [--max-length 8]
"""

import argparse
import time

from spinbus.ladder import LadderSpec, build_hamiltonian
from spinbus.spectra import fit_gap_constant, gap_estimate, ground_and_gap


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--delta", type=float, default=1.0)
    parser.add_argument("--J", type=float, default=1.0)
    parser.add_argument("--max-length", type=int, default=8)
    args = parser.parse_args()

    lengths, gaps = [], []
    for L in range(2, args.max_length + 1):
        start = time.perf_counter()
        g = ground_and_gap(build_hamiltonian(LadderSpec(L, args.J, args.delta)))
        lengths.append(L)
        gaps.append(g.gap)
        print(f"L={L}  e0={g.energy:+.10f}  gap={g.gap:.10f}  ({time.perf_counter() - start:.2f} s)")

    fit = fit_gap_constant(lengths, gaps, args.J)
    print(f"\nfitted C = {fit.C:.6f}")
    for L, gap, r in zip(lengths, gaps, fit.residuals):
        print(f"L={L}  gap={gap:.6f}  model={gap_estimate(L, args.J, fit.C):.6f}  residual={r:+.2e}")


if __name__ == "__main__":
    main()
