"""Energy histories of every preset under the expm propagator.

Prints the relative energy drift and the final energy ratio per preset.
"""
import argparse

import numpy as np

from hypnet.evolve import simulate
from hypnet.models import list_models, instantiate
from hypnet.state import random_domain_state


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=128)
    ap.add_argument("--t-final", type=float, default=4.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(f"{'preset':24s} {'E0':>10s} {'E(T)/E0':>10s} {'max|E/E0-1|':>12s}")
    for name in sorted(list_models()):
        sys = instantiate(name).system
        u0 = random_domain_state(sys, np.random.default_rng(args.seed))
        tr = simulate(sys, u0, args.t_final, "expm", n_cells=args.cells, n_out=80)
        E = tr.ledger.E
        print(f"{name:24s} {E[0]:10.4g} {E[-1] / E[0]:10.6f} {np.max(np.abs(E / E[0] - 1)):12.3e}")


if __name__ == "__main__":
    main()
