"""Round-trip residual of the A_0 solver on random systems, as a function of
the number of nodes per edge."""
import argparse
import time

import numpy as np

from hypnet.randsys import random_system
from hypnet.resolvent import roundtrip_error
from hypnet.state import uniform_nodes


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--systems", type=int, default=25)
    ap.add_argument("--cells", type=int, nargs="+", default=[250, 500, 1000, 2000])
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    systems = [random_system(rng) for _ in range(args.systems)]
    for n in args.cells:
        t0 = time.perf_counter()
        errs = []
        for s in systems:
            nodes = uniform_nodes(s, n)
            f = {e.id: np.stack([np.sin((j + 1) * nodes[e.id]) + 1j * np.cos((j + 2) * nodes[e.id])
                                 for j in range(e.k)], 1) for e in s.graph.edges}
            errs.append(roundtrip_error(s, f, None, nodes))
        print(f"cells {n:5d}  max residual {max(errs):.3e}  median {np.median(errs):.3e}  "
              f"({time.perf_counter() - t0:.2f} s)")


if __name__ == "__main__":
    main()
