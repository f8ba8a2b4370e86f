"""Grid convergence of the dissipation identity residual and of the discrete
adjoint pairing for each preset."""
import argparse

import numpy as np

from hypnet.evolve import assemble_discrete_generator, dissipativity_residual
from hypnet.models import list_models, instantiate
from hypnet.resolvent import apply_A
from hypnet.state import inner_d, random_adjoint_state, random_domain_state, uniform_nodes


def orders(r):
    return np.log2(np.asarray(r[:-1]) / np.asarray(r[1:]))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grids", type=int, nargs="+", default=[32, 64, 128, 256])
    ap.add_argument("--states", type=int, default=10)
    ap.add_argument("--seed", type=int, default=8)
    args = ap.parse_args()
    ns = args.grids
    print("dissipation identity: worst residual over states")
    for name in sorted(list_models()):
        sys = instantiate(name).system
        rng = np.random.default_rng(args.seed)
        states = [random_domain_state(sys, rng) for _ in range(args.states)]
        r = [max(dissipativity_residual(sys, s.sample(uniform_nodes(sys, n))) for s in states) for n in ns]
        print(f"  {name:24s} residuals {np.array2string(np.array(r), precision=2)} orders "
              f"{np.array2string(orders(r), precision=3)}")
    print("adjoint pairing against a 16384-cell reference")
    for name in sorted(list_models()):
        sys = instantiate(name).system
        rng = np.random.default_rng(args.seed)
        u, z = random_domain_state(sys, rng), random_adjoint_state(sys, rng)
        fine = uniform_nodes(sys, 16384)
        ref = inner_d(sys, apply_A(sys, u.sample(fine)), z.sample(fine))
        err = []
        for n in ns:
            gen = assemble_discrete_generator(sys, n)
            err.append(abs(gen.pair(u.sample(gen.nodes), z.sample(gen.nodes)) - ref))
        print(f"  {name:24s} errors {np.array2string(np.array(err), precision=2)} orders "
              f"{np.array2string(orders(err), precision=3)}")


if __name__ == "__main__":
    main()
