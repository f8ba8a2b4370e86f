"""Static verdicts of the qualitative checks for every preset, with the
dynamic probe run on the certified pairs."""
import argparse

from hypnet.models import list_models, instantiate
from hypnet.qualinv import qual_report

PROPERTIES = ("real", "positive", "linf")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(f"{'preset':24s} " + " ".join(f"{p:>28s}" for p in PROPERTIES))
    for name in sorted(list_models()):
        sys = instantiate(name).system
        cells = []
        for p in PROPERTIES:
            rep = qual_report(sys, p, trials=0)
            tag = rep.static_verdict
            if tag == "certified" and args.trials:
                dyn = qual_report(sys, p, trials=args.trials, seed=args.seed).dynamic_verdict
                tag += f" / {dyn['verdict']}"
            cells.append(f"{tag:>28s}")
        print(f"{name:24s} " + " ".join(cells))


if __name__ == "__main__":
    main()
