"""Table of g(D') and f(D') with a sampled check of the projection bound.

    python scripts/ancilla_bounds.py --dmax 8 --samples 10000
"""

import argparse

from lrle.measures import check_projection_bound, f_value, g_value


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dmax", type=int, default=8)
    ap.add_argument("--samples", type=int, default=10**4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print("Dprime,g,f,violations,max_ratio")
    for Dp in range(3, args.dmax + 1):
        rep = check_projection_bound(Dp, args.samples, args.seed)
        print(f"{Dp},{g_value(Dp):.6f},{f_value(Dp):.6f},{rep.violations},{rep.max_ratio:.6f}")


if __name__ == "__main__":
    main()
