"""Monte Carlo local time at zero against the closed-form moments.

    python demos/local_time_moments.py --paths 2000
"""
import argparse
import math

from hsssi.experiments import local_time_at_zero
from hsssi.localtime import local_time_moment_exact
from hsssi.sampling import RngSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--dt", type=float, default=1e-4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("beta,t,mc_mean,se,exact_mean,mc_m2,exact_m2")
    for i, beta in enumerate((1.3, 1.5, 1.8)):
        L = local_time_at_zero(beta, [1.0, 2.0], args.paths, args.dt, RngSpec(args.seed, 0, (i,)))
        for j, t in enumerate((1.0, 2.0)):
            x = L[:, j]
            print(f"{beta},{t},{x.mean():.5f},{x.std(ddof=1) / math.sqrt(x.size):.5f},"
                  f"{local_time_moment_exact(beta, t, 0.0, 1):.5f},{(x ** 2).mean():.5f},"
                  f"{local_time_moment_exact(beta, t, 0.0, 2):.5f}")


if __name__ == "__main__":
    main()
