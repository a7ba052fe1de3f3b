"""Convergence ladder of the particle functional towards its stable limit.

Runs the fdd experiment at a reduced size and prints the checks and the
ladder table.  The acceptance suite runs the same experiment at full size.

    python demos/fdd_ladder.py --family first-order
"""
import argparse

from hsssi.experiments import fdd_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", default="first-order",
                    choices=["first-order", "second-order", "heavy-symmetric", "heavy-asymmetric"])
    ap.add_argument("--replicas", type=int, default=1000)
    ap.add_argument("--paths", type=int, default=200)
    ap.add_argument("--seed", type=int, default=6)
    args = ap.parse_args()

    res = fdd_experiment(args.family, Ts=(1e2, 1e3), n_replicas=args.replicas,
                         prelimit_paths=args.paths, limit_paths=4 * args.paths,
                         prelimit_dt=1e-4, seed=args.seed)
    for c in res.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    header, rows = res.tables["ladder"]
    print(",".join(header))
    for r in rows:
        print(",".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in r))


if __name__ == "__main__":
    main()
