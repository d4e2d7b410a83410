"""Error probability vs n for the block protocol and the two majority baselines.

Writes one CSV (RFC-4180) with a row per (protocol, n) and prints the fitted
exponents.  Defaults are a setting where errors are still countable at
desk scale.

    python scripts/compare_protocols.py --p 0.3 --q 0.3 --k 10 --n 20 40 60 80 100
"""
import argparse
import sys

from twohop.channel import make_bsc
from twohop.harness import ExperimentConfig, sweep, write_csv
from twohop.protocol import ProtocolSpec

RUNS = (("bsc-block", "ml"), ("simple-forwarding", "majority"), ("cumulative", "majority"),
        ("sqrt-block-majority", "majority"))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, default=0.3)
    ap.add_argument("--q", type=float, default=0.3)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--n", type=int, nargs="+", default=[20, 40, 60, 80, 100])
    ap.add_argument("--trials", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()

    chunks = []
    for kind, decoder in RUNS:
        spec = ProtocolSpec(kind, args.k, make_bsc(args.p), make_bsc(args.q))
        cfg = ExperimentConfig(spec, decoder, tuple(args.n), trials=args.trials, seed=args.seed,
                               threads=args.threads)
        points, fit = sweep(cfg)
        slope = "n/a" if fit is None else f"{fit.slope:.4f} +/- {fit.stderr:.4f}"
        print(f"{kind:>20s}: errors {[pt.errors for pt in points]}  fitted exponent {slope}", file=sys.stderr)
        text = write_csv(points, spec)
        chunks.append(text if not chunks else text.split("\r\n", 1)[1])
    out = "".join(chunks)
    if args.out == "-":
        sys.stdout.write(out)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(out)


if __name__ == "__main__":
    main()
