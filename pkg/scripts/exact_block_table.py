"""Exact single-block coefficient rho_W against its closed-form bound, BSC teacher and student."""
import argparse
import math

from twohop.channel import make_bsc
from twohop.exponent import binary_kl
from twohop.harness import exact_block_verification
from twohop.protocol import ProtocolSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, nargs="+", default=[0.2, 0.3])
    ap.add_argument("--kmax", type=int, default=12)
    args = ap.parse_args()
    print(f"{'p':>5} {'k':>3} {'rho_W':>12} {'bound':>12} {'-ln(rho_W)/k':>13} {'D(1/2||p)':>10}")
    for p in args.p:
        d = binary_kl(0.5, p)
        for k in range(1, args.kmax + 1):
            rep = exact_block_verification(ProtocolSpec("bsc-block", k, make_bsc(p), make_bsc(p)))
            print(f"{p:5.2f} {k:3d} {rep.rho_w:12.6g} {rep.bound:12.6g} {-math.log(rep.rho_w) / k:13.5f} {d:10.5f}")


if __name__ == "__main__":
    main()
