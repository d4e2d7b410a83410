"""E1(gamma) without feedback next to the one-round feedback exponent, BSC(p) then reverse-Z(q).

    python scripts/feedback_curve.py --p 0.2 --q 0.8 > curve.csv
"""
import argparse
import csv
import sys

import numpy as np

from twohop.channel import make_bsc, make_reverse_z
from twohop.exponent import e1, feedback_exponent_bsc_rz, two_hop_rate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, default=0.2)
    ap.add_argument("--q", type=float, default=0.8)
    ap.add_argument("--step", type=float, default=0.01)
    args = ap.parse_args()

    ch_p, ch_q = make_bsc(args.p), make_reverse_z(args.q)
    writer = csv.writer(sys.stdout, lineterminator="\r\n")
    writer.writerow(["gamma", "e1_no_feedback", "feedback", "two_hop_achievable"])
    ach = two_hop_rate(ch_p, ch_q).rate
    for g in np.round(np.arange(0.0, 1.0 + args.step / 2, args.step), 10):
        writer.writerow([g, repr(e1(ch_p, ch_q, float(g)).rate),
                         repr(feedback_exponent_bsc_rz(args.p, args.q, float(g))), repr(ach)])


if __name__ == "__main__":
    main()
