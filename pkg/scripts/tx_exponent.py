"""Transmitter detection exponent: Monte Carlo slope of -ln P_d1 against n.

    python3 scripts/tx_exponent.py --trials 1000000 --out results/tx.csv
"""

import argparse
import csv
import time

from secisac.chanfam import table1_preset
from secisac.metrics import conditional_kl
from secisac.probcore import Seed, uniform
from secisac.protosim import SimConfig, default_policy, simulate
from secisac.protosim.estimate import estimate_exponents


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ns", type=int, nargs="+", default=[200, 400, 600, 800])
    ap.add_argument("--trials", type=int, default=10**5)
    ap.add_argument("--eps-fraction", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=20250605)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    fam = table1_preset()
    d = conditional_kl(fam.w1[0], fam.w1[1], uniform(2))
    reports = []
    for n in args.ns:
        t0 = time.perf_counter()
        cfg = SimConfig(n=n, epsilon=args.eps_fraction * d, family=fam, policy=default_policy(fam),
                        trials=args.trials, seed=Seed(args.seed, n))
        rep = simulate(cfg, threads=args.threads)
        reports.append(rep)
        print(f"n={n:5d}  P_d1={rep.p_d1:.4e}  errors={rep.tx_errors:7d}  ({time.perf_counter() - t0:.1f} s)")
    fit = estimate_exponents(reports).d1
    print(f"slope {fit.slope:.6f} nats  CI [{fit.ci_low:.6f}, {fit.ci_high:.6f}]  target {d:.6f}  flags {list(fit.flags)}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "trials", "errors", "p_d1"])
            for r in reports:
                w.writerow([r.config.n, r.trials, r.tx_errors, repr(r.p_d1)])


if __name__ == "__main__":
    main()
