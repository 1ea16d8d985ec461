"""Exact leakage of tiny padded codes as the key length varies."""

import argparse
import math

from secisac.probcore import Seed, bsc
from secisac.protosim.leakage import TinyLeakageConfig, estimate_leakage, leakage_monte_carlo


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--crossover", type=float, default=0.1)
    ap.add_argument("--block-len", type=int, default=8)
    ap.add_argument("--samples", type=int, default=200000)
    args = ap.parse_args()

    print("key_bits  exact_nats  exact_bits  monte_carlo_nats  stderr")
    for key_bits in range(3):
        cfg = TinyLeakageConfig(bsc(args.crossover), message_bits=2, key_bits=key_bits,
                                block_len=args.block_len, seed=Seed(8))
        exact = estimate_leakage(cfg)
        mc, se = leakage_monte_carlo(cfg, args.samples, Seed(88, key_bits))
        print(f"{key_bits:8d}  {exact:10.6f}  {exact / math.log(2):10.6f}  {mc:16.6f}  {se:.6f}")


if __name__ == "__main__":
    main()
