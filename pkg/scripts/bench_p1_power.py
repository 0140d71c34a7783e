"""Timing of the unit-class pairing on (P1)^N, serial and with a process pool."""
import argparse
import time

from residue_engine.localization_model import pairing_rank1
from residue_engine.model_library import build_p1_power


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=15)
    ap.add_argument("--threads", default="1,4")
    args = ap.parse_args()
    m = build_p1_power(args.n)
    for t in (int(x) for x in args.threads.split(",")):
        start = time.perf_counter()
        value = pairing_rank1(m, threads=t)
        print(f"threads={t}: {value} in {time.perf_counter() - start:.2f} s")


if __name__ == "__main__":
    main()
