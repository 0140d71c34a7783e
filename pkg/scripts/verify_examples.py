"""Exhaustive vanishing checks for the relation generators on (P1)^N and the projective model."""
import argparse
import time

from residue_engine.cli import verify_example1, verify_example2


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p1", default="5,7", help="odd N for (P1)^N")
    ap.add_argument("--proj", default="3,5,7", help="odd N for the projective model")
    args = ap.parse_args()
    ok = True
    for N in (int(x) for x in args.p1.split(",") if x):
        start = time.perf_counter()
        checks = list(verify_example1(N))
        bad = [c for c in checks if not c[2].is_zero()]
        ok &= not bad
        print(f"(P1)^{N}: {len(checks)} generators, {len(bad)} nonzero, {time.perf_counter() - start:.2f} s")
    for N in (int(x) for x in args.proj.split(",") if x):
        start = time.perf_counter()
        checks = list(verify_example2(N))
        bad = [c for c in checks if not c[2].is_zero()]
        ok &= not bad
        print(f"projN:{N}: {len(checks)} generators, {len(bad)} nonzero, {time.perf_counter() - start:.2f} s")
    print("PASS" if ok else "FAIL")
    raise SystemExit(0 if ok else 1)


if __name__ == "__main__":
    main()
