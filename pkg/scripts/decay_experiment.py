"""Decay of |I^eps - I^eps_0| for (P1)^N against the predicted rate exp(-b^2 / (2 eps))."""
import argparse
import math

from residue_engine.localization_model import critical_values, fit_decay_slope, witten_decay_check
from residue_engine.model_library import build_p1_power


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3, help="odd number of P1 factors")
    ap.add_argument("--epsilon", default="0.2,0.1,0.05,0.02")
    args = ap.parse_args()
    eps = [float(x) for x in args.epsilon.split(",")]
    m = build_p1_power(args.n)
    B = critical_values(m)
    b2 = float(B.min_nonzero_norm())
    print("critical values:", ", ".join(B.as_text()))
    samples = witten_decay_check(m, eps)
    print(f"{'eps':>8} {'|I - I0|':>14} {'-log/(1/2eps)':>14}")
    for e, d in samples:
        print(f"{e:8.3f} {d:14.6e} {-math.log(d) * 2 * e:14.4f}")
    print(f"fitted slope {fit_decay_slope(samples):.4f}, expected b^2 = {b2:g}")


if __name__ == "__main__":
    main()
