"""Tables from the analytic bounds: ansatz sweeps, envelope inflation, regimes."""
from __future__ import annotations

import math

from lrfpp import bounds as B


def main():
    print("ansatz, d=1 alpha=2.5: Lambda*/n^0.5")
    for e in range(10, 21, 2):
        r = B.ansatz_optimize(2.5, 1, 2**e)
        print(f"  n=2^{e:<2d} k={r.k:<2d} {r.Lambda / 2 ** (e / 2):.4f}")
    r = B.ansatz_optimize(2.0, 1, 2.0**30)
    print(f"ansatz, d=1 alpha=2, n=2^30: log Lambda*/sqrt(2 log2 log n) = "
          f"{math.log(r.Lambda) / math.sqrt(2 * math.log(2) * 30 * math.log(2)):.4f}")
    delta = math.log(2) / math.log(4 / 3)
    print("ansatz, d=2 alpha=3: Lambda*/(log n)^Delta")
    for e in range(10, 31, 4):
        r = B.ansatz_optimize(3.0, 2, 2.0**e)
        print(f"  n=2^{e:<2d} k={r.k:<2d} {r.Lambda / math.log(2.0**e) ** delta:.4f}")
    print("extremal g / envelope G (beta=2, lambda=1, c=2)")
    for theta in (0.25, 0.5, 0.75):
        infl = B.envelope_inflation(theta, 2.0, 1.0, 2.0, (1, 10, 100))
        print(f"  theta={theta}: " + ", ".join(f"t={t:g}: {v:.3g}" for t, v in infl.items()))
    print("regimes")
    for d in (1, 2):
        for alpha in (0.5 * d, 1.5 * d, 2.0 * d, 2 * d + 0.5, 2 * d + 1, 2 * d + 2):
            rep = B.phase_classify(alpha, d)
            print(f"  d={d} alpha={alpha:<4g} {rep.as_dict()}")


if __name__ == "__main__":
    main()
