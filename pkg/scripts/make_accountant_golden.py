"""Regenerate tests/fixtures/accountant_golden.csv with mpmath.

Direct high-precision summation of the subsampled-Gaussian moment sum,
independent of the library's log-domain implementation. Run from the repo
root; the frozen CSV is committed, so this only needs re-running if the
grid changes.
"""

import csv
import pathlib

from mpmath import mp, mpf, binomial, exp, log

mp.prec = 240  # bits of mantissa

Q_GRID = [mpf("0.001"), mpf("0.00853"), mpf("0.05"), mpf("0.5"), mpf(1)]
SIGMA_GRID = [mpf("0.5"), mpf(1), mpf("1.23"), mpf("2.15"), mpf(4)]
ALPHA_GRID = [2, 8, 16, 32, 64]

# extra points pinned by individual tests
EXTRA = [
    (mpf(512) / 60000, mpf("1.23"), 16),
    (mpf("0.01"), mpf("0.5"), 64),
]


def moment_sum(q, sigma, alpha):
    total = mpf(0)
    for k in range(alpha + 1):
        total += (
            binomial(alpha, k)
            * (1 - q) ** (alpha - k)
            * q**k
            * exp(mpf(k * k - k) / (2 * sigma**2))
        )
    return total


def rdp_eps(q, sigma, alpha):
    return log(moment_sum(q, sigma, alpha)) / (alpha - 1)


def crossing_tau(q, sigma, delta, budget):
    """Largest tau whose best-order DP epsilon stays within budget."""
    per_step = {a: rdp_eps(q, sigma, a) for a in range(2, 65)}
    tail = {a: log(1 / delta) / (a - 1) for a in range(2, 65)}

    def eps(tau):
        return min(tau * per_step[a] + tail[a] for a in range(2, 65))

    hi = 1
    while eps(hi) <= budget:
        hi *= 2
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if eps(mid) <= budget:
            lo = mid
        else:
            hi = mid
    return lo, eps(lo), eps(lo + 1)


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"
    out.mkdir(parents=True, exist_ok=True)
    path = out / "accountant_golden.csv"
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["q", "sigma", "alpha", "rdp_eps"])
        points = [(q, s, a) for q in Q_GRID for s in SIGMA_GRID for a in ALPHA_GRID]
        points += EXTRA
        for q, sigma, alpha in points:
            w.writerow(
                [
                    mp.nstr(q, 14),
                    mp.nstr(sigma, 14),
                    alpha,
                    mp.nstr(rdp_eps(q, sigma, alpha), 14),
                ]
            )
    print(f"wrote {path}")

    tau, e_lo, e_hi = crossing_tau(mpf(512) / 60000, mpf("1.23"), mpf("1e-5"), 3)
    print(f"tau* for (q=512/60000, sigma=1.23, delta=1e-5, budget=3.0): {tau}")
    print(f"  eps(tau*)   = {mp.nstr(e_lo, 12)}")
    print(f"  eps(tau*+1) = {mp.nstr(e_hi, 12)}")


if __name__ == "__main__":
    main()
