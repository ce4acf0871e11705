"""Regenerate src/keystress/anomaly/chi2_table.py.

Quantiles of the chi-squared distribution by direct quadrature of its density
(Simpson's rule after the substitution x = u**2, which removes the d=1
singularity at 0) and bisection on the resulting CDF.

    python tools/gen_chi2_table.py > src/keystress/anomaly/chi2_table.py
"""

import math

DOFS = range(1, 11)
QUANTILES = (0.5, 0.95, 0.975, 0.99)


def cdf(x: float, d: int, intervals: int = 20000) -> float:
    if x <= 0:
        return 0.0
    norm = 2 ** (d / 2) * math.gamma(d / 2)
    upper = math.sqrt(x)
    h = upper / intervals

    def g(u):
        return 2 * u ** (d - 1) * math.exp(-u * u / 2) / norm

    total = g(0.0) + g(upper)
    for i in range(1, intervals):
        total += (4 if i % 2 else 2) * g(i * h)
    return total * h / 3


def quantile(q: float, d: int) -> float:
    lo, hi = 0.0, 1.0
    while cdf(hi, d) < q:
        hi *= 2
    for _ in range(60):
        mid = (lo + hi) / 2
        if cdf(mid, d) < q:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def main():
    print('"""Chi-squared quantiles, generated by tools/gen_chi2_table.py. Do not edit."""')
    print()
    print("CHI2_QUANTILES = {")
    for d in DOFS:
        row = ", ".join(f"{q!r}: {round(quantile(q, d), 10)!r}" for q in QUANTILES)
        print(f"    {d}: {{{row}}},")
    print("}")


if __name__ == "__main__":
    main()
