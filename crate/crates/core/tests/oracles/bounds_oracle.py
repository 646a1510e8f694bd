"""Independent reference values for the bounds tests.

Run with `python3 bounds_oracle.py`. Prints Rust-ready constants; the numbers
are frozen in `tests/bounds_oracles.rs`.
"""
import math

import mpmath

mpmath.mp.dps = 50


def e2_deficit(n, eps, delta_bar):
    # Parameters are read as the decimals they are written as.
    start = mpmath.ceil(2 * mpmath.mpf(str(eps)) * n)
    return 2 * n * mpmath.exp(-start ** (2 * mpmath.mpf(str(delta_bar))) / 8)


def azuma(m, delta_bar):
    return min(mpmath.mpf(1), 2 * mpmath.exp(-mpmath.mpf(m) ** (2 * mpmath.mpf(str(delta_bar))) / 8))


def tail_sum(start, c, gamma, floor=1e-25):
    """Brute-force sum of exp(-c k^gamma) for k >= start, stopped once the
    remaining terms are below `floor` relative to the running total."""
    terms = []
    k = start
    while True:
        t = math.exp(-c * k ** gamma)
        terms.append(t)
        if t < floor * terms[0]:
            break
        k += 1
    # The neglected tail is bounded by its integral, which at this point is
    # far below double precision of the total.
    return math.fsum(terms)


def main():
    print("// e2_union_deficit(n, eps, delta_bar)")
    for n, eps, db in [(10**6, 0.01, 0.05), (10**4, 0.05, 0.03125), (10**8, 0.1, 0.1)]:
        print(f"({n}, {eps}, {db}, {mpmath.nstr(e2_deficit(n, eps, db), 20)}),")
    print("// azuma_tail(m, delta_bar)")
    for m, db in [(10, 0.05), (10**6, 0.05), (10**12, 0.05), (10**12, 0.1), (10**9, 0.2)]:
        print(f"({m}, {db}, {mpmath.nstr(azuma(m, db), 20)}),")
    print("// sum_{k>=start} exp(-c k^gamma)")
    for start, c, gamma in [(1, 1.0, 0.35), (10, 1.0, 0.35), (1000, 1.0, 0.35),
                            (100, 0.5, 0.35), (1000, 2.0, 0.35), (1000, 1.0, 0.25)]:
        print(f"({start}, {c}, {gamma}, {tail_sum(start, c, gamma)!r}),")


if __name__ == "__main__":
    main()
