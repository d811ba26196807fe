"""Adaptive Simpson quadrature with explicit error accounting."""

from __future__ import annotations


class QuadratureError(RuntimeError):
    """Raised when the interval budget is exhausted before reaching tolerance."""


def adaptive_simpson(f, a: float, b: float, tol: float, max_intervals: int = 200_000):
    """Integrate f on [a, b] to absolute tolerance tol.

    Returns (value, error_estimate).  Classic interval-halving Simpson with
    Richardson correction; each subinterval is accepted when the change under
    halving is below its share of the tolerance.  Never truncates silently:
    exceeding max_intervals raises QuadratureError.
    """
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if a == b:
        return 0.0, 0.0
    if b < a:
        v, e = adaptive_simpson(f, b, a, tol, max_intervals)
        return -v, e

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = simpson(a, b, fa, fm, fb)
    # stack entries: (a, m, b, fa, fm, fb, coarse_estimate, tol_share)
    stack = [(a, m, b, fa, fm, fb, whole, tol)]
    total = 0.0
    err = 0.0
    used = 1
    while stack:
        x0, x1, x2, f0, f1, f2, coarse, t = stack.pop()
        lm, rm = 0.5 * (x0 + x1), 0.5 * (x1 + x2)
        flm, frm = f(lm), f(rm)
        left = simpson(x0, x1, f0, flm, f1)
        right = simpson(x1, x2, f1, frm, f2)
        delta = left + right - coarse
        if abs(delta) <= 15.0 * t:
            total += left + right + delta / 15.0
            err += abs(delta) / 15.0
        else:
            used += 2
            if used > max_intervals:
                raise QuadratureError(
                    f"interval budget {max_intervals} exhausted at [{x0}, {x2}]"
                )
            stack.append((x0, lm, x1, f0, flm, f1, left, 0.5 * t))
            stack.append((x1, rm, x2, f1, frm, f2, right, 0.5 * t))
    return total, err
