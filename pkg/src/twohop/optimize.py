"""Golden-section search for convex functions on a closed interval."""
import math

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo, hi, tol=1e-10, max_iter=200):
    """Minimise a convex ``f`` on ``[lo, hi]``.

    Returns ``(x, f(x))``.  The endpoints are evaluated as well, since the
    interior search only converges to within ``tol`` of a boundary minimiser.
    """
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x, fx = (c, fc) if fc <= fd else (d, fd)
    for xe in (lo, hi):
        fe = f(xe)
        if fe <= fx:
            x, fx = xe, fe
    return x, fx
