"""Bracketed one-dimensional minimization: coarse grid, golden section, parabolic polish."""

import math
from dataclasses import dataclass

import numpy as np

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class ScalarMinimum:
    """Result of :func:`grid_golden_minimize`.

    ``trace`` lists every ``(x, f(x))`` evaluation in the order performed.
    ``at_edge`` is true when the coarse-grid argmin was an endpoint of the
    bracket, in which case no refinement was attempted.
    """

    x: float
    fun: float
    trace: list
    at_edge: bool


def parabola_vertex(x0, f0, x1, f1, x2, f2):
    """Abscissa of the vertex of the parabola through three points.

    Returns ``None`` when the points are collinear or the parabola opens
    downward.
    """
    d0 = (f1 - f0) / (x1 - x0)
    d1 = (f2 - f1) / (x2 - x1)
    curv = (d1 - d0) / (x2 - x0)
    if not curv > 0 or not math.isfinite(curv):
        return None
    return 0.5 * (x0 + x1) - d0 / (2.0 * curv)


def _triple_around_best(trace):
    """Argmin of the trace with its nearest distinct neighbours on each side."""
    pts = sorted(dict(trace).items())
    xs = [p[0] for p in pts]
    fs = [p[1] for p in pts]
    i = int(np.argmin(fs))
    if i == 0 or i == len(xs) - 1:
        return None
    return xs[i - 1], fs[i - 1], xs[i], fs[i], xs[i + 1], fs[i + 1]


def grid_golden_minimize(fun, lower, upper, n_grid=41, tol=1e-8, max_iter=200):
    """Minimize ``fun`` on ``[lower, upper]``.

    An ``n_grid``-point grid locates the basin; golden-section search then
    refines on the two grid cells around the grid argmin until the bracket is
    shorter than ``tol``.  Finally the vertex of the parabola through the grid
    argmin and its neighbours, and through the refined argmin and its
    neighbours, are evaluated.  The returned point is the best evaluation,
    except that a parabolic vertex is preferred when its value ties the best
    to within rounding (relative 1e-12); for quadratic objectives the vertex
    is the exact minimizer while golden-section points are only ``tol``-close.
    """
    lower = float(lower)
    upper = float(upper)
    trace = []

    def f(x):
        x = float(x)
        v = float(fun(x))
        trace.append((x, v))
        return v

    grid = np.linspace(lower, upper, int(n_grid))
    vals = np.array([f(x) for x in grid])
    i = int(np.argmin(vals))
    if i == 0 or i == len(grid) - 1:
        return ScalarMinimum(float(grid[i]), float(vals[i]), trace, True)

    vertices = []
    v = parabola_vertex(grid[i - 1], vals[i - 1], grid[i], vals[i], grid[i + 1], vals[i + 1])
    if v is not None and grid[i - 1] < v < grid[i + 1]:
        vertices.append((v, f(v)))

    a, b = float(grid[i - 1]), float(grid[i + 1])
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(int(max_iter)):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)

    triple = _triple_around_best(trace)
    if triple is not None:
        v = parabola_vertex(*triple)
        if v is not None and triple[0] < v < triple[4] and v not in dict(trace):
            vertices.append((v, f(v)))

    best_x, best_f = min(trace, key=lambda t: t[1])
    slack = 1e-12 * abs(best_f)
    for vx, vf in vertices:
        if vf <= best_f + slack:
            best_x, best_f = vx, vf
            break
    return ScalarMinimum(float(best_x), float(best_f), trace, False)
