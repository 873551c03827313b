"""Upper concave envelopes of scattered data, with exact evaluation.

An envelope is represented by the affine functions of its upper facets.  A
concave piecewise-linear function equals the pointwise minimum of its facet
planes on the convex hull of the nodes (each upper facet supports the whole
hypograph from above), so evaluation anywhere is a min over plane values.
Outside the hull the same min gives the natural concave extension.
"""

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

_NORMAL_TOL = 1e-10
_AFFINE_TOL = 1e-9


class EnvelopeError(RuntimeError):
    pass


def _planes_1d(x, f):
    """Upper concave chain of points sorted by increasing scalar x."""
    hull = []
    for i in range(len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # b lies on or below the chord a -> i: drop it.
            if (f[b] - f[a]) * (x[i] - x[a]) <= (f[i] - f[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    if len(hull) == 1:
        return np.zeros((1, 1)), np.array([f[hull[0]]])
    slopes, offsets = [], []
    for a, b in zip(hull[:-1], hull[1:]):
        s = (f[b] - f[a]) / (x[b] - x[a])
        slopes.append(s)
        offsets.append(f[a] - s * x[a])
    return np.array(slopes)[:, None], np.array(offsets)


def _affine_fit(x, f):
    design = np.column_stack([x, np.ones(len(f))])
    coef, _, _, _ = np.linalg.lstsq(design, f, rcond=None)
    resid = design @ coef - f
    scale = max(1.0, np.abs(f).max())
    if np.abs(resid).max() <= _AFFINE_TOL * scale:
        return coef
    return None


def upper_planes(x, f):
    """Facet planes (A, b) of the upper concave envelope of nodes (x, f).

    x has shape (P, d) with the node cloud spanning d dimensions; the
    envelope at a query point y is ``min(A @ y + b)``.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    if x.ndim != 2:
        raise ValueError("x must be 2-d")
    P, d = x.shape
    if d == 0 or P == 1:
        return np.zeros((1, max(d, 0))), np.array([f.max()])
    if d == 1:
        order = np.argsort(x[:, 0], kind="stable")
        return _planes_1d(x[order, 0], f[order])

    coef = _affine_fit(x, f)
    if coef is not None:
        return coef[None, :d], np.array([coef[d]])

    lifted = np.column_stack([x, f])
    try:
        hull = ConvexHull(lifted)
    except QhullError:
        hull = ConvexHull(lifted, qhull_options="QJ")
    eq = hull.equations
    upper = eq[:, d] > _NORMAL_TOL
    if not np.any(upper):
        raise EnvelopeError("no upward facets found")
    n_last = eq[upper, d]
    A = -eq[upper, :d] / n_last[:, None]
    b = -eq[upper, d + 1] / n_last
    return A, b


def plane_min(A, b, X):
    """Evaluate min over planes at query rows X (Q, d)."""
    X = np.asarray(X, dtype=float)
    if A.shape[1] == 0:
        return np.full(X.shape[0], b[0])
    return (X @ A.T + b).min(axis=1)


def envelope_on_nodes(x, f):
    """Envelope values at the nodes themselves, never below the raw data."""
    A, b = upper_planes(x, f)
    env = plane_min(A, b, np.asarray(x, dtype=float))
    return np.maximum(env, f), (A, b)


def lp_envelope_value(nodes, values, target):
    """Reference evaluation of the envelope at one point by linear program.

    Maximizes the convex-combination value subject to the barycenter pinned
    at ``target``.  Independent of the facet route; used as an oracle and as
    a fallback.
    """
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    P = nodes.shape[0]
    A_eq = np.vstack([nodes.T, np.ones(P)])
    b_eq = np.concatenate([np.asarray(target, dtype=float), [1.0]])
    res = linprog(-values, A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * P,
                  method="highs")
    if not res.success:
        raise EnvelopeError(f"envelope LP failed: {res.message}")
    return -res.fun, res.x
