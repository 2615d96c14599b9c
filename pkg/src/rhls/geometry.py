"""The half-space/ball conformal chart and Kelvin (inversion) transforms.

Points are plain float arrays with the vertical coordinate last.  The ball is
B(x1, 1) with x1 = (0, ..., 0, -1); the chart T is the radius-2 inversion
about x0 = (0, ..., 0, -2),

    T(zeta) = 4 (zeta - x0) / |zeta - x0|^2 + x0,

an involution of R^d \\ {x0} exchanging the open ball and the open upper half
space.  Two identities carry all the bookkeeping:

    |T(a) - T(b)| = 4 |a - b| / (|a - x0| |b - x0|)
    (1 - |zeta - x1|^2)/2 = t(T(zeta)) |zeta - x0|^2 / 4

and the volume element transforms with (2/|zeta - x0|)^(2 d).
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, SingularityError

_BOUNDARY_ATOL = 1e-13


def inversion_center(dim):
    """x0 = (0, ..., 0, -2), the pole of the chart (on the ball's boundary sphere)."""
    x0 = np.zeros(dim)
    x0[-1] = -2.0
    return x0


def ball_center(dim):
    """x1 = (0, ..., 0, -1)."""
    x1 = np.zeros(dim)
    x1[-1] = -1.0
    return x1


def _norm(v):
    return np.sqrt(np.sum(v * v, axis=-1))


def ball_radius2(zeta):
    """|zeta - x1|^2, squared distance to the ball center."""
    zeta = np.asarray(zeta, dtype=float)
    d = zeta.copy()
    d[..., -1] += 1.0
    return np.sum(d * d, axis=-1)


def ball_to_half(zeta, trace=False):
    """Chart the ball point(s) zeta to the half space.

    Interior points (|zeta - x1| < 1) map to t > 0.  Boundary sphere points
    are admitted only with ``trace=True`` (they map to t = 0); the pole x0
    itself is always rejected.
    """
    zeta = np.asarray(zeta, dtype=float)
    r2 = ball_radius2(zeta)
    limit = 1.0 + _BOUNDARY_ATOL if trace else 1.0 - _BOUNDARY_ATOL
    if np.any(r2 > limit):
        raise DomainError("point outside the closed unit ball about x1"
                          if trace else "point not strictly inside the ball")
    return _invert(zeta)


def half_to_ball(x, trace=False):
    """Inverse chart; t > 0 required (t = 0 admitted with ``trace=True``)."""
    x = np.asarray(x, dtype=float)
    t = x[..., -1]
    if trace:
        if np.any(t < -_BOUNDARY_ATOL):
            raise DomainError("point below the boundary hyperplane")
    elif np.any(t <= 0):
        raise DomainError("half-space point needs t > 0")
    return _invert(x)


def _invert(pt):
    dim = pt.shape[-1]
    x0 = inversion_center(dim)
    d = pt - x0
    n2 = np.sum(d * d, axis=-1, keepdims=True)
    if np.any(n2 == 0.0):
        raise SingularityError("inversion pole x0")
    return 4.0 * d / n2 + x0


def conformal_factor(pt):
    """2 / |pt - x0|; its (2 dim)-th power is the chart's volume Jacobian."""
    pt = np.asarray(pt, dtype=float)
    return 2.0 / _norm(pt - inversion_center(pt.shape[-1]))


def ball_weight(zeta, s):
    """((1 - |zeta - x1|^2)/2)^s; 0 on the boundary for s > 0, 1 for s = 0.

    On the boundary with s < 0 the weight is +inf; that is flagged as
    OverflowError rather than returned.
    """
    zeta = np.asarray(zeta, dtype=float)
    base = 0.5 * (1.0 - ball_radius2(zeta))
    base = np.where(np.abs(base) < _BOUNDARY_ATOL, np.maximum(base, 0.0), base)
    if np.any(base < 0):
        raise DomainError("ball_weight outside the closed ball")
    if s == 0:
        return np.ones_like(base) if base.ndim else 1.0
    if s < 0 and np.any(base == 0.0):
        raise OverflowError("ball_weight with s < 0 diverges on the boundary sphere")
    out = base ** s
    return out if out.ndim else float(out)


def kelvin_point(x, xi, r):
    """Sphere inversion x -> r^2 (x - xi)/|x - xi|^2 + xi; involutive, fixes |x-xi|=r."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if r <= 0:
        raise DomainError(f"inversion radius must be positive, got {r}")
    d = x - xi
    n2 = np.sum(d * d, axis=-1, keepdims=True)
    if np.any(n2 == 0.0):
        raise SingularityError("Kelvin inversion evaluated at its center")
    return (r * r) * d / n2 + xi


def kelvin_function(u, xi, r, s):
    """x -> (r/|x - xi|)^s * u(x^(xi,r)); applying it twice returns u."""
    xi = np.asarray(xi, dtype=float)

    def transformed(x):
        x = np.asarray(x, dtype=float)
        dist = _norm(x - xi)
        if np.any(dist == 0.0):
            raise SingularityError("Kelvin transform evaluated at its center")
        return (r / dist) ** s * u(kelvin_point(x, xi, r))

    return transformed


def vertical(pt):
    """Last coordinate (t on the half space, z for integration variables)."""
    return np.asarray(pt, dtype=float)[..., -1]
