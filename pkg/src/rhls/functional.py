"""Fields on quadrature nodes, sub-unit quasi-norms, and the weighted kernel.

The ball form of the functional is

    E(f, g) = int int w_a(zeta) w_b(eta) |zeta-eta|^(-lambda) f(zeta) g(eta)

with w_s(zeta) = ((1-|zeta-x1|^2)/2)^s.  Fields are node-sampled (the kernel
is continuous for lambda < 0, so collocation at the nodes is a faithful
representation).  The |zeta-eta|^(-lambda) matrix is cached per (rule, lambda);
matrix-vector products use einsum with a fixed sequential reduction, never
BLAS, so results do not depend on thread count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NonFiniteError, RangeError
from .geometry import ball_to_half, ball_weight, conformal_factor, vertical
from .params import ExponentSet
from .quad import QuadratureRule, integrate

_kernel_cache: dict = {}


@dataclass(frozen=True)
class Field:
    """Positive scalar samples bound to a quadrature rule."""

    values: np.ndarray = field(repr=False)
    rule: QuadratureRule

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.rule.size,):
            raise RangeError(f"field shape {vals.shape} does not match rule size {self.rule.size}")
        if not np.all(np.isfinite(vals)):
            raise NonFiniteError("field contains non-finite values")
        if np.any(vals <= 0):
            raise RangeError("field values must be strictly positive")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def rule_id(self):
        return self.rule.rule_id

    def scaled(self, s):
        return Field(values=self.values * s, rule=self.rule)


def constant_field(rule, value=1.0):
    return Field(values=np.full(rule.size, float(value)), rule=rule)


def field_from_callable(rule, fn):
    return Field(values=np.asarray(fn(rule.nodes), dtype=float), rule=rule)


def quasi_norm(f: Field, p) -> float:
    """(int f^p)^(1/p) for p in (0,1); positively homogeneous of degree 1."""
    p = float(p)
    if not (0.0 < p < 1.0):
        raise RangeError(f"quasi_norm needs p in (0,1), got {p}")
    return float(np.sum(f.rule.weights * f.values ** p) ** (1.0 / p))


def dual_quasi_norm(h: Field, e) -> float:
    """(int h^e)^(1/e) for e < 0, the dual side of the reversed Holder pairing.

    Kept separate from quasi_norm: the negative-exponent semantics (smaller
    values dominate) differ materially.
    """
    e = float(e)
    if e >= 0:
        raise RangeError(f"dual_quasi_norm needs a negative exponent, got {e}")
    return float(np.sum(h.rule.weights * h.values ** e) ** (1.0 / e))


def distance_power_matrix(rule: QuadratureRule, lam) -> np.ndarray:
    """|zeta_i - zeta_j|^(-lambda), cached; zero diagonal for lambda < 0."""
    lam = float(lam)
    key = (rule.rule_id, lam)
    hit = _kernel_cache.get(key)
    if hit is not None:
        return hit
    pts = rule.nodes
    # coordinate-wise broadcasting, not BLAS: bit-stable across thread counts
    d2 = np.zeros((rule.size, rule.size))
    for k in range(rule.dim):
        diff = pts[:, k][:, None] - pts[:, k][None, :]
        d2 += diff * diff
    np.fill_diagonal(d2, 0.0)
    mat = d2 ** (-lam / 2.0)
    mat.setflags(write=False)
    # keep only a few matrices around; they are O(N^2) memory
    if len(_kernel_cache) >= 4:
        _kernel_cache.pop(next(iter(_kernel_cache)))
    _kernel_cache[key] = mat
    return mat


def _weight_vectors(es: ExponentSet, rule: QuadratureRule):
    a = ball_weight(rule.nodes, float(es.alpha))
    b = ball_weight(rule.nodes, float(es.beta))
    return np.asarray(a, dtype=float), np.asarray(b, dtype=float)


def _matvec(mat, vec):
    # fixed sequential per-row reduction; deliberately not BLAS
    return np.einsum("ij,j->i", mat, vec, optimize=False)


def apply_T_operator(g: Field, es: ExponentSet, adjoint=False) -> Field:
    """u(zeta) = w_a(zeta) int w_b(eta) |zeta-eta|^(-lambda) g(eta) d eta.

    With ``adjoint=True`` the roles of the two vertical weights swap, which is
    the kernel acting on the f-slot instead (same symmetric distance matrix).
    """
    rule = g.rule
    mat = distance_power_matrix(rule, es.lam)
    a, b = _weight_vectors(es, rule)
    if adjoint:
        a, b = b, a
    u = a * _matvec(mat, b * rule.weights * g.values)
    return Field(values=u, rule=rule)


def bilinear_functional(f: Field, g: Field, es: ExponentSet) -> float:
    """E(f,g); equals integrate(f * apply_T_operator(g)) by construction."""
    if f.rule.rule_id != g.rule.rule_id:
        raise RangeError("fields bound to different rules")
    tg = apply_T_operator(g, es)
    return float(np.sum(f.rule.weights * f.values * tg.values))


def quotient(f: Field, g: Field, es: ExponentSet) -> float:
    """E(f,g) / (||f||_p ||g||_q); invariant under separate positive scalings."""
    return bilinear_functional(f, g, es) / (quasi_norm(f, es.p) * quasi_norm(g, es.q))


def chart_volume_weights(rule: QuadratureRule):
    """Jacobian (2/|zeta-x0|)^(2 dim) at the nodes: half-space volume via the ball."""
    cf = conformal_factor(rule.nodes)
    return cf ** (2 * rule.dim)


def halfspace_nodes(rule: QuadratureRule):
    """Images T(nodes) of the rule's nodes in the half space."""
    return ball_to_half(rule.nodes)


def halfspace_integrate(fn, rule: QuadratureRule) -> float:
    """int_{R^d_+} fn(X) dX through the ball chart (no domain truncation)."""
    xs = halfspace_nodes(rule)
    vals = np.asarray(fn(xs), dtype=float) * chart_volume_weights(rule)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteError("non-finite half-space sample")
    return float(np.sum(rule.weights * vals))


def halfspace_operator(f, es: ExponentSet, rule: QuadratureRule, mode="weighted"):
    """Riesz-type potential of a half-space function, evaluated via the chart.

    mode "weighted": Y -> int t^alpha z(Y)^beta f(X) |X-Y|^(-lambda) dX
    mode "plain":    Y -> int f(X) |X-Y|^(-lambda) dX

    The integral over the unbounded half space is pulled back to the ball with
    the exact volume factor; no truncation is involved.  Y must be interior
    (t > 0).
    """
    if mode not in ("weighted", "plain"):
        raise RangeError(f"unknown mode {mode!r}")
    xs = halfspace_nodes(rule)
    base = np.asarray(f(xs), dtype=float) * chart_volume_weights(rule) * rule.weights
    if mode == "weighted":
        base = base * vertical(xs) ** float(es.alpha)
    if not np.all(np.isfinite(base)):
        raise NonFiniteError("non-finite sample in half-space operator")
    lam = float(es.lam)
    beta = float(es.beta)

    def potential(ys):
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        if np.any(ys[:, -1] <= 0):
            raise DomainError("potential evaluated at t <= 0")
        diff = ys[:, None, :] - xs[None, :, :]
        ker = np.sum(diff * diff, axis=-1) ** (-lam / 2.0)
        out = np.einsum("ij,j->i", ker, base, optimize=False)
        if mode == "weighted":
            out = out * ys[:, -1] ** beta
        return out if out.shape[0] > 1 else float(out[0])

    return potential


def reversed_holder_residual(f: Field, h: Field, p) -> float:
    """int f h - ||f||_p ||h||_{p'}; nonnegative for positive fields, p in (0,1)."""
    p = float(p)
    if not (0.0 < p < 1.0):
        raise RangeError(f"needs p in (0,1), got {p}")
    pairing = integrate(Field(values=f.values * h.values, rule=f.rule), f.rule)
    return pairing - quasi_norm(f, p) * dual_quasi_norm(h, p / (p - 1.0))
