"""Deterministic product rules on the unit ball B(x1, 1) and Monte Carlo backup.

Deterministic rules exist for dim 2 and 3 (radial Gauss-Legendre crossed with
trapezoid / Gauss-Legendre angles); higher dimensions are served by rejection
Monte Carlo only.  All reductions go through numpy's single-threaded pairwise
summation so results are bit-stable regardless of the machine's thread count.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteError, RangeError
from .geometry import ball_center

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights on the ball B(x1,1); immutable and shareable."""

    dim: int
    radial_order: int
    angular_order: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    rule_id: str = ""

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def size(self):
        return self.nodes.shape[0]


def _content_hash(dim, radial_order, angular_order, nodes, weights):
    h = hashlib.sha256()
    h.update(f"ball:{dim}:{radial_order}:{angular_order}".encode())
    h.update(np.ascontiguousarray(nodes).tobytes())
    h.update(np.ascontiguousarray(weights).tobytes())
    return h.hexdigest()[:16]


def _radial_gl(order):
    # Gauss-Legendre on (0,1); nodes cluster quadratically at both ends, in
    # particular toward the boundary sphere where the weights vanish.
    xs, ws = np.polynomial.legendre.leggauss(order)
    return 0.5 * (xs + 1.0), 0.5 * ws


def build_ball_rule(dim, radial_order, angular_order):
    """Product rule on B(x1,1): GL radius x (trapezoid circle | GL x trapezoid sphere).

    dim 2: rho in (0,1) by GL, angle by midpoint trapezoid (exact for
    trigonometric polynomials below the order).  dim 3: GL in cos(polar),
    trapezoid in azimuth.  Angular nodes carry a half-step offset so none
    aligns with the chart pole direction.
    """
    if dim not in (2, 3):
        raise RangeError(f"deterministic rules support dim 2 or 3, got {dim}")
    if radial_order < 2 or angular_order < 2:
        raise RangeError("orders must be >= 2")

    rho, w_rho = _radial_gl(radial_order)
    center = ball_center(dim)

    if dim == 2:
        theta = _TWO_PI * (np.arange(angular_order) + 0.5) / angular_order
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        w_ang = np.full(angular_order, _TWO_PI / angular_order)
        nodes = center + rho[:, None, None] * dirs[None, :, :]
        weights = (w_rho * rho)[:, None] * w_ang[None, :]
    else:
        n_pol = angular_order
        n_az = angular_order
        c, w_c = np.polynomial.legendre.leggauss(n_pol)  # cos(polar) in (-1,1)
        phi = _TWO_PI * (np.arange(n_az) + 0.5) / n_az
        sin_pol = np.sqrt(1.0 - c * c)
        dirs = np.empty((n_pol, n_az, 3))
        dirs[..., 0] = sin_pol[:, None] * np.cos(phi)[None, :]
        dirs[..., 1] = sin_pol[:, None] * np.sin(phi)[None, :]
        dirs[..., 2] = c[:, None]
        w_sph = w_c[:, None] * np.full(n_az, _TWO_PI / n_az)[None, :]
        nodes = center + rho[:, None, None, None] * dirs[None, :, :, :]
        weights = (w_rho * rho * rho)[:, None, None] * w_sph[None, :, :]

    nodes = nodes.reshape(-1, dim)
    weights = weights.reshape(-1)
    rid = _content_hash(dim, radial_order, angular_order, nodes, weights)
    return QuadratureRule(dim=dim, radial_order=radial_order,
                          angular_order=angular_order,
                          nodes=nodes, weights=weights, rule_id=rid)


def _sample(f, rule):
    if callable(f):
        vals = np.asarray(f(rule.nodes), dtype=float)
    else:
        vals = np.asarray(getattr(f, "values", f), dtype=float)
    if vals.shape != (rule.size,):
        raise RangeError(f"expected {rule.size} samples, got shape {vals.shape}")
    if not np.all(np.isfinite(vals)):
        raise NonFiniteError("non-finite integrand sample")
    return vals


def integrate(f, rule):
    """Sum w_i f(node_i); f may be a callable, a Field, or a value array."""
    return float(np.sum(rule.weights * _sample(f, rule)))


def double_integral(F, rule):
    """Sum_ij w_i w_j F(node_i, node_j) with pairwise row reductions.

    F must accept broadcast arrays of shape (N,1,dim) x (1,N,dim).  The kernel
    |zeta-eta|^(-lambda) with lambda < 0 is continuous, so diagonal pairs are
    ordinary samples.
    """
    vals = np.asarray(F(rule.nodes[:, None, :], rule.nodes[None, :, :]), dtype=float)
    if vals.shape != (rule.size, rule.size):
        raise RangeError(f"pair integrand returned shape {vals.shape}")
    if not np.all(np.isfinite(vals)):
        raise NonFiniteError("non-finite pair sample")
    row = np.sum(vals * rule.weights[None, :], axis=1)
    return float(np.sum(row * rule.weights))


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    samples: int
    seed: int

    def to_dict(self):
        return {"value": self.value, "stderr": self.stderr,
                "samples": self.samples, "seed": self.seed}


def ball_volume(dim):
    from .special import gamma
    return np.pi ** (dim / 2.0) / gamma(dim / 2.0 + 1.0)


def mc_integrate(f, dim, samples, seed):
    """Uniform rejection sampling in B(x1,1); bitwise reproducible for a seed."""
    if dim < 2:
        raise RangeError(f"mc_integrate needs dim >= 2, got {dim}")
    if samples < 2:
        raise RangeError("need at least 2 samples")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    center = ball_center(dim)
    chunk = 1 << 14
    kept = []
    total = 0
    while total < samples:
        pts = rng.uniform(-1.0, 1.0, size=(chunk, dim))
        inside = np.sum(pts * pts, axis=1) < 1.0
        pts = pts[inside] + center
        if total + pts.shape[0] > samples:
            pts = pts[: samples - total]
        vals = np.asarray(f(pts), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteError("non-finite Monte Carlo sample")
        kept.append(vals)
        total += pts.shape[0]
    vals = np.concatenate(kept)
    vol = ball_volume(dim)
    value = vol * float(np.mean(vals))
    stderr = vol * float(np.std(vals, ddof=1)) / np.sqrt(samples)
    return MCEstimate(value=value, stderr=stderr, samples=samples, seed=int(seed))


def build_half_ball_rule(xi, radius, radial_order, angular_order):
    """Product rule on the upper half ball B_r^+(xi), xi on the boundary (dim 2).

    Polar coordinates about xi: GL radius on (0, r) times GL angle on (0, pi).
    Used for the inversion-identity integrals, whose integrands are smooth on
    the closed half ball.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (2,):
        raise RangeError("half-ball rule implemented for dim 2")
    if abs(xi[-1]) > 1e-14:
        raise RangeError("xi must lie on the boundary hyperplane t = 0")
    if radius <= 0:
        raise RangeError("radius must be positive")
    rho, w_rho = _radial_gl(radial_order)
    rho, w_rho = radius * rho, radius * w_rho
    a, w_a = np.polynomial.legendre.leggauss(angular_order)
    theta = 0.5 * np.pi * (a + 1.0)
    w_t = 0.5 * np.pi * w_a
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    nodes = xi + rho[:, None, None] * dirs[None, :, :]
    weights = (w_rho * rho)[:, None] * w_t[None, :]
    nodes = nodes.reshape(-1, 2)
    weights = weights.reshape(-1)
    rid = _content_hash(2, radial_order, angular_order, nodes, weights)
    return QuadratureRule(dim=2, radial_order=radial_order,
                          angular_order=angular_order,
                          nodes=nodes, weights=weights, rule_id=rid)
