"""Alternating best-response minimization of the subcritical ball quotient.

Each half step replaces one field by the exact minimizer of the quotient with
the other held fixed: by the reversed Holder equality condition that minimizer
is (T g)^(1/(p-1)) up to normalization, so the quotient never increases.  The
multiplier convention normalizes both quasi-norms to 1 after every half step
and identifies the multiplier with the current quotient.

The critical limit is approached by a sweep p_j = p_alpha (1 - delta_j),
q_j = q_beta (1 - delta_j) with Richardson extrapolation in delta (first
order assumed; raw values are reported so the assumption is auditable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, RangeError
from .functional import (Field, apply_T_operator, bilinear_functional,
                         chart_volume_weights, constant_field,
                         distance_power_matrix, quasi_norm)
from .geometry import ball_weight, conformal_factor, half_to_ball, vertical
from .params import ExponentSet, subcritical_set, validate_exponents
from .quad import QuadratureRule


@dataclass
class SolverOptions:
    max_iter: int = 500
    tol: float = 1e-10
    delta_min: float = 1e-3   # required subcritical gap p_alpha - p
    damping: float = 0.0      # optional under-relaxation for stiff corners


@dataclass
class SolveReport:
    f: Field
    g: Field
    c_star: float
    quotient_history: list
    el_residual: float
    iterations: int
    converged: bool
    holder_quotient_bound: float = 0.0
    exponents: ExponentSet | None = None

    def to_dict(self):
        return {
            "c_star": self.c_star,
            "el_residual": self.el_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "holder_quotient_bound": self.holder_quotient_bound,
            "min_f": float(np.min(self.f.values)),
            "min_g": float(np.min(self.g.values)),
            "quotient_history": [float(v) for v in self.quotient_history],
            "exponents": self.exponents.to_dict() if self.exponents else None,
            "rule_id": self.f.rule_id,
        }


def _normalized_power(h: Field, p) -> Field:
    """h^(1/(p-1)) scaled to unit p-quasi-norm: the exact best response."""
    f = Field(values=h.values ** (1.0 / (float(p) - 1.0)), rule=h.rule)
    return f.scaled(1.0 / quasi_norm(f, p))


def best_response_f(g: Field, es: ExponentSet) -> Field:
    """Minimizer of quotient(., g): proportional to (T g)^(1/(p-1))."""
    return _normalized_power(apply_T_operator(g, es), es.p)


def best_response_g(f: Field, es: ExponentSet) -> Field:
    return _normalized_power(apply_T_operator(f, es, adjoint=True), es.q)


def el_residual(f: Field, g: Field, es: ExponentSet, c_star) -> float:
    """Relative sup residual of both Euler-Lagrange equations at multiplier c_star."""
    tg = apply_T_operator(g, es)
    tf = apply_T_operator(f, es, adjoint=True)
    res_f = np.max(np.abs(c_star * f.values ** (float(es.p) - 1.0) - tg.values))
    res_g = np.max(np.abs(c_star * g.values ** (float(es.q) - 1.0) - tf.values))
    return float(max(res_f / np.max(tg.values), res_g / np.max(tf.values)))


def holder_quotient_bound(f: Field, exponent=0.5, block=512) -> float:
    """max over node pairs of |f_i - f_j| / |zeta_i - zeta_j|^exponent.

    Discrete stand-in for the Holder continuity of converged fields; a finite
    value is reported, no threshold enforced.
    """
    pts = f.rule.nodes
    vals = f.values
    best = 0.0
    for lo in range(0, pts.shape[0], block):
        hi = min(lo + block, pts.shape[0])
        d2 = np.zeros((hi - lo, pts.shape[0]))
        for k in range(pts.shape[1]):
            diff = pts[lo:hi, k][:, None] - pts[:, k][None, :]
            d2 += diff * diff
        dv = np.abs(vals[lo:hi][:, None] - vals[None, :])
        mask = d2 > 0
        ratio = np.where(mask, dv / (d2 ** (exponent / 2.0) + ~mask), 0.0)
        best = max(best, float(np.max(ratio)))
    return best


def check_subcritical(es: ExponentSet, delta_min):
    p_a, q_b = es.conformal_pair()
    if not (float(es.p) <= float(p_a) - delta_min and float(es.q) <= float(q_b) - delta_min):
        raise RangeError(
            f"not strictly subcritical: need p <= p_alpha - {delta_min} and "
            f"q <= q_beta - {delta_min} (p_alpha={float(p_a)}, q_beta={float(q_b)})")


def solve_subcritical(es: ExponentSet, rule: QuadratureRule,
                      opts: SolverOptions | None = None,
                      initial: tuple[Field, Field] | None = None) -> SolveReport:
    """Alternate exact best responses from f = g = const until stationary.

    Convergence requires both the relative quotient change and the relative
    sup field change to fall below opts.tol (the quotient alone is
    quadratically stationary and cannot certify the EL residual).  Raises
    NoConvergence carrying the partial report if max_iter is hit; the
    monotonicity of the recorded quotient history is a hard guarantee of the
    scheme and is asserted with 1e-12 slack.
    """
    opts = opts or SolverOptions()
    check_subcritical(es, opts.delta_min)
    distance_power_matrix(rule, es.lam)  # build once, cached

    if initial is None:
        f = constant_field(rule)
        g = constant_field(rule)
        f = f.scaled(1.0 / quasi_norm(f, es.p))
        g = g.scaled(1.0 / quasi_norm(g, es.q))
    else:
        f, g = initial
        f = f.scaled(1.0 / quasi_norm(f, es.p))
        g = g.scaled(1.0 / quasi_norm(g, es.q))

    history = [bilinear_functional(f, g, es)]
    converged = False
    iters = 0
    for iters in range(1, opts.max_iter + 1):
        f_new = best_response_f(g, es)
        if opts.damping > 0:
            mix = Field(values=f_new.values ** (1 - opts.damping) * f.values ** opts.damping,
                        rule=rule)
            f_new = mix.scaled(1.0 / quasi_norm(mix, es.p))
        df = float(np.max(np.abs(f_new.values - f.values)) / np.max(f.values))
        f = f_new
        history.append(bilinear_functional(f, g, es))

        g_new = best_response_g(f, es)
        if opts.damping > 0:
            mix = Field(values=g_new.values ** (1 - opts.damping) * g.values ** opts.damping,
                        rule=rule)
            g_new = mix.scaled(1.0 / quasi_norm(mix, es.q))
        dg = float(np.max(np.abs(g_new.values - g.values)) / np.max(g.values))
        g = g_new
        history.append(bilinear_functional(f, g, es))

        dq = abs(history[-1] - history[-3]) / abs(history[-1])
        if max(dq, df, dg) < opts.tol:
            converged = True
            break

    if opts.damping == 0:
        slack = 1e-12 * abs(history[0])
        if any(history[k + 1] > history[k] + slack for k in range(len(history) - 1)):
            raise AssertionError("quotient increased along the iteration")

    c_star = history[-1]
    report = SolveReport(
        f=f, g=g, c_star=c_star, quotient_history=history,
        el_residual=el_residual(f, g, es, c_star),
        iterations=iters, converged=converged,
        holder_quotient_bound=holder_quotient_bound(f),
        exponents=es)
    if not converged:
        raise NoConvergence(f"no convergence in {opts.max_iter} iterations", report)
    return report


@dataclass
class SweepEntry:
    delta: float
    p: float
    q: float
    c_star: float
    iterations: int
    converged: bool


@dataclass
class SweepReport:
    entries: list
    richardson: list
    n_est: float
    stable: bool
    stability_gap: float

    def to_dict(self):
        return {
            "entries": [vars(e) for e in self.entries],
            "richardson": [float(v) for v in self.richardson],
            "n_est": float(self.n_est),
            "stable": self.stable,
            "stability_gap": float(self.stability_gap),
        }


def critical_sweep(es_base: ExponentSet, schedule, rule: QuadratureRule,
                   opts: SolverOptions | None = None, warm_start=True) -> SweepReport:
    """Solve along p_j = p_alpha(1-d_j), q_j = q_beta(1-d_j), extrapolate to d = 0.

    The schedule must be strictly decreasing and positive.  Richardson assumes
    first order in delta: consecutive pairs are extrapolated linearly and the
    last two extrapolants measure stability.
    """
    schedule = [float(d) for d in schedule]
    if not schedule or any(d <= 0 for d in schedule):
        raise RangeError("schedule must be strictly positive")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise RangeError("schedule must be strictly decreasing")
    opts = opts or SolverOptions()

    entries = []
    previous = None
    for d in schedule:
        es_d = subcritical_set(es_base.n, es_base.m, es_base.lam,
                               es_base.alpha, es_base.beta, d)
        run_opts = SolverOptions(max_iter=opts.max_iter, tol=opts.tol,
                                 delta_min=min(opts.delta_min, 0.5 * d * float(es_d.conformal_pair()[0])),
                                 damping=opts.damping)
        report = solve_subcritical(es_d, rule, run_opts,
                                   initial=previous if warm_start else None)
        if warm_start:
            previous = (report.f, report.g)
        entries.append(SweepEntry(delta=d, p=float(es_d.p), q=float(es_d.q),
                                  c_star=report.c_star,
                                  iterations=report.iterations,
                                  converged=report.converged))

    richardson = []
    for a, b in zip(entries, entries[1:]):
        richardson.append((a.delta * b.c_star - b.delta * a.c_star) / (a.delta - b.delta))
    n_est = richardson[-1] if richardson else entries[-1].c_star
    gap = abs(richardson[-1] - richardson[-2]) if len(richardson) >= 2 else math.inf
    return SweepReport(entries=entries, richardson=richardson, n_est=n_est,
                       stable=gap < 1e-3, stability_gap=gap)


# ---------------------------------------------------------------------------
# transport of a converged ball pair to the half space


class HalfSpaceSolution:
    """Callables (u, v) on the half space built from a converged ball pair.

    u_ball = f^(p-1) and v_ball = g^(q-1) satisfy the ball system with
    multiplier c*; both admit the smooth integral representation
    u_ball(zeta) = w_a(zeta) S_g(zeta)/c*, evaluable anywhere in the closed
    ball.  The half-space pair applies the inversion-weighted pullback

        u(X) = s_u (2/|X-x0|)^(lambda-2 alpha) u_ball(T(X)),

    with s_u = c*^((kappa-1)/(theta kappa - 1)) and the v-analogue, which
    absorbs the multiplier so that, at the conformal exponents, (u, v) solves
    the multiplier-free half-space system exactly.
    """

    def __init__(self, report: SolveReport, es: ExponentSet, rule: QuadratureRule):
        self.es = es
        self.rule = rule
        self.c_star = report.c_star
        theta, kappa = float(es.theta), float(es.kappa)
        self.s_u = self.c_star ** ((kappa - 1.0) / (theta * kappa - 1.0))
        self.s_v = self.c_star ** ((theta - 1.0) / (theta * kappa - 1.0))
        w = rule.weights
        self._g_src = ball_weight(rule.nodes, float(es.beta)) * w * report.g.values
        self._f_src = ball_weight(rule.nodes, float(es.alpha)) * w * report.f.values
        self._nodes = rule.nodes
        self._lam = float(es.lam)

    def _kernel_sum(self, zeta, src):
        zeta = np.atleast_2d(np.asarray(zeta, dtype=float))
        d2 = np.zeros((zeta.shape[0], self._nodes.shape[0]))
        for k in range(self._nodes.shape[1]):
            diff = zeta[:, k][:, None] - self._nodes[:, k][None, :]
            d2 += diff * diff
        ker = d2 ** (-self._lam / 2.0)
        return np.einsum("ij,j->i", ker, src, optimize=False)

    def s_g(self, zeta):
        """int w_b(eta) g(eta) |zeta-eta|^(-lambda) d eta, smooth up to the sphere."""
        return self._kernel_sum(zeta, self._g_src)

    def s_f(self, zeta):
        return self._kernel_sum(zeta, self._f_src)

    def u_ball(self, zeta):
        return ball_weight(zeta, float(self.es.alpha)) * self.s_g(zeta) / self.c_star

    def v_ball(self, zeta):
        return ball_weight(zeta, float(self.es.beta)) * self.s_f(zeta) / self.c_star

    def u(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        zeta = half_to_ball(x)
        cf = conformal_factor(x) ** (self._lam - 2.0 * float(self.es.alpha))
        return self.s_u * cf * self.u_ball(zeta)

    def v(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        zeta = half_to_ball(x)
        cf = conformal_factor(x) ** (self._lam - 2.0 * float(self.es.beta))
        return self.s_v * cf * self.v_ball(zeta)

    def stripped_u_trace(self, xs_boundary):
        """lim_{t->0} u(x,t)/t^alpha on boundary points (x, 0).

        Equals s_u 2^lambda |X-x0|^(-lambda) S_g(T(X))/c*: finite and positive
        even where u itself vanishes like t^alpha.
        """
        xb = np.atleast_2d(np.asarray(xs_boundary, dtype=float))
        zeta = half_to_ball(xb, trace=True)
        dist_pow = (2.0 / conformal_factor(xb)) ** (-self._lam)  # |X-x0|^(-lambda)
        return self.s_u * (2.0 ** self._lam) * dist_pow * self.s_g(zeta) / self.c_star

    def f_trace(self, xs_boundary):
        """Weight-stripped boundary trace of f: (stripped u-trace)^(1/(p-1)).

        At the conformal exponents this is the profile side of the boundary
        classification; the overall scale is immaterial for shape fits.
        """
        return self.stripped_u_trace(xs_boundary) ** (1.0 / (float(self.es.p) - 1.0))


def halfspace_solution(report: SolveReport, es: ExponentSet, rule: QuadratureRule):
    return HalfSpaceSolution(report, es, rule)


# ---------------------------------------------------------------------------
# blow-up renormalization diagnostic


@dataclass
class BlowupReport:
    rho: float
    u_max_location: np.ndarray
    boundary_flagged: bool
    U: object
    V: object
    bound_constant: float
    normalization_value: float

    def to_dict(self):
        return {
            "rho": float(self.rho),
            "u_max_location": [float(v) for v in np.asarray(self.u_max_location)],
            "boundary_flagged": self.boundary_flagged,
            "bound_constant": float(self.bound_constant),
            "normalization_value": float(self.normalization_value),
        }


def blowup_renormalize(report: SolveReport, es: ExponentSet, rule: QuadratureRule,
                       radius_grid=None, ray_angles=(0.35, 0.9, 1.25)) -> BlowupReport:
    """Rescale the pair about the maximum of f so the rescaled u is 1 there.

    rho solves rho^s_U u(max point) = 1 with
    s_U = (n+1+alpha+beta-lambda) q' / (theta kappa - 1); U, V are the
    rescaled inversion-weighted pullbacks.  The two-sided growth bound
    U/t^alpha within [1/C, C] (1+|X|^(-lambda)) is evaluated on a log radius
    grid along fixed rays and the best C is reported.  Ties in the max break
    to the first node in rule order; a max within 1e-6 of the boundary sphere
    is flagged.
    """
    hs = halfspace_solution(report, es, rule)
    idx = int(np.argmax(report.f.values))
    zeta_star = rule.nodes[idx]
    dist_to_sphere = 1.0 - math.sqrt(float(np.sum((zeta_star - _center_like(zeta_star)) ** 2)))
    boundary_flagged = dist_to_sphere < 1e-6
    u_star = float(hs.u_ball(zeta_star[None, :])[0]) * hs.s_u

    n = es.n
    theta, kappa = float(es.theta), float(es.kappa)
    qc = float(es.q_conj)
    pc = float(es.p_conj)
    denom = theta * kappa - 1.0
    s_u = (n + 1 + float(es.alpha) + float(es.beta) - float(es.lam)) * qc / denom
    s_v = (n + 1 + float(es.alpha) + float(es.beta) - float(es.lam)) * pc / denom
    rho = u_star ** (-1.0 / s_u)

    def U(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return rho ** s_u * hs.u(rho * x)

    def V(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return rho ** s_v * hs.v(rho * x)

    from .geometry import ball_to_half
    x_star = ball_to_half(zeta_star[None, :])[0]
    norm_val = float(U(x_star[None, :] / rho)[0])

    if radius_grid is None:
        radius_grid = np.logspace(-1, 3, 17)
    lam = float(es.lam)
    alpha, beta = float(es.alpha), float(es.beta)
    best = 1.0
    for ang in ray_angles:
        direction = np.zeros(rule.dim)
        direction[0] = math.cos(ang)
        direction[-1] = math.sin(ang)
        pts = radius_grid[:, None] * direction[None, :]
        t = pts[:, -1]
        target = 1.0 + radius_grid ** (-lam)
        gu = U(pts) / (t ** alpha * target)
        gv = V(pts) / (t ** beta * target)
        for gvals in (gu, gv):
            best = max(best, float(np.max(gvals)), float(np.max(1.0 / gvals)))
    return BlowupReport(rho=rho, u_max_location=zeta_star,
                        boundary_flagged=boundary_flagged, U=U, V=V,
                        bound_constant=best, normalization_value=norm_val)


def _center_like(zeta):
    c = np.zeros_like(zeta)
    c[-1] = -1.0
    return c
