"""Exponent bookkeeping: validation, conjugates, conformal values, dilation balance.

Every scalar parameter used anywhere in the package is derived from an
ExponentSet built here.  The kernel power lambda is negative, p and q sit in
(0,1), and their conjugates p' = p/(p-1), r = q' = q/(q-1) are negative; the
auxiliary powers theta = 1/(1-p) and kappa = 1/(1-q) exceed 1.

All arithmetic in this module is plain field arithmetic (+,-,*,/), so exact
types (``fractions.Fraction``) pass through unchanged; that is what makes the
"exact zero defect" and "exact lower factor" fast paths possible.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BalanceError, RangeError

#: absolute tolerance for the scaling balance on float inputs
BALANCE_TOL = 1e-12


def balance_defect(n, m, lam, alpha, beta, p, q):
    """1/p + 1/q + (lambda-alpha-beta)/(n+m) - 2; zero on the balance manifold."""
    return 1 / p + 1 / q + (lam - alpha - beta) / (n + m) - 2


def conjugate(p):
    """Holder conjugate p/(p-1); negative for p in (0,1)."""
    if p == 1:
        raise RangeError("conjugate undefined at p = 1")
    return p / (p - 1)


def conformal_exponents(n, m, lam, alpha, beta):
    """The pair (p_alpha, q_beta) making the weighted functional conformally invariant.

    p_alpha = 2(n+m) / (2(n+m) + 2*alpha - lambda), and likewise with beta.
    Exact for rational inputs.
    """
    _check_base_ranges(n, m, lam, alpha, beta)
    two_nm = 2 * (n + m)
    p_a = two_nm / (two_nm + 2 * alpha - lam)
    q_b = two_nm / (two_nm + 2 * beta - lam)
    return p_a, q_b


@dataclass(frozen=True)
class ExponentSet:
    """Validated exponent bundle; construct through :func:`validate_exponents`.

    Fields keep whatever numeric type they were validated with (floats in
    ordinary use, Fractions on the exact paths).
    """

    n: int
    m: int
    lam: float
    alpha: float
    beta: float
    p: float
    q: float

    @property
    def p_conj(self):
        return conjugate(self.p)

    @property
    def q_conj(self):
        """r = q' < 0, the dual exponent of q."""
        return conjugate(self.q)

    @property
    def r(self):
        return self.q_conj

    @property
    def theta(self):
        return 1 / (1 - self.p)

    @property
    def kappa(self):
        return 1 / (1 - self.q)

    @property
    def dim(self):
        """Ambient dimension n+m (n+1 for the half-space problem)."""
        return self.n + self.m

    def conformal_pair(self):
        return conformal_exponents(self.n, self.m, self.lam, self.alpha, self.beta)

    def is_conformal(self, tol=1e-12):
        p_a, q_b = self.conformal_pair()
        return abs(self.p - p_a) <= tol and abs(self.q - q_b) <= tol

    def to_dict(self):
        return {
            "n": int(self.n),
            "m": int(self.m),
            "lambda": float(self.lam),
            "alpha": float(self.alpha),
            "beta": float(self.beta),
            "p": float(self.p),
            "q": float(self.q),
            "p_conj": float(self.p_conj),
            "q_conj": float(self.q_conj),
            "theta": float(self.theta),
            "kappa": float(self.kappa),
        }


def _check_base_ranges(n, m, lam, alpha, beta):
    if not (isinstance(n, int) and n >= 1):
        raise RangeError(f"n must be a positive integer, got {n!r}")
    if not (isinstance(m, int) and m >= 1):
        raise RangeError(f"m must be a positive integer, got {m!r}")
    # closed lower endpoint: the canonical example lambda = -(n+m) keeps every
    # constant and convergence condition well defined
    if not (-(n + m) <= lam < 0):
        raise RangeError(f"lambda must lie in [-(n+m), 0) = [{-(n + m)}, 0), got {lam}")
    if alpha < 0:
        raise RangeError(f"alpha must be >= 0, got {alpha}")
    if beta < 0:
        raise RangeError(f"beta must be >= 0, got {beta}")


def _solve_missing(n, m, lam, alpha, beta, p, q):
    # exactly one of p, q may be None; the balance determines it
    target = 2 - (lam - alpha - beta) / (n + m)
    if p is None:
        inv = target - 1 / q
        if inv <= 1:
            raise RangeError(f"balance gives 1/p = {inv}, not an exponent in (0,1)")
        p = 1 / inv
    else:
        inv = target - 1 / p
        if inv <= 1:
            raise RangeError(f"balance gives 1/q = {inv}, not an exponent in (0,1)")
        q = 1 / inv
    return p, q


def validate_exponents(n, m=1, lam=None, alpha=0, beta=0, p=None, q=None,
                       require_balance=True, tol=BALANCE_TOL):
    """Validate ranges, populate derived fields, and check or solve the balance.

    If exactly one of p, q is missing it is solved from the scaling balance
    (the common workflow in sweeps).  With ``require_balance=False`` the
    balance is not imposed; that is the ball-problem configuration, where the
    subcritical pair (p, q) < (p_alpha, q_beta) is deliberately off-balance.

    Raises RangeError for out-of-interval parameters and BalanceError when a
    fully supplied (p, q) misses the balance by more than ``tol``.
    """
    if lam is None:
        raise RangeError("lambda is required")
    _check_base_ranges(n, m, lam, alpha, beta)

    if p is None and q is None:
        raise RangeError("at least one of p, q must be supplied")
    if p is None or q is None:
        if not require_balance:
            raise RangeError("cannot solve a missing exponent without the balance")
        p, q = _solve_missing(n, m, lam, alpha, beta, p, q)

    if not (0 < p < 1):
        raise RangeError(f"p must lie in (0,1), got {p}")
    if not (0 < q < 1):
        raise RangeError(f"q must lie in (0,1), got {q}")

    if require_balance:
        defect = balance_defect(n, m, lam, alpha, beta, p, q)
        if abs(defect) > tol:
            raise BalanceError(
                f"scaling balance violated: 1/p + 1/q + (lambda-alpha-beta)/(n+m) - 2 = {defect}")

    p_conj = conjugate(p)
    r = conjugate(q)
    if not alpha < -m / p_conj:
        raise RangeError(f"alpha = {alpha} must be < -m/p' = {-m / p_conj}")
    if not beta < -m / r:
        raise RangeError(f"beta = {beta} must be < -m/q' = {-m / r}")

    return ExponentSet(n=n, m=m, lam=lam, alpha=alpha, beta=beta, p=p, q=q)


def pohozaev_defect(es: ExponentSet):
    """(n+m)/(theta-1) + (n+m)/(kappa-1) - (alpha+beta-lambda).

    Zero exactly when the dilation (Pohozaev) necessary condition holds,
    which is the scaling balance in the (theta, kappa) variables.
    """
    return dilation_defect(es.n, es.m, es.lam, es.alpha, es.beta, es.theta, es.kappa)


def dilation_defect(n, m, lam, alpha, beta, theta, kappa):
    """Pohozaev defect in raw (theta, kappa) form; exact for rational inputs."""
    if theta <= 1 or kappa <= 1:
        raise RangeError(f"theta, kappa must exceed 1, got {theta}, {kappa}")
    return (n + m) / (theta - 1) + (n + m) / (kappa - 1) - (alpha + beta - lam)


def conformal_theta_kappa(n, m, lam, alpha, beta):
    """(theta, kappa) of the conformal pair: theta = (2(n+m)+2a-l)/(2a-l), etc."""
    _check_base_ranges(n, m, lam, alpha, beta)
    two_nm = 2 * (n + m)
    return (two_nm + 2 * alpha - lam) / (2 * alpha - lam), \
        (two_nm + 2 * beta - lam) / (2 * beta - lam)


def subcritical_set(n, m, lam, alpha, beta, delta, delta_q=None):
    """Ball-problem exponent bundle at p = p_alpha(1-delta), q = q_beta(1-delta_q).

    Both exponents are pulled strictly below their conformal values (the
    balance does not hold along the way; it is restored only in the limit).
    """
    if delta <= 0:
        raise RangeError(f"delta must be positive, got {delta}")
    if delta_q is None:
        delta_q = delta
    if delta_q <= 0:
        raise RangeError(f"delta_q must be positive, got {delta_q}")
    p_a, q_b = conformal_exponents(n, m, lam, alpha, beta)
    return validate_exponents(n=n, m=m, lam=lam, alpha=alpha, beta=beta,
                              p=p_a * (1 - delta), q=q_b * (1 - delta_q),
                              require_balance=False)
