"""Numerical kernel: log-gamma, regularized incomplete beta (and its
inverse), and the error function.

Everything downstream (coverage laws, guarantee solvers, binomial
intervals) reduces to these four functions, so they carry the accuracy
budget for the whole package: absolute error around 1e-12 on the forward
functions and a residual-controlled inverse.

``log_gamma`` and ``erf`` delegate to the C implementations in
:mod:`math`, which already meet the accuracy target; the incomplete beta
and its inverse are implemented here because we need them for real
(non-integer) parameters and want bracketed, guaranteed-convergent
behaviour in the distribution tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from covcal.errors import ConvergenceError, DomainError

__all__ = ["Tolerance", "log_gamma", "reg_inc_beta", "inv_reg_inc_beta", "erf"]

# Continued-fraction iteration cap.  Convergence needs roughly
# O(sqrt(max(a, b))) terms near the transition point x ~ a/(a+b), so this
# comfortably covers the planner's n_cal search cap of 1e7.
_CF_MAX_ITER = 10000
_CF_EPS = 1e-15
_CF_TINY = 1e-300


@dataclass(frozen=True)
class Tolerance:
    """Stopping rule for iterative inversions.

    abs_tol is a residual tolerance: the inverse x is accepted once
    |I_x(a,b) - p| <= abs_tol.
    """

    abs_tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0.0):
            raise DomainError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_iter < 1:
            raise DomainError(f"max_iter must be >= 1, got {self.max_iter}")


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"log_gamma requires finite x > 0, got {x}")
    return math.lgamma(x)


def erf(x: float) -> float:
    """Error function; odd, bounded in [-1, 1]."""
    if not math.isfinite(x):
        raise DomainError(f"erf requires finite x, got {x}")
    return math.erf(x)


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _beta_cont_frac(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, by the modified Lentz
    method.  Valid (rapidly convergent) for x < (a+1)/(a+b+2)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        # even step
        num = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + num * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + num / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        # odd step
        num = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + num * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + num / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge for "
        f"a={a}, b={b}, x={x} within {_CF_MAX_ITER} iterations"
    )


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Parameters
    ----------
    x : float
        Evaluation point in [0, 1].
    a, b : float
        Positive shape parameters.  Real values are accepted; nothing is
        special-cased for integers.

    Returns
    -------
    float
        I_x(a, b) in [0, 1], evaluated via the continued fraction on
        whichever side of the transition point x = (a+1)/(a+b+2) keeps it
        convergent, using I_x(a,b) = 1 - I_{1-x}(b,a) for the far side.
    """
    if not (math.isfinite(a) and a > 0.0) or not (math.isfinite(b) and b > 0.0):
        raise DomainError(f"shape parameters must be finite and positive, got a={a}, b={b}")
    if not (math.isfinite(x) and 0.0 <= x <= 1.0):
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (a * math.log(x) + b * math.log1p(-x) - _log_beta(a, b))
    if x < (a + 1.0) / (a + b + 2.0):
        value = math.exp(log_front) * _beta_cont_frac(a, b, x) / a
    else:
        value = 1.0 - math.exp(log_front) * _beta_cont_frac(b, a, 1.0 - x) / b
    # clamp float noise at the boundaries; the function is a probability
    if value < 0.0:
        return 0.0
    if value > 1.0:
        return 1.0
    return value


def _beta_log_pdf(x: float, a: float, b: float, log_b: float) -> float:
    return (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - log_b


def inv_reg_inc_beta(p: float, a: float, b: float,
                     tol: Tolerance = Tolerance()) -> float:
    """Inverse of ``reg_inc_beta`` in its first argument.

    Finds x in [0, 1] with |I_x(a, b) - p| <= tol.abs_tol by bracketed
    bisection refined with Newton steps; a Newton proposal that leaves the
    current bracket is discarded in favour of the bisection midpoint, so
    convergence is guaranteed on this monotone function.

    For p > 1/2 the reflected problem I_{1-x}(b, a) = 1 - p is solved
    instead, which keeps full relative accuracy in the upper tail where
    the guarantee levels live.

    Raises
    ------
    ConvergenceError
        If the residual tolerance is not reached within tol.max_iter
        iterations.
    """
    if not (math.isfinite(p) and 0.0 <= p <= 1.0):
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if not (math.isfinite(a) and a > 0.0) or not (math.isfinite(b) and b > 0.0):
        raise DomainError(f"shape parameters must be finite and positive, got a={a}, b={b}")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    if p > 0.5:
        return 1.0 - inv_reg_inc_beta(1.0 - p, b, a, tol)

    log_b = _log_beta(a, b)
    lo, hi = 0.0, 1.0
    # mean of Beta(a,b) as the starting point; always inside (0, 1)
    x = a / (a + b)
    for _ in range(tol.max_iter):
        f = reg_inc_beta(x, a, b) - p
        if abs(f) <= tol.abs_tol:
            return x
        if f > 0.0:
            hi = x
        else:
            lo = x
        # Newton step where the density is usable, bisection otherwise
        x_new = None
        if 0.0 < x < 1.0:
            log_pdf = _beta_log_pdf(x, a, b, log_b)
            if log_pdf > -700.0:  # pdf representable; exp() would not underflow
                step = f / math.exp(log_pdf)
                candidate = x - step
                if lo < candidate < hi:
                    x_new = candidate
        if x_new is None:
            x_new = 0.5 * (lo + hi)
        x = x_new
    raise ConvergenceError(
        f"inverse incomplete beta did not reach |residual| <= {tol.abs_tol} "
        f"for p={p}, a={a}, b={b} within {tol.max_iter} iterations"
    )
