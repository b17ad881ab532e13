"""Special functions used by the rate and power expressions.

Gamma, upper/lower regularised incomplete gamma, the exponential integral
E1, modified Bessel functions I and K, digamma, and the single Meijer-G
family ``G^{3,0}_{2,3}(1, 1; 0, 0, n | x)`` that appears in the two-beam
rate. Every function accepts a scalar or an array for its last argument and
returns a Python float for scalar input.
"""

from __future__ import annotations

import math

import numpy as np

from .quadrature import QuadratureError, integrate

EULER_GAMMA = 0.57721566490153286061

_EPS = np.finfo(float).eps
_TINY = 1e-300


class DomainError(ValueError):
    """Argument outside the documented domain of a special function."""


def _as_array(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError(f"{name} is NaN")
    return arr


def _ret(arr, scalar_in):
    return float(arr) if scalar_in else arr


def _is_int(alpha) -> bool:
    return float(alpha).is_integer()


# -- gamma family -----------------------------------------------------------

def gamma(x: float) -> float:
    """Gamma function for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"gamma requires x > 0, got {x!r}")
    return math.gamma(x)


def digamma(x: float) -> float:
    """Logarithmic derivative of the gamma function for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"digamma requires x > 0, got {x!r}")
    acc = 0.0
    while x < 8.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    # Bernoulli tail B_{2k} / (2k): 1/12, -1/120, 1/252, -1/240, 1/132, -691/32760
    series = inv2 * (1 / 12 - inv2 * (1 / 120 - inv2 * (1 / 252 - inv2 * (
        1 / 240 - inv2 * (1 / 132 - inv2 * 691 / 32760)))))
    return acc + math.log(x) - 0.5 / x - series


def _lower_series(a: float, x: np.ndarray) -> np.ndarray:
    # P(a, x) = x^a e^-x / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n))
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    term = np.ones_like(xp)
    total = np.ones_like(xp)
    ap = a
    for _ in range(2000):
        ap += 1.0
        term = term * xp / ap
        total += term
        if np.all(np.abs(term) <= np.abs(total) * _EPS):
            break
    else:
        raise QuadratureError("incomplete gamma series did not converge")
    out[pos] = np.exp(a * np.log(xp) - xp - math.lgamma(a + 1.0)) * total
    return out


def _upper_cf(a: float, x: np.ndarray) -> np.ndarray:
    # Modified Lentz evaluation of the Legendre continued fraction for Q(a, x).
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, 2000):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) <= _EPS):
            break
    else:
        raise QuadratureError("incomplete gamma continued fraction did not converge")
    return np.exp(a * np.log(x) - x - math.lgamma(a)) * h


def _upper_integer(n: int, x: np.ndarray) -> np.ndarray:
    # Q(N, x) = e^-x sum_{m<N} x^m / m!
    out = np.zeros_like(x)
    pos = x > 0
    out[~pos] = 1.0
    xp = x[pos]
    lx = np.log(xp)
    acc = np.zeros_like(xp)
    for m in range(n):
        acc += np.exp(m * lx - xp - math.lgamma(m + 1.0))
    out[pos] = acc
    return out


def _check_gamma_args(alpha, x):
    if not alpha > 0:
        raise DomainError(f"incomplete gamma requires alpha > 0, got {alpha!r}")
    arr = _as_array(x, "x")
    if np.any(arr < 0):
        raise DomainError("incomplete gamma requires x >= 0")
    return arr


def gammainc_upper_reg(alpha: float, x):
    """Regularised upper incomplete gamma ``Q(alpha, x) = Gamma(alpha, x) / Gamma(alpha)``."""
    scalar = np.ndim(x) == 0
    arr = np.atleast_1d(_check_gamma_args(alpha, x))
    if _is_int(alpha) and alpha <= 50:
        out = _upper_integer(int(alpha), arr)
        return _ret(out.reshape(np.shape(x)), scalar)
    out = np.empty_like(arr)
    small = arr < alpha + 1.0
    out[small] = 1.0 - _lower_series(alpha, arr[small])
    if np.any(~small):
        out[~small] = _upper_cf(alpha, arr[~small])
    return _ret(out.reshape(np.shape(x)), scalar)


def gammainc_lower_reg(alpha: float, x):
    """Regularised lower incomplete gamma ``P(alpha, x) = 1 - Q(alpha, x)``.

    Uses the power series below ``alpha + 1`` so small values keep full
    relative precision.
    """
    scalar = np.ndim(x) == 0
    arr = np.atleast_1d(_check_gamma_args(alpha, x))
    out = np.empty_like(arr)
    small = arr < alpha + 1.0
    out[small] = _lower_series(alpha, arr[small])
    if np.any(~small):
        out[~small] = 1.0 - gammainc_upper_reg(alpha, arr[~small])
    return _ret(out.reshape(np.shape(x)), scalar)


def upper_incomplete_gamma(alpha: float, x):
    """``Gamma(alpha, x)``: the integral of ``t^(alpha-1) e^-t`` from ``x`` to infinity.

    For integer ``alpha`` this is the finite sum
    ``(alpha-1)! e^-x sum_{m<alpha} x^m / m!``.
    """
    q = gammainc_upper_reg(alpha, x)
    return q * math.gamma(alpha)


# -- exponential integral ---------------------------------------------------

def _e1_scaled(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    small = z <= 1.0
    zs = z[small]
    if zs.size:
        term = np.ones_like(zs)
        total = np.zeros_like(zs)
        for k in range(1, 200):
            term = -term * zs / k
            add = term / k
            total += add
            if np.all(np.abs(add) <= _EPS * np.abs(total) + 1e-300):
                break
        out[small] = np.exp(zs) * (-EULER_GAMMA - np.log(zs) - total)
    zl = z[~small]
    if zl.size:
        b = zl + 1.0
        c = np.full_like(zl, 1.0 / _TINY)
        d = 1.0 / b
        h = d.copy()
        for i in range(1, 1000):
            an = -float(i * i)
            b = b + 2.0
            d = 1.0 / (an * d + b)
            c = b + an / c
            delta = c * d
            h = h * delta
            if np.all(np.abs(delta - 1.0) <= _EPS):
                break
        else:
            raise QuadratureError("E1 continued fraction did not converge")
        out[~small] = h
    return out


def exp_integral_e1_scaled(z):
    """``exp(z) * E1(z)`` for ``z > 0``; stays finite where E1 underflows."""
    scalar = np.ndim(z) == 0
    arr = np.atleast_1d(_as_array(z, "z"))
    if np.any(arr <= 0):
        raise DomainError("E1 requires z > 0")
    return _ret(_e1_scaled(arr).reshape(np.shape(z)), scalar)


def exp_integral_e1(z):
    """Exponential integral ``E1(z) = int_1^inf e^(-z t) / t dt`` for ``z > 0``."""
    scalar = np.ndim(z) == 0
    arr = np.atleast_1d(_as_array(z, "z"))
    if np.any(arr <= 0):
        raise DomainError("E1 requires z > 0")
    out = _e1_scaled(arr) * np.exp(-arr)
    return _ret(out.reshape(np.shape(z)), scalar)


# -- modified Bessel functions ----------------------------------------------

def _reciprocal_gamma(x: float) -> float:
    if x <= 0 and _is_int(x):
        return 0.0
    return 1.0 / math.gamma(x)


def bessel_i(order: float, x: float) -> float:
    """First-kind modified Bessel function by its power series.

    Negative non-integer orders are allowed; intended for moderate ``x``.
    """
    if not x > 0:
        raise DomainError(f"bessel_i requires x > 0, got {x!r}")
    half = 0.5 * x
    total = 0.0
    term_scale = half ** order
    m = 0
    while True:
        rg = _reciprocal_gamma(m + order + 1.0)
        term = term_scale * half ** (2 * m) / math.factorial(m) * rg
        total += term
        if m > abs(order) + half and abs(term) <= _EPS * abs(total):
            return total
        m += 1
        if m > 500:
            raise QuadratureError("bessel_i series did not converge")


def _k_scaled_log(order: float, x: np.ndarray, max_points: int = 1 << 16):
    """Return ``(log_prefactor, integral)`` with ``e^x K = exp(log_prefactor) * integral``.

    Trapezoidal rule on ``int_0^T exp(-x (cosh t - 1)) cosh(order t) dt``,
    doubling the node count until successive estimates agree. The integrand
    is even and analytic in a strip, so the rule converges geometrically.
    """
    nu = abs(order)
    # Upper bound of the log-integrand: nu t - x (cosh t - 1) peaks at asinh(nu / x).
    t_star = np.arcsinh(nu / x)
    log_peak = nu * t_star - x * (np.cosh(t_star) - 1.0)
    target = log_peak + 45.0

    def excess(t):
        return x * (np.cosh(t) - 1.0) - nu * t - target

    lo = t_star.copy()
    hi = np.maximum(t_star, 1.0)
    while np.any(excess(hi) < 0):
        hi = np.where(excess(hi) < 0, 2.0 * hi, hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        neg = excess(mid) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    t_max = hi

    def trapezoid(n):
        u = np.linspace(0.0, 1.0, n + 1)
        t = t_max[:, None] * u[None, :]
        log_cosh = nu * t + np.log1p(np.exp(-2.0 * nu * t)) - math.log(2.0)
        vals = np.exp(-x[:, None] * (np.cosh(t) - 1.0) + log_cosh - log_peak[:, None])
        w = np.full(n + 1, 1.0)
        w[0] = w[-1] = 0.5
        return (vals @ w) * (t_max / n)

    n = 64
    prev = trapezoid(n)
    while True:
        n *= 2
        cur = trapezoid(n)
        if np.all(np.abs(cur - prev) <= 1e-14 * np.abs(cur)):
            return log_peak, cur
        if n >= max_points:
            raise QuadratureError("bessel_k trapezoid rule did not converge")
        prev = cur


def _check_k_args(order, x):
    if not order >= 0 and not order < 0:
        raise DomainError("bessel_k order is NaN")
    arr = np.atleast_1d(_as_array(x, "x"))
    if np.any(arr <= 0) or np.any(np.isinf(arr)):
        raise DomainError("bessel_k requires finite x > 0")
    return arr


def log_bessel_k(order: float, x):
    """Natural log of ``K_order(x)``; finite where ``K`` itself under- or overflows."""
    scalar = np.ndim(x) == 0
    arr = _check_k_args(order, x)
    log_pref, integral = _k_scaled_log(order, arr.ravel())
    out = (log_pref + np.log(integral) - arr.ravel()).reshape(arr.shape)
    return _ret(out.reshape(np.shape(x)), scalar)


def bessel_k_scaled(order: float, x):
    """``exp(x) * K_order(x)``."""
    scalar = np.ndim(x) == 0
    arr = _check_k_args(order, x)
    log_pref, integral = _k_scaled_log(order, arr.ravel())
    out = (np.exp(log_pref) * integral).reshape(arr.shape)
    return _ret(out.reshape(np.shape(x)), scalar)


def bessel_k(order: float, x):
    """Second-kind modified Bessel function ``K_order(x)`` for ``x > 0``.

    Evaluated from ``int_0^inf exp(-x cosh t) cosh(order t) dt``, which equals
    ``(pi/2) (I_-order - I_order) / sin(order pi)`` and its integer-order limit.
    """
    scalar = np.ndim(x) == 0
    arr = _check_k_args(order, x)
    log_pref, integral = _k_scaled_log(order, arr.ravel())
    out = (np.exp(log_pref - arr.ravel()) * integral).reshape(arr.shape)
    return _ret(out.reshape(np.shape(x)), scalar)


# -- Meijer-G special case --------------------------------------------------

def incomplete_gamma_log_moment(n: float, x: float) -> float:
    """``d/dn Gamma(n, x) = int_x^inf t^(n-1) e^-t ln t dt`` by adaptive quadrature."""
    if not x > 0:
        raise DomainError(f"log moment requires x > 0, got {x!r}")
    if not n > 0:
        raise DomainError(f"log moment requires n > 0, got {n!r}")
    return integrate(lambda t: t ** (n - 1.0) * np.exp(-t) * np.log(t), x, math.inf,
                     breakpoints=(x + max(n, 1.0),))


def meijer_g_special_scaled(n_param: float, x: float) -> float:
    """``exp(x) * G^{3,0}_{2,3}(1, 1; 0, 0, n | x)``; see :func:`meijer_g_special`."""
    if not x > 0:
        raise DomainError(f"meijer_g_special requires x > 0, got {x!r}")
    if not n_param > 0:
        raise DomainError(f"meijer_g_special requires n > 0, got {n_param!r}")
    return integrate(
        lambda u: (x + u) ** (n_param - 1.0) * np.log1p(u / x) * np.exp(-u),
        0.0, math.inf, breakpoints=(x, max(n_param, 1.0)), abs_tol=0.0)


def meijer_g_special(n_param: float, x: float) -> float:
    """``G^{3,0}_{2,3}(1, 1; 0, 0, n | x)``.

    Uses ``G = d/dn Gamma(n, x) - Gamma(n, x) ln x``, folded into one
    cancellation-free integral ``int_x^inf t^(n-1) e^-t ln(t/x) dt`` and
    rewritten with ``t = x + u`` as
    ``e^-x int_0^inf (x + u)^(n-1) log1p(u/x) e^-u du``.
    """
    scaled = meijer_g_special_scaled(n_param, x)
    return math.exp(-x) * scaled if x < 745.0 else 0.0
