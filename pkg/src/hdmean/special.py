"""Normal, Student-t and chi-square distribution functions.

The t and chi-square CDFs are evaluated through the regularized incomplete
beta and gamma functions (continued fractions / power series, modified Lentz
algorithm).  Quantiles use Newton's method safeguarded by bisection.  Absolute
accuracy is about 1e-10 or better for non-extreme arguments.

Everything here is a pure scalar function and safe to call from any thread.
"""

import math
from statistics import NormalDist

__all__ = [
    "normal_cdf",
    "normal_sf",
    "normal_upper_quantile",
    "betainc",
    "gammainc",
    "t_pdf",
    "t_cdf",
    "t_sf",
    "t_upper_quantile",
    "chi_square_cdf",
]

_EPS = 2.0**-53
_FPMIN = 1e-300
_MAXIT = 20000
_SQRT2 = math.sqrt(2.0)
_STD_NORMAL = NormalDist()


def _check_df(df):
    if not df > 0 or math.isinf(df):
        raise ValueError(f"degrees of freedom must be positive and finite, got {df!r}")


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly between 0 and 1, got {alpha!r}")


def normal_cdf(x):
    """Standard normal CDF; saturates to 0/1 in the far tails."""
    return 0.5 * math.erfc(-x / _SQRT2)


def normal_sf(x):
    """Standard normal upper tail probability ``1 - normal_cdf(x)``."""
    return 0.5 * math.erfc(x / _SQRT2)


def normal_upper_quantile(alpha):
    """Return ``z`` with ``normal_sf(z) == alpha``."""
    _check_alpha(alpha)
    return -_STD_NORMAL.inv_cdf(alpha)


# ---------------------------------------------------------------------------
# incomplete beta / gamma
# ---------------------------------------------------------------------------


def _beta_cf(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a, b, x, y=None):
    """Regularized incomplete beta function I_x(a, b).

    ``y`` may carry ``1 - x`` computed without cancellation by the caller.
    """
    if y is None:
        y = 1.0 - x
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log(y)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, y) / b


def _gamma_series(a, x):
    ap = a
    total = delta = 1.0 / a
    for _ in range(_MAXIT):
        ap += 1.0
        delta *= x / ap
        total += delta
        if abs(delta) < abs(total) * _EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gamma_cf(a, x):
    # upper regularized Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAXIT + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise ArithmeticError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def gammainc(a, x):
    """Regularized lower incomplete gamma function P(a, x)."""
    if x <= 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cf(a, x)


# ---------------------------------------------------------------------------
# Student t
# ---------------------------------------------------------------------------


def t_pdf(x, df):
    _check_df(df)
    log_norm = math.lgamma(0.5 * (df + 1.0)) - math.lgamma(0.5 * df) - 0.5 * math.log(df * math.pi)
    return math.exp(log_norm - 0.5 * (df + 1.0) * math.log1p(x * x / df))


def _t_upper_tail_abs(x, df):
    """P(T > |x|)."""
    x2 = x * x
    if math.isinf(x2):
        return 0.0
    denom = df + x2
    return 0.5 * betainc(0.5 * df, 0.5, df / denom, x2 / denom)


def t_cdf(x, df):
    """CDF of Student's t distribution with ``df`` degrees of freedom."""
    _check_df(df)
    if math.isnan(x):
        return math.nan
    if x == 0.0:
        return 0.5
    tail = _t_upper_tail_abs(x, df)
    return 1.0 - tail if x > 0.0 else tail


def t_sf(x, df):
    """Upper tail ``1 - t_cdf(x, df)``, evaluated without cancellation."""
    return t_cdf(-x, df)


def t_upper_quantile(alpha, df):
    """Upper ``alpha`` quantile: the ``x`` with ``t_sf(x, df) == alpha``."""
    _check_alpha(alpha)
    _check_df(df)
    if alpha == 0.5:
        return 0.0
    if alpha > 0.5:
        return -t_upper_quantile(1.0 - alpha, df)

    lo, hi = 0.0, max(1.0, normal_upper_quantile(alpha))
    while t_sf(hi, df) > alpha:
        lo, hi = hi, 2.0 * hi
    x = 0.5 * (lo + hi)
    for _ in range(300):
        f = t_sf(x, df) - alpha
        if f == 0.0:
            return x
        if f > 0.0:
            lo = x
        else:
            hi = x
        step = f / t_pdf(x, df)
        x_new = x + step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 4.0 * _EPS * max(1.0, abs(x)) or hi - lo <= 4.0 * _EPS * hi:
            return x_new
        x = x_new
    return x


# ---------------------------------------------------------------------------
# chi-square
# ---------------------------------------------------------------------------


def chi_square_cdf(x, df):
    """CDF of the chi-square distribution; 0 for ``x <= 0``."""
    _check_df(df)
    if x <= 0.0:
        return 0.0
    return gammainc(0.5 * df, 0.5 * x)
