"""Regularized incomplete beta function and the t / F tail probabilities
built on it."""

import math

import numpy as np

_EPS = 1e-15
_FPMIN = 1e-300
_MAXIT = 20000

_lgamma = np.vectorize(math.lgamma, otypes=[np.float64])


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b), modified Lentz, elementwise."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, _MAXIT + 1):
        m2 = 2.0 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        d = 1.0 / d
        h = np.where(active, h * d * c, h)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) >= _EPS
        if not active.any():
            break
    return h


def betainc(a, b, x, xc=None):
    """Regularized incomplete beta I_x(a, b), vectorised over all arguments.

    ``xc`` may supply ``1 - x`` computed without cancellation; when given it
    is used for the complementary branch, which keeps upper tails accurate.
    """
    a, b, x = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (a, b, x)))
    xc = 1.0 - x if xc is None else np.broadcast_to(np.asarray(xc, dtype=np.float64), x.shape)
    if np.any((x < 0) | (x > 1)):
        raise ValueError("x must lie in [0, 1]")
    if np.any((a <= 0) | (b <= 0)):
        raise ValueError("a and b must be positive")
    out = np.empty(x.shape)
    zero = x <= 0.0
    one = xc <= 0.0
    inner = ~(zero | one)
    out[zero] = 0.0
    out[one] = 1.0
    if inner.any():
        ai, bi, xi, xci = a[inner], b[inner], x[inner], xc[inner]
        log_front = (_lgamma(ai + bi) - _lgamma(ai) - _lgamma(bi)
                     + ai * np.log(xi) + bi * np.log(xci))
        front = np.exp(log_front)
        direct = xi < (ai + 1.0) / (ai + bi + 2.0)
        res = np.empty(xi.shape)
        if direct.any():
            res[direct] = front[direct] * _betacf(ai[direct], bi[direct], xi[direct]) / ai[direct]
        flip = ~direct
        if flip.any():
            res[flip] = 1.0 - front[flip] * _betacf(bi[flip], ai[flip], xci[flip]) / bi[flip]
        out[inner] = res
    return out if out.ndim else float(out)


def t_sf_two_sided(t, df):
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    t = np.asarray(t, dtype=np.float64)
    df = np.asarray(df, dtype=np.float64)
    t2 = t * t
    with np.errstate(over="ignore", invalid="ignore"):
        x = df / (df + t2)
        xc = t2 / (df + t2)
    inf = np.isinf(t2)
    x = np.where(inf, 0.0, x)
    xc = np.where(inf, 1.0, xc)
    return betainc(df / 2.0, 0.5, x, xc)


def f_sf(f, dfn, dfd):
    """Upper tail P(F >= f) of the F distribution."""
    f = np.asarray(f, dtype=np.float64)
    dfn = np.asarray(dfn, dtype=np.float64)
    dfd = np.asarray(dfd, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        denom = dfd + dfn * f
        x = dfd / denom
        xc = dfn * f / denom
    inf = np.isinf(f)
    x = np.where(inf, 0.0, x)
    xc = np.where(inf, 1.0, xc)
    return betainc(dfd / 2.0, dfn / 2.0, x, xc)
