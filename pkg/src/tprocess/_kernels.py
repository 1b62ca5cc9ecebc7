"""Compiled series kernels.

Every routine returns ``(log|value|, sign, status, n_terms)`` so that huge
Pochhammer products never overflow.  ``status`` is one of the ``ST_*`` codes
below; callers translate codes into exceptions.
"""
import math

import numpy as np
from numba import njit

ST_OK = 0
ST_NOCONV = 1
ST_DIVERGENT = 2
ST_DOMAIN = 3
ST_NONPOSITIVE = 4

_RESCALE = 1e250
_LOG_RESCALE = 250.0 * math.log(10.0)
_LOG_PI = math.log(math.pi)
# opposite-sign pair terms are subtracted directly only while they differ by 1%
_LOG_CANCEL = math.log(0.99)


@njit(cache=True)
def _is_nonpos_int(x):
    return x <= 0.0 and x == math.floor(x)


@njit(cache=True)
def lgamma_sign(x):
    """Return (log|Gamma(x)|, sign Gamma(x)); x must not be a pole."""
    if x > 0.0:
        return math.lgamma(x), 1.0
    fl = math.floor(x)
    sgn = 1.0 if (int(-fl) % 2 == 0) else -1.0
    return math.lgamma(x), sgn


@njit(cache=True)
def digamma(x):
    if _is_nonpos_int(x):
        return np.nan
    if x < 0.5:
        return digamma(1.0 - x) - math.pi / math.tan(math.pi * x)
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    x2 = 1.0 / (x * x)
    # asymptotic tail, Bernoulli numbers B2..B12
    tail = x2 * (1.0 / 12 - x2 * (1.0 / 120 - x2 * (1.0 / 252 - x2 * (
        1.0 / 240 - x2 * (1.0 / 132 - x2 * 691.0 / 32760)))))
    return acc + math.log(x) - 0.5 / x - tail


@njit(cache=True)
def _log_add(la, sa, lb, sb):
    """Signed log-domain addition."""
    if sb == 0.0 or lb == -np.inf:
        return la, sa
    if sa == 0.0 or la == -np.inf:
        return lb, sb
    if la >= lb:
        big, sbig, small, ssmall = la, sa, lb, sb
    else:
        big, sbig, small, ssmall = lb, sb, la, sa
    r = math.exp(small - big)
    if sbig == ssmall:
        return big + math.log1p(r), sbig
    if r == 1.0:
        return -np.inf, 0.0
    return big + math.log1p(-r), sbig


@njit(cache=True)
def hyp2f1_direct(a, b, c, x, tol, max_terms):
    """Plain Gauss series, terms scaled to avoid overflow."""
    if _is_nonpos_int(c):
        return np.nan, 0.0, ST_DOMAIN, 0
    if x == 0.0:
        return 0.0, 1.0, ST_OK, 1
    # beyond this index the term ratio no longer changes sign
    k_safe = max(-a, -b, -c) + 1.0
    ax = abs(x)
    t = 1.0
    s = 1.0
    lscale = 0.0
    for k in range(max_terms):
        num = (a + k) * (b + k)
        if num == 0.0:
            return lscale + math.log(abs(s)) if s != 0.0 else -np.inf, \
                math.copysign(1.0, s) if s != 0.0 else 0.0, ST_OK, k + 1
        r = num * x / ((c + k) * (k + 1.0))
        t *= r
        s += t
        if abs(s) > _RESCALE or abs(t) > _RESCALE:
            s /= _RESCALE
            t /= _RESCALE
            lscale += _LOG_RESCALE
        ar = abs(r)
        rmax = ar if ar > ax else ax
        if k >= k_safe and rmax < 1.0 and abs(t) <= tol * abs(s) * (1.0 - rmax):
            return lscale + math.log(abs(s)), math.copysign(1.0, s), ST_OK, k + 2
    if s == 0.0:
        return -np.inf, 0.0, ST_NOCONV, max_terms
    return lscale + math.log(abs(s)), math.copysign(1.0, s), ST_NOCONV, max_terms


@njit(cache=True)
def _gauss_sum_log(a, b, c):
    """log|Gamma(c)Gamma(c-a-b)/(Gamma(c-a)Gamma(c-b))| and sign."""
    if _is_nonpos_int(c - a) or _is_nonpos_int(c - b):
        return -np.inf, 0.0
    l1, s1 = lgamma_sign(c)
    l2, s2 = lgamma_sign(c - a - b)
    l3, s3 = lgamma_sign(c - a)
    l4, s4 = lgamma_sign(c - b)
    return l1 + l2 - l3 - l4, s1 * s2 * s3 * s4


@njit(cache=True)
def _connection_nonint(a, b, c, x, tol, max_terms):
    """Analytic continuation around x = 1 for non-integer c - a - b."""
    m = c - a - b
    y = 1.0 - x
    lg1, sg1 = _gauss_sum_log(a, b, c)
    lf1, sf1, st1, n1 = hyp2f1_direct(a, b, 1.0 - m, y, tol, max_terms)
    if _is_nonpos_int(a) or _is_nonpos_int(b):
        lg2, sg2 = -np.inf, 0.0
    else:
        l1, s1 = lgamma_sign(c)
        l2, s2 = lgamma_sign(-m)
        l3, s3 = lgamma_sign(a)
        l4, s4 = lgamma_sign(b)
        lg2, sg2 = l1 + l2 - l3 - l4, s1 * s2 * s3 * s4
    lf2, sf2, st2, n2 = hyp2f1_direct(c - a, c - b, 1.0 + m, y, tol, max_terms)
    status = st1 if st1 != ST_OK else st2
    la, sa = lg1 + lf1, sg1 * sf1
    lb, sb = lg2 + m * math.log(y) + lf2, sg2 * sf2
    lv, sv = _log_add(la, sa, lb, sb)
    return lv, sv, status, n1 + n2


@njit(cache=True)
def _connection_int(a, b, m, x, tol, max_terms):
    """Logarithmic case c = a + b + m, m = 0, 1, 2, ... (x close to 1)."""
    y = 1.0 - x
    c = a + b + m
    total = 0.0
    if m > 0:
        lpre = math.lgamma(m)
        lc, sc = lgamma_sign(c)
        la, sa = lgamma_sign(a + m)
        lb, sb = lgamma_sign(b + m)
        pre = sc * sa * sb * math.exp(lpre + lc - la - lb)
        t = 1.0
        part = 1.0
        for n in range(m - 1):
            t *= (a + n) * (b + n) * y / ((n + 1.0) * (1.0 - m + n))
            part += t
        total = pre * part
    if _is_nonpos_int(a) or _is_nonpos_int(b):
        v = total
        return (math.log(abs(v)) if v != 0.0 else -np.inf), math.copysign(1.0, v), ST_OK, m
    lc, sc = lgamma_sign(c)
    la, sa = lgamma_sign(a)
    lb, sb = lgamma_sign(b)
    pre2 = sc * sa * sb * math.exp(lc - la - lb)
    # (x - 1)^m = (-1)^m y^m
    pre2 *= (-1.0) ** m * y ** m
    logy = math.log(y)
    t = 1.0 / math.exp(math.lgamma(m + 1.0))
    s = 0.0
    status = ST_NOCONV
    n_used = max_terms
    for n in range(max_terms):
        if n > 0:
            t *= (a + m + n - 1.0) * (b + m + n - 1.0) * y / (n * (n + m))
        bracket = logy - digamma(n + 1.0) - digamma(n + m + 1.0) \
            + digamma(a + n + m) + digamma(b + n + m)
        term = t * bracket
        s += term
        if n > 2 and abs(term) <= tol * abs(s) and abs(t) <= tol * abs(s):
            status = ST_OK
            n_used = n + 1
            break
    v = total - pre2 * s
    return (math.log(abs(v)) if v != 0.0 else -np.inf), math.copysign(1.0, v), status, n_used + m


@njit(cache=True)
def _hyp2f1_near_one(a, b, c, x, tol, max_terms):
    """x > 0.9 and c - a - b >= 0, neither a nor b a nonpositive integer."""
    gap = c - a - b
    if _is_nonpos_int(c - a) or _is_nonpos_int(c - b):
        lv, sv, st, n = hyp2f1_direct(c - a, c - b, c, x, tol, max_terms)
        return lv + gap * math.log1p(-x), sv, st, n
    mi = math.floor(gap + 0.5)
    if abs(gap - mi) < 1e-9:
        return _connection_int(a, b, int(mi), x, tol, max_terms)
    if abs(gap - mi) > 1e-5:
        return _connection_nonint(a, b, c, x, tol, max_terms)
    lv, sv, st, n = hyp2f1_direct(a, b, c, x, tol, max_terms)
    if st == ST_OK:
        return lv, sv, st, n
    return _connection_nonint(a, b, c, x, tol, max_terms)


@njit(cache=True)
def hyp2f1(a, b, c, x, tol, max_terms):
    """Gauss hypergeometric function on (-1, 1] with range transformations."""
    if _is_nonpos_int(c):
        return np.nan, 0.0, ST_DOMAIN, 0
    if x == 0.0:
        return 0.0, 1.0, ST_OK, 1
    if x > 1.0 or x <= -1.0:
        return np.nan, 0.0, ST_DOMAIN, 0
    gap = c - a - b
    if x == 1.0:
        if _is_nonpos_int(a) or _is_nonpos_int(b):
            return hyp2f1_direct(a, b, c, x, tol, max_terms)
        if gap <= 0.0:
            return np.nan, 0.0, ST_DIVERGENT, 0
        lv, sv = _gauss_sum_log(a, b, c)
        return lv, sv, ST_OK, 1
    if _is_nonpos_int(a) or _is_nonpos_int(b):
        return hyp2f1_direct(a, b, c, x, tol, max_terms)
    if x < -0.5:
        # Pfaff: argument x/(x-1) lies in (1/3, 1/2)
        lv, sv, st, n = hyp2f1_direct(a, c - b, c, x / (x - 1.0), tol, max_terms)
        return lv - a * math.log1p(-x), sv, st, n
    if x > 0.9 and gap < 0.0:
        # Euler: the transformed function has gap a + b - c > 0
        lv, sv, st, n = _hyp2f1_near_one(c - a, c - b, c, x, tol, max_terms)
        return lv + gap * math.log1p(-x), sv, st, n
    if x > 0.9:
        return _hyp2f1_near_one(a, b, c, x, tol, max_terms)
    if x > 0.5 and gap > 0.0:
        if _is_nonpos_int(c - a) or _is_nonpos_int(c - b):
            # Euler transformation terminates
            lv, sv, st, n = hyp2f1_direct(c - a, c - b, c, x, tol, max_terms)
            return lv + gap * math.log1p(-x), sv, st, n
        if abs((c - a) * (c - b)) < abs(a * b):
            lv, sv, st, n = hyp2f1_direct(c - a, c - b, c, x, tol, max_terms)
            return lv + gap * math.log1p(-x), sv, st, n
    return hyp2f1_direct(a, b, c, x, tol, max_terms)


@njit(cache=True)
def log_f4(a, b, c, cp, w, z, tol, max_terms):
    """Appell F4 as a series over k of 2F1(a+k, b+k; c; w), signed log form."""
    if z == 0.0:
        return hyp2f1_direct(a, b, c, w, tol, max_terms)
    # asymptotic ratio of consecutive outer terms
    r_inf = abs(z) / (1.0 - math.sqrt(abs(w))) ** 2
    k_safe = max(-a, -b, -cp) + 1.0
    S, sS = -np.inf, 0.0
    lpref, spref = 0.0, 1.0
    prev = -np.inf
    total = 0
    for k in range(max_terms):
        if k > 0:
            f = (a + k - 1.0) * (b + k - 1.0) * z / (k * (cp + k - 1.0))
            if f == 0.0:
                return S, sS, ST_OK, total
            lpref += math.log(abs(f))
            if f < 0.0:
                spref = -spref
        lh, sh, st, n = hyp2f1_direct(a + k, b + k, c, w, tol, max_terms)
        total += n
        if st != ST_OK:
            return S, sS, st, total
        T = lpref + lh
        S, sS = _log_add(S, sS, T, spref * sh)
        if k >= k_safe and k > 0 and T < prev:
            ratio = math.exp(T - prev)
            rr = ratio if ratio > r_inf else r_inf
            if rr < 1.0 and T - math.log(1.0 - rr) <= math.log(tol) + S:
                return S, sS, ST_OK, total
        prev = T
    return S, sS, ST_NOCONV, total


@njit(cache=True)
def log_f4_pos(a, b, c, cp, w, z, tol, max_terms):
    """F4 for a, b, c, cp > 0 and w, z >= 0: every term is positive.

    The inner series is truncated against the running total of the outer
    sum rather than against itself, which is what makes pairwise-likelihood
    evaluation affordable.
    """
    logtol = math.log(tol)
    r_inf = z / (1.0 - math.sqrt(w)) ** 2
    S = -np.inf
    lpref = 0.0
    prev = -np.inf
    total = 0
    for k in range(max_terms):
        if k > 0:
            if z == 0.0:
                return S, 1.0, ST_OK, total
            lpref += math.log((a + k - 1.0) * (b + k - 1.0) * z / (k * (cp + k - 1.0)))
        ak = a + k
        bk = b + k
        t = 1.0
        s = 1.0
        lscale = 0.0
        ok = w == 0.0
        if not ok:
            # inner stop: relative to this series, or negligible against S
            lcut = logtol + S - lpref
            for m in range(max_terms):
                r = (ak + m) * (bk + m) * w / ((c + m) * (m + 1.0))
                t *= r
                s += t
                total += 1
                if s > _RESCALE:
                    s /= _RESCALE
                    t /= _RESCALE
                    lscale += _LOG_RESCALE
                if r < 1.0:
                    rem = t * r / (1.0 - (r if r > w else w))
                    if rem <= tol * s or math.log(rem) + lscale <= lcut:
                        ok = True
                        break
        if not ok:
            return S, 1.0, ST_NOCONV, total
        T = lpref + math.log(s) + lscale
        if T > S:
            S = T + math.log1p(math.exp(S - T)) if S != -np.inf else T
        else:
            S = S + math.log1p(math.exp(T - S))
        if k > 0 and T < prev:
            ratio = math.exp(T - prev)
            rr = ratio if ratio > r_inf else r_inf
            if rr < 1.0 and T - math.log(1.0 - rr) <= logtol + S:
                return S, 1.0, ST_OK, total
        prev = T
    return S, 1.0, ST_NOCONV, total


@njit(cache=True)
def log_pair_series_neg(a, cp, w, z, tol, max_terms):
    """Even and odd F4 parts of the pair density merged for rho*yi*yj < 0.

    For each k the combination
    ``F(al, al; 1/2; w) - 2 G^2(al+1/2)/G^2(al) sqrt(w) F(al+1/2, al+1/2; 3/2; w)``
    with ``al = a + k`` equals
    ``G^2(al+1/2) / (sqrt(pi) G(2al+1/2)) F(2al, 2al; 2al+1/2; (1 - sqrt(w))/2)``
    (a quadratic transformation), whose series has positive terms.  The
    sqrt(pi) is left out of the result.
    """
    logtol = math.log(tol)
    t = 0.5 * (1.0 - math.sqrt(w))
    r_inf = z / (1.0 + math.sqrt(w)) ** 2
    S = -np.inf
    lpref = 0.0
    prev = -np.inf
    total = 0
    for k in range(max_terms):
        if k > 0:
            if z == 0.0:
                return S, ST_OK, total
            lpref += math.log((a + k - 1.0) * (a + k - 1.0) * z / (k * (cp + k - 1.0)))
        al = a + k
        lg = 2.0 * math.lgamma(al + 0.5) - math.lgamma(2.0 * al + 0.5)
        aa = 2.0 * al
        cc = 2.0 * al + 0.5
        tt = 1.0
        s = 1.0
        lscale = 0.0
        ok = False
        lcut = logtol + S - lpref - lg
        for m in range(max_terms):
            r = (aa + m) * (aa + m) * t / ((cc + m) * (m + 1.0))
            tt *= r
            s += tt
            total += 1
            if s > _RESCALE:
                s /= _RESCALE
                tt /= _RESCALE
                lscale += _LOG_RESCALE
            if r < 1.0:
                rem = tt * r / (1.0 - (r if r > t else t))
                if rem <= tol * s or math.log(rem) + lscale <= lcut:
                    ok = True
                    break
        if not ok:
            return S, ST_NOCONV, total
        T = lpref + lg + math.log(s) + lscale
        if T > S:
            S = T + math.log1p(math.exp(S - T)) if S != -np.inf else T
        else:
            S = S + math.log1p(math.exp(T - S))
        if k > 0 and T < prev:
            ratio = math.exp(T - prev)
            rr = ratio if ratio > r_inf else r_inf
            if rr < 1.0 and T - math.log(1.0 - rr) <= logtol + S:
                return S, ST_OK, total
        prev = T
    return S, ST_NOCONV, total


@njit(cache=True)
def t_logpdf(y, nu):
    return (math.lgamma((nu + 1.0) / 2.0) - math.lgamma(nu / 2.0)
            - 0.5 * (_LOG_PI + math.log(nu))
            - (nu + 1.0) / 2.0 * math.log1p(y * y / nu))


@njit(cache=True, nogil=True)
def bivariate_t_logpdf(yi, yj, rho, nu, tol, max_terms, out, status):
    """Standardised bivariate t log-density for arrays of pairs.

    Writes into ``out`` and ``status`` (one code per pair).  Pairs with
    ``rho*yi*yj > 0`` add two positive F4 terms.  For opposite signs the
    second term is subtracted, unless the two nearly cancel; then the merged
    positive series of :func:`log_pair_series_neg` is used instead.
    """
    lg1 = math.lgamma((nu + 1.0) / 2.0)
    lg2 = math.lgamma(nu / 2.0)
    a1 = (nu + 1.0) / 2.0
    a2 = nu / 2.0 + 1.0
    lnu = math.log(nu)
    const1 = nu * lnu + 2.0 * lg1 - _LOG_PI - 2.0 * lg2
    const2 = (nu + 2.0) * lnu - math.log(2.0 * math.pi)
    for p in range(yi.shape[0]):
        r = rho[p]
        x1 = yi[p]
        x2 = yj[p]
        if r == 0.0:
            out[p] = t_logpdf(x1, nu) + t_logpdf(x2, nu)
            status[p] = ST_OK
            continue
        if not (abs(r) < 1.0):
            out[p] = np.nan
            status[p] = ST_DOMAIN
            continue
        ll = math.log(x1 * x1 + nu) + math.log(x2 * x2 + nu)
        el = math.exp(ll)
        r2 = r * r
        w = r2 * x1 * x1 * x2 * x2 / el
        z = nu * nu * r2 / el
        l1m = math.log1p(-r2)
        prod = r * x1 * x2
        lf1, _, st1, _ = log_f4_pos(a1, a1, 0.5, nu / 2.0, w, z, tol, max_terms)
        if st1 != ST_OK:
            out[p] = np.nan
            status[p] = st1
            continue
        lt1 = const1 - a1 * ll + a1 * l1m + lf1
        if prod == 0.0:
            out[p] = lt1
            status[p] = ST_OK
            continue
        lf2, _, st2, _ = log_f4_pos(a2, a2, 1.5, nu / 2.0, w, z, tol, max_terms)
        if st2 != ST_OK:
            out[p] = np.nan
            status[p] = st2
            continue
        lt2 = math.log(abs(prod)) + const2 - a2 * ll + a1 * l1m + lf2
        d = lt2 - lt1
        if prod > 0.0:
            out[p] = lt1 + math.log1p(math.exp(d))
            status[p] = ST_OK
        elif d < _LOG_CANCEL:
            out[p] = lt1 + math.log1p(-math.exp(d))
            status[p] = ST_OK
        else:
            # too much cancellation between the two terms
            lc, stc, _ = log_pair_series_neg(a1, nu / 2.0, w, z, tol, max_terms)
            out[p] = const1 - 0.5 * _LOG_PI - a1 * ll + a1 * l1m + lc
            status[p] = stc
            if stc != ST_OK:
                out[p] = np.nan


@njit(cache=True)
def hyp2f1_array(a, b, c, x, tol, max_terms, out, status):
    for i in range(x.shape[0]):
        lv, sv, st, _ = hyp2f1(a, b, c, x[i], tol, max_terms)
        out[i] = sv * math.exp(lv) if st == ST_OK else np.nan
        status[i] = st
