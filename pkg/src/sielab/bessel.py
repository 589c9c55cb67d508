r"""Bessel functions of integer order used by the radial solution bases.

Real-argument values :math:`I_m, K_m, J_m, Y_m, H^{(1)}_m` come from
``scipy.special`` (AMOS-based).  The two logarithmic derivatives that feed the
Dirichlet-to-Neumann eigenvalues are computed here directly:

* :func:`k_ratio` evaluates :math:`K_m'(z)/K_m(z)` for complex ``z`` with
  positive real part from the Steed/Temme continued fraction for
  :math:`K_1/K_0` (modified Lentz evaluation) or, for small ``|z|``, from the
  power series of :math:`K_0, K_1`; higher orders follow from the upward ratio
  recurrence, which is stable for the dominant solution :math:`K_m`.
* :func:`hankel1_log_derivative` does the same for :math:`H^{(1)}_m` on the
  positive real axis.

Only ratios are formed, so no value overflows even when :math:`K_m` or
:math:`Y_m` themselves exceed the double range.
"""

import numpy as np
from scipy import special

from .errors import DomainError, NumericError

MAX_ORDER = 200
_EULER_GAMMA = 0.57721566490153286061
_CF_MAX_TERMS = 10_000
_SERIES_RADIUS = 2.0


def _check_order(m):
    m = np.asarray(m)
    if not np.all(np.equal(np.mod(m, 1), 0)):
        raise DomainError("order must be an integer")
    if np.any(np.abs(m) > MAX_ORDER):
        raise DomainError(f"order exceeds the supported bound |m| <= {MAX_ORDER}")
    return np.abs(m.astype(int))


def _check_real_arg(x, lower, upper, name):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= lower) or np.any(x > upper):
        raise DomainError(f"{name}: argument must lie in ({lower:g}, {upper:g}]")
    return x


def _out(v):
    return v.item() if np.ndim(v) == 0 else v


def mod_bessel_i(m, x):
    """Modified Bessel function of the first kind, :math:`I_m(x)`.

    Parameters
    ----------
    m : int or array_like
        Integer order, ``|m| <= 200``.
    x : float or array_like
        Argument in ``(0, 700]``.
    """
    m = _check_order(m)
    x = _check_real_arg(x, 0.0, 700.0, "mod_bessel_i")
    return _out(special.iv(m, x))


def mod_bessel_k(m, x):
    """Modified Bessel function of the second kind, :math:`K_m(x)`, ``x`` in ``(1e-8, 700]``."""
    m = _check_order(m)
    x = _check_real_arg(x, 1e-8, 700.0, "mod_bessel_k")
    return _out(special.kv(m, x))


def mod_bessel_i_prime(m, x):
    """Derivative :math:`I_m'(x) = I_{m+1}(x) + (m/x) I_m(x)`."""
    m = _check_order(m)
    x = _check_real_arg(x, 0.0, 700.0, "mod_bessel_i_prime")
    return _out(special.ivp(m, x))


def mod_bessel_k_prime(m, x):
    """Derivative :math:`K_m'(x)`."""
    m = _check_order(m)
    x = _check_real_arg(x, 1e-8, 700.0, "mod_bessel_k_prime")
    return _out(special.kvp(m, x))


def bessel_j(m, x):
    """Bessel function :math:`J_m(x)` for real ``x`` in ``(0, 1e4]``; negative orders allowed."""
    s = np.where(np.asarray(m) < 0, (-1.0) ** np.abs(np.asarray(m)), 1.0)
    mm = _check_order(m)
    x = _check_real_arg(x, 0.0, 1e4, "bessel_j")
    return _out(s * special.jv(mm, x))


def bessel_y(m, x):
    """Bessel function :math:`Y_m(x)` for real ``x`` in ``(1e-8, 1e4]``; negative orders allowed."""
    s = np.where(np.asarray(m) < 0, (-1.0) ** np.abs(np.asarray(m)), 1.0)
    mm = _check_order(m)
    x = _check_real_arg(x, 1e-8, 1e4, "bessel_y")
    return _out(s * special.yv(mm, x))


def hankel1(m, x):
    r"""Hankel function :math:`H^{(1)}_m(x) = J_m(x) + i Y_m(x)` for ``x`` in ``(1e-8, 1e4]``.

    Negative orders use :math:`H^{(1)}_{-m} = (-1)^m H^{(1)}_m`.
    """
    s = np.where(np.asarray(m) < 0, (-1.0) ** np.abs(np.asarray(m)), 1.0)
    mm = _check_order(m)
    x = _check_real_arg(x, 1e-8, 1e4, "hankel1")
    return _out(s * (special.jv(mm, x) + 1j * special.yv(mm, x)))


def hankel1_prime(m, x):
    r"""Derivative :math:`H^{(1)\prime}_m(x) = (H^{(1)}_{m-1}(x) - H^{(1)}_{m+1}(x))/2`."""
    mm = np.asarray(m)
    return _out(0.5 * (np.asarray(hankel1(mm - 1, x)) - np.asarray(hankel1(mm + 1, x))))


def hankel1_log_derivative_all(order_max, x):
    r"""Return :math:`H^{(1)\prime}_m(x)/H^{(1)}_m(x)` for ``m = 0..order_max``.

    Uses the upward recurrence for :math:`t_m = H_{m+1}/H_m`,
    :math:`t_m = 2m/x - 1/t_{m-1}`, started from library values of
    :math:`H_0, H_1`.
    """
    order_max = int(_check_order(order_max))
    x = float(_check_real_arg(x, 1e-8, 1e4, "hankel1_log_derivative"))
    h0 = special.jv(0, x) + 1j * special.yv(0, x)
    h1 = special.jv(1, x) + 1j * special.yv(1, x)
    out = np.empty(order_max + 1, dtype=complex)
    t = h1 / h0
    out[0] = -t
    for m in range(1, order_max + 1):
        out[m] = 1.0 / t - m / x
        t = 2.0 * m / x - 1.0 / t
    return out


def hankel1_log_derivative(m, x):
    r""":math:`H^{(1)\prime}_m(x)/H^{(1)}_m(x)` for integer ``m`` (even in ``m``)."""
    m = int(_check_order(m))
    return complex(hankel1_log_derivative_all(m, x)[m])


def _k1_over_k0_series(z):
    # Power series of K_0 and K_1 about the origin, adequate for |z| < 2.
    w = 0.25 * z * z
    log_term = np.log(0.5 * z) + _EULER_GAMMA
    term = 1.0 + 0j
    harmonic = 0.0
    i0 = 0j
    k0_tail = 0j
    # I_1(z) and the psi-sum of K_1
    term1 = 0.5 * z
    i1 = 0j
    k1_tail = 0j
    psi_a = -_EULER_GAMMA            # psi(k+1)
    psi_b = 1.0 - _EULER_GAMMA       # psi(k+2)
    for k in range(60):
        if k > 0:
            term = term * w / (k * k)
            harmonic += 1.0 / k
            term1 = term1 * w / (k * (k + 1))
            psi_a += 1.0 / k
            psi_b += 1.0 / (k + 1)
        i0 += term
        k0_tail += term * harmonic
        i1 += term1
        k1_tail += (psi_a + psi_b) * term1
        if abs(term) < 1e-18 * abs(i0) and k > 2:
            break
    k0 = -log_term * i0 + k0_tail
    k1 = 1.0 / z + np.log(0.5 * z) * i1 - 0.5 * k1_tail
    return k1 / k0


def _k1_over_k0_cf(z):
    # K_1/K_0 = (z + 1/2 - h/4)/z with the continued fraction
    # h = 1/(b_1 + a_2/(b_2 + a_3/(b_3 + ...))), b_i = 2(z+i), a_i = -(i-1/2)^2,
    # evaluated by the modified Lentz algorithm.
    tiny = 1e-300
    eps = 1e-16
    f = tiny
    c = f
    d = 0j
    for i in range(1, _CF_MAX_TERMS + 1):
        a = 1.0 if i == 1 else -(i - 0.5) ** 2
        b = 2.0 * (z + i)
        d = b + a * d
        if d == 0:
            d = tiny
        c = b + a / c
        if c == 0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < eps:
            return (z + 0.5 - 0.25 * f) / z
    raise NumericError(
        f"k_ratio: continued fraction did not converge in {_CF_MAX_TERMS} terms (m=0, z={z!r})"
    )


def k_ratio_all(order_max, z):
    r"""Return :math:`K_m'(z)/K_m(z)` for ``m = 0..order_max``.

    Parameters
    ----------
    order_max : int
        Largest order, at most 200.
    z : complex
        Argument with ``Re z > 1e-8``.

    Raises
    ------
    NumericError
        If the continued fraction fails to converge within ``10**4`` terms.
    """
    order_max = int(_check_order(order_max))
    z = complex(z)
    if not np.isfinite(z) or z.real <= 1e-8:
        raise DomainError("k_ratio: argument must satisfy Re z > 1e-8")
    r = _k1_over_k0_series(z) if abs(z) < _SERIES_RADIUS else _k1_over_k0_cf(z)
    out = np.empty(order_max + 1, dtype=complex)
    out[0] = -r
    for m in range(1, order_max + 1):
        r = 1.0 / r + 2.0 * m / z      # K_{m+1}/K_m
        out[m] = m / z - r
    return out


def k_ratio(m, z):
    r""":math:`K_m'(z)/K_m(z)` for integer order ``|m| <= 200`` and ``Re z > 0``.

    Examples
    --------
    >>> round(k_ratio(0, 1.0).real, 12)
    -1.42962539826
    """
    m = int(_check_order(m))
    return complex(k_ratio_all(m, z)[m])
