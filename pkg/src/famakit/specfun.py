"""Special-function kernels for the outage analysis.

Scalar-or-array wrappers around the Bessel, Marcum-Q, Laguerre and
incomplete beta/gamma machinery used by the analytic outage engine.
All functions validate their stated domains and broadcast over numpy
arrays; scaled variants are used wherever raw values would overflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as sp
from scipy import stats


@dataclass(frozen=True)
class QuadratureRule:
    """Generalized Gauss-Laguerre rule for the weight x^alpha e^{-x} on (0, inf).

    nodes are the roots of the degree-`order` generalized Laguerre
    polynomial, strictly positive and increasing; weights are positive and
    sum to Gamma(alpha + 1).
    """

    alpha: float
    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.shape != (self.order,) or weights.shape != (self.order,):
            raise ValueError("nodes/weights must have shape (order,)")
        if not (np.all(nodes > 0) and np.all(np.diff(nodes) > 0)):
            raise ValueError("nodes must be strictly positive and increasing")
        if not np.all(weights > 0):
            raise ValueError("weights must be strictly positive")


def _as_float(x, name: str):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def bessel_j0(x):
    """Zeroth-order Bessel function of the first kind, J0(x)."""
    arr = _as_float(x, "x")
    out = sp.j0(arr)
    return out if arr.ndim else float(out)


def bessel_i_scaled(nu, x):
    """Exponentially scaled modified Bessel function, e^{-x} I_nu(x).

    Requires x >= 0.  Negative orders are allowed only when integral
    (I_{-n} = I_n); negative non-integer orders are rejected since the
    outage kernel never produces them.
    """
    nu = float(nu)
    arr = _as_float(x, "x")
    if np.any(arr < 0):
        raise ValueError("x must be nonnegative")
    if nu < 0:
        if nu != int(nu):
            raise ValueError("negative non-integer order not supported")
        nu = -nu
    out = sp.ive(nu, arr)
    return out if arr.ndim else float(out)


def marcum_q(nu, a, b):
    """Marcum Q-function Q_nu(a, b) of real order nu >= 1/2.

    Tail probability of a noncentral chi distribution: equals
    P[X > b^2] for X ~ noncentral chi-square with 2*nu degrees of freedom
    and noncentrality a^2.  Values are probabilities in [0, 1].
    """
    nu = float(nu)
    if not np.isfinite(nu) or nu < 0.5:
        raise ValueError("order nu must be finite and >= 0.5")
    a_arr = _as_float(a, "a")
    b_arr = _as_float(b, "b")
    if np.any(a_arr < 0) or np.any(b_arr < 0):
        raise ValueError("a and b must be nonnegative")
    a_b, b_b = np.broadcast_arrays(a_arr, b_arr)
    out = np.empty(b_b.shape, dtype=float)
    zero_a = a_b == 0
    # ncx2 is undefined at zero noncentrality; fall back to the central
    # chi-square tail, Q_nu(0, b) = Gamma(nu, b^2/2)/Gamma(nu).
    if np.any(zero_a):
        out[zero_a] = sp.gammaincc(nu, b_b[zero_a] ** 2 / 2.0)
    if np.any(~zero_a):
        out[~zero_a] = stats.ncx2.sf(b_b[~zero_a] ** 2, 2.0 * nu, a_b[~zero_a] ** 2)
    out = np.clip(out, 0.0, 1.0)
    return out if (a_arr.ndim or b_arr.ndim) else float(out)


def laguerre_poly(alpha, n, x):
    """Generalized Laguerre polynomial L^alpha_n(x) by three-term recurrence.

    L^a_0 = 1, L^a_1 = a + 1 - x,
    (k+1) L^a_{k+1} = (2k + a + 1 - x) L^a_k - (k + a) L^a_{k-1}.
    """
    n = int(n)
    if n < 0:
        raise ValueError("degree n must be nonnegative")
    alpha = float(alpha)
    arr = np.asarray(x, dtype=float)
    prev = np.ones_like(arr)
    if n == 0:
        return prev if arr.ndim else float(prev)
    cur = alpha + 1.0 - arr
    for k in range(1, n):
        prev, cur = cur, ((2 * k + alpha + 1.0 - arr) * cur - (k + alpha) * prev) / (k + 1.0)
    return cur if arr.ndim else float(cur)


def gauss_laguerre_rule(alpha, order) -> QuadratureRule:
    """Generalized Gauss-Laguerre rule with weight x^alpha e^{-x}.

    Exact for polynomials of degree <= 2*order - 1 against the weight;
    the weights sum to Gamma(alpha + 1).
    """
    alpha = float(alpha)
    order = int(order)
    if not alpha > -1.0:
        raise ValueError("alpha must exceed -1")
    if order < 1:
        raise ValueError("order must be a positive integer")
    nodes, weights = sp.roots_genlaguerre(order, alpha)
    return QuadratureRule(alpha=alpha, order=order, nodes=nodes, weights=weights)


def log_gamma(x):
    """Natural log of the gamma function for positive real argument."""
    arr = _as_float(x, "x")
    if np.any(arr <= 0):
        raise ValueError("x must be positive")
    out = sp.gammaln(arr)
    return out if arr.ndim else float(out)


def pochhammer(x, j):
    """Rising factorial (x)_j = x (x+1) ... (x+j-1), with (x)_0 = 1."""
    j = int(j)
    if j < 0:
        raise ValueError("j must be a nonnegative integer")
    arr = _as_float(x, "x")
    out = sp.poch(arr, j)
    return out if arr.ndim else float(out)


def reg_inc_beta(x, a, b):
    """Regularized incomplete beta function I_x(a, b)."""
    arr = _as_float(x, "x")
    if np.any((arr < 0) | (arr > 1)):
        raise ValueError("x must lie in [0, 1]")
    a_arr = _as_float(a, "a")
    b_arr = _as_float(b, "b")
    if np.any(a_arr <= 0) or np.any(b_arr <= 0):
        raise ValueError("a and b must be positive")
    out = sp.betainc(a_arr, b_arr, arr)
    scalar = not (arr.ndim or a_arr.ndim or b_arr.ndim)
    return float(out) if scalar else out


def ive_orders(max_order: int, z) -> np.ndarray:
    """Scaled Bessel e^{-z} I_nu(z) for all orders nu = 0..max_order at once.

    Returns an array of shape (max_order + 1, z.size).  The outage kernel
    needs a full ladder of consecutive orders at the same argument; this
    evaluates the ladder with O(1) scipy calls via the three-term
    recurrence, choosing the stable direction per point:

    - tiny z: leading series term (relative error <= (z/2)^2),
    - z below ~order^2/14: downward (Miller) recurrence normalized at
      order 0, where the unwanted solution decays,
    - larger z: upward recurrence from orders 0 and 1, whose error
      amplification exp(order^2/(2 z)) is bounded by the switch point.

    Orders whose true value underflows come back as 0; in the kernel's
    sums the order-(m-1) term never underflows, so dropped terms are
    negligible against it.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z < 0):
        raise ValueError("z must be nonnegative")
    D = int(max_order)
    out = np.zeros((D + 1, z.size))
    if D == 0:
        out[0] = sp.ive(0, z)
        return out
    tiny = z < 1e-6
    z_switch = max(D * D / 13.8, 2.0)
    up = (~tiny) & (z >= z_switch)
    down = (~tiny) & (~up)
    if tiny.any():
        zt = z[tiny]
        lg = sp.gammaln(np.arange(D + 1) + 1.0)
        with np.errstate(divide="ignore"):
            logz = np.where(zt > 0, np.log(zt / 2.0), -np.inf)
        out[:, tiny] = np.exp(
            np.arange(D + 1)[:, None] * logz[None, :] - lg[:, None] - zt[None, :]
        )
        out[0, tiny] = np.exp(-zt)
    if up.any():
        zu = z[up]
        prev = sp.ive(0, zu)
        cur = sp.ive(1, zu)
        out[0, up] = prev
        out[1, up] = cur
        for nu in range(1, D):
            prev, cur = cur, np.maximum(prev - (2.0 * nu / zu) * cur, 0.0)
            out[nu + 1, up] = cur
    if down.any():
        zd = z[down]
        n_start = int(np.ceil(1.9 * D)) + 12
        f_up = np.zeros_like(zd)
        f_cur = np.full_like(zd, 1e-270)
        ladder = np.zeros((D + 1, zd.size))
        for nu in range(n_start, 0, -1):
            f_down = f_up + (2.0 * nu / zd) * f_cur
            over = f_down > 1e260
            if over.any():
                f_down[over] *= 1e-260
                f_cur[over] *= 1e-260
                ladder[:, over] *= 1e-260
            if nu - 1 <= D:
                ladder[nu - 1] = f_down
            f_up, f_cur = f_cur, f_down
        ref = sp.ive(0, zd)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(ladder[0] > 0, ref / ladder[0], 0.0)
        out[:, down] = ladder * scale
    return out
