"""Classical stability boundary of the odd open antiferromagnetic chain.

The bare momentum matrix ``A2 = mu M + h H + K`` of a chain with
``N = 2M + 1`` sites is tridiagonal with diagonal ``(a, b, c, b, ..., b, a)``
and unit off-diagonals, where ``a = mu + h``, ``b = 2mu - h`` and
``c = 2mu + h``.  Its determinant has a closed form in Chebyshev
polynomials of ``x = (bc - 2)/2``; the antiparallel configuration is stable
where the matrix is positive definite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoStableWindow

BISECT_TOL = 1e-13


@dataclass(frozen=True)
class BoundaryParams:
    mu: float
    h: float

    @property
    def a(self):
        return self.mu + self.h

    @property
    def b(self):
        return 2 * self.mu - self.h

    @property
    def c(self):
        return 2 * self.mu + self.h

    @property
    def x(self):
        return 0.5 * (self.b * self.c - 2)

    @property
    def z2(self):
        return 4 / (self.b * self.c) - 1

    @property
    def r(self):
        if self.mu == 1:
            return math.inf
        return 1 + 2 * self.h / ((2 * self.mu - self.h) * (1 - self.mu ** 2))


def _check_odd(N):
    if N < 3 or N % 2 == 0:
        raise ValueError(f"N must be odd and >= 3, got {N}")


def chain_diagonal(N, mu, h):
    """Diagonal of the bare A2: ``mu M + h H``."""
    _check_odd(N)
    m = np.full(N, 2.0 * mu)
    m[0] = m[-1] = mu
    sign = np.where(np.arange(N) % 2 == 0, 1.0, -1.0)
    return m + h * sign


def leading_pivots(N, mu, h, offdiag=None):
    """Pivots ``d_k = D_k / D_{k-1}`` of the LDL^t factorization of A2.

    The counts of negative pivots and negative eigenvalues coincide (Sturm
    sequence), so all pivots are positive exactly when A2 is positive
    definite.  ``offdiag`` defaults to unit couplings.
    """
    diag = chain_diagonal(N, mu, h)
    off = np.ones(N - 1) if offdiag is None else np.asarray(offdiag, dtype=float)
    piv = np.empty(N)
    piv[0] = diag[0]
    for k in range(1, N):
        if piv[k - 1] == 0:
            piv[k - 1] = np.finfo(float).tiny
        piv[k] = diag[k] - off[k - 1] ** 2 / piv[k - 1]
    return piv


def _scaled_determinant(N, mu, h):
    """Three-term recurrence for det A2 as ``(mantissa, log_scale)``."""
    diag = chain_diagonal(N, mu, h)
    f_prev, f = 1.0, diag[0]
    log_scale = 0.0
    for k in range(1, N):
        f_prev, f = f, diag[k] * f - f_prev
        big = max(abs(f), abs(f_prev))
        if big > 1e100:
            f /= big
            f_prev /= big
            log_scale += math.log(big)
    return f, log_scale


def determinant_direct(N, mu, h):
    """det A2 from the tridiagonal recurrence ``f_k = d_k f_{k-1} - f_{k-2}``.

    Saturates to ``+-inf`` when the value exceeds the float range.
    """
    f, log_scale = _scaled_determinant(N, mu, h)
    if f == 0:
        return 0.0
    log_abs = math.log(abs(f)) + log_scale
    if log_abs > 709.0:
        return math.copysign(math.inf, f)
    return f * math.exp(log_scale)


def chebyshev_u(n, x):
    """Chebyshev polynomial of the second kind, continued to |x| > 1.

    ``U_{-1} = 0`` and ``U_{-2} = -1``, consistent with the recurrence.
    """
    if n == -1:
        return 0.0
    if n == -2:
        return -1.0
    if n < -2:
        raise ValueError("n must be >= -2")
    if abs(x) == 1:
        return (n + 1) * (1.0 if x > 0 or n % 2 == 0 else -1.0)
    if abs(x) < 1:
        t = math.acos(x)
        return math.sin((n + 1) * t) / math.sin(t)
    k = math.acosh(abs(x))
    val = math.sinh((n + 1) * k) / math.sinh(k)
    return val if x > 0 or n % 2 == 0 else -val


def _closed_terms(N, mu, h):
    _check_odd(N)
    M = (N - 1) // 2
    p = BoundaryParams(mu, h)
    a, c, x = p.a, p.c, p.x
    t1 = (a * a * p.b - 2 * a) * chebyshev_u(M - 1, x)
    t2 = (2 * a - c) * chebyshev_u(M - 2, x)
    return t1, t2


def determinant_closed(N, mu, h):
    """Closed-form det A2 for ``N = 2M + 1``.

    ``D = (a^2 b - 2a) U_{M-1}(x) - (2a - c) U_{M-2}(x)``, evaluated with the
    hyperbolic continuation of ``U_n`` outside ``[-1, 1]``.
    """
    t1, t2 = _closed_terms(N, mu, h)
    return t1 - t2


def determinant_scale(N, mu, h):
    """Scale of det A2 used for relative errors, finite and nonzero at roots.

    ``(|a^2 b - 2a| + |2a - c|) max(1, |U_{M-1}(x)|, |U_{M-2}(x)|)``, or 1
    where both coefficients vanish (mu = 1, h = 0).
    """
    _check_odd(N)
    M = (N - 1) // 2
    p = BoundaryParams(mu, h)
    coef = abs(p.a * p.a * p.b - 2 * p.a) + abs(2 * p.a - p.c)
    u = max(1.0, abs(chebyshev_u(M - 1, p.x)), abs(chebyshev_u(M - 2, p.x)))
    return coef * u if coef > 0 else 1.0


def x_minors(M, mu, h):
    """Determinants ``X_m`` of the alternating (b, c) tridiagonal blocks of size 2m, m = 0..M.

    They obey ``X_{m+1} + X_{m-1} = 2x X_m`` with ``X_0 = 1`` and
    ``X_1 = bc - 1``.
    """
    p = BoundaryParams(mu, h)
    out = [1.0]
    f_prev, f = 0.0, 1.0
    for k in range(2 * M):
        d = p.b if k % 2 == 0 else p.c
        f_prev, f = f, d * f - f_prev
        if k % 2 == 1:
            out.append(f)
    return np.array(out)


def n_critical(h, mu):
    """Real-valued chain size at which det A2 vanishes.

    ``N_c = atan(r z) / atan(z)`` with ``z = sqrt(4/(bc) - 1)``; the arctangent
    in the numerator is taken on the branch (0, pi).  At ``mu = 1`` the
    numerator is pi/2.  Returns ``inf`` when ``z^2 <= 0``.
    """
    p = BoundaryParams(mu, h)
    bc = p.b * p.c
    if bc <= 0:
        return math.inf
    z2 = 4 / bc - 1
    if z2 <= 0:
        return math.inf
    z = math.sqrt(z2)
    if mu == 1:
        num = 0.5 * math.pi
    else:
        rz = p.r * z
        num = math.atan(rz) if rz > 0 else math.pi + math.atan(rz)
    return num / math.atan(z)


def _is_pd(N, mu, h):
    return bool(np.all(leading_pivots(N, mu, h) > 0))


def _bisect_edge(N, mu, inside, outside):
    """Bisect the boundary of the positive-definite set between two fields."""
    while abs(outside - inside) > BISECT_TOL * max(1.0, abs(inside)):
        mid = 0.5 * (inside + outside)
        if _is_pd(N, mu, mid):
            inside = mid
        else:
            outside = mid
    return 0.5 * (inside + outside)


def solve_h_pm(N, mu, n_scan=256):
    """Stability window ``(h_minus, h_plus)`` of the bare chain in ``0 <= h < 2 mu``.

    A2 is affine in h, so its positive-definite set is one interval.  It is
    located by a scan of the pivot signs (refined 16x if the first scan
    misses it) and its edges are bisected to ~1e-13.  ``h_minus = 0`` when
    the chain is stable at zero field, which holds for every ``mu >= 1``.
    """
    _check_odd(N)
    if mu <= 0:
        raise NoStableWindow(f"mu = {mu} gives no antiparallel window")
    hmax = 2 * mu
    hit = None
    for n in (n_scan, 16 * n_scan):
        grid = np.linspace(0.0, hmax, n + 1)[:-1]
        flags = [_is_pd(N, mu, h) for h in grid]
        if any(flags):
            hit = grid, flags
            break
    if hit is None:
        raise NoStableWindow(
            f"no positive-definite field interval for N={N}, mu={mu}: "
            "the antiparallel phase is absent"
        )
    grid, flags = hit
    idx = np.flatnonzero(flags)
    lo, hi = idx[0], idx[-1]
    step = grid[1] - grid[0]
    if mu >= 1 or lo == 0 and _is_pd(N, mu, 0.0):
        h_minus = 0.0
    else:
        h_minus = _bisect_edge(N, mu, grid[lo], grid[lo] - step)
    h_plus = _bisect_edge(N, mu, grid[hi], min(grid[hi] + step, hmax))
    return h_minus, h_plus
