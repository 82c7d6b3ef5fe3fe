"""Normal and Weyl symbols of single-mode bosonic operators.

Holomorphic variables are ``a = (q + i p)/sqrt(2)`` and ``a* = (q - i p)/sqrt(2)``
with hbar = 1.  A polynomial symbol is a finite map ``(m, n) -> c`` standing
for ``sum c (a*)^m a^n``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import TruncationWarning


class Ordering(enum.Enum):
    NORMAL = "normal"
    WEYL = "weyl"


@dataclass(frozen=True)
class HolomorphicPolynomial:
    """Finite polynomial ``sum_{m,n} c_mn (a*)^m a^n``.

    Stored zero coefficients are dropped on construction.
    """

    terms: Mapping[tuple[int, int], complex]
    ordering: Ordering = Ordering.NORMAL

    def __post_init__(self):
        clean = {}
        for (m, n), c in dict(self.terms).items():
            if m < 0 or n < 0:
                raise ValueError(f"negative power in term {(m, n)}")
            c = complex(c)
            if c != 0:
                clean[(int(m), int(n))] = c
        object.__setattr__(self, "terms", clean)

    @classmethod
    def monomial(cls, m, n, coeff=1.0, ordering=Ordering.NORMAL):
        return cls({(m, n): coeff}, ordering)

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        if not isinstance(other, HolomorphicPolynomial):
            return NotImplemented
        return self.ordering == other.ordering and self.terms == other.terms

    def __add__(self, other):
        self._check_same_ordering(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return HolomorphicPolynomial(out, self.ordering)

    def __sub__(self, other):
        return self + other.scaled(-1)

    def scaled(self, s):
        return HolomorphicPolynomial({k: s * c for k, c in self.terms.items()}, self.ordering)

    def __mul__(self, other):
        """Pointwise product of the c-number functions (not an operator product)."""
        self._check_same_ordering(other)
        out = {}
        for (m1, n1), c1 in self.terms.items():
            for (m2, n2), c2 in other.terms.items():
                key = (m1 + m2, n1 + n2)
                out[key] = out.get(key, 0) + c1 * c2
        return HolomorphicPolynomial(out, self.ordering)

    def _check_same_ordering(self, other):
        if self.ordering != other.ordering:
            raise ValueError("cannot combine symbols of different orderings")

    @property
    def degree(self):
        return max((m + n for m, n in self.terms), default=0)

    def adjoint(self):
        """Symbol of the Hermitian-conjugate operator."""
        return HolomorphicPolynomial(
            {(n, m): c.conjugate() for (m, n), c in self.terms.items()}, self.ordering
        )

    def is_hermitian(self, tol=0.0):
        keys = set(self.terms) | {(n, m) for m, n in self.terms}
        return all(
            abs(self.terms.get((m, n), 0) - self.terms.get((n, m), 0).conjugate()) <= tol
            for m, n in keys
        )

    def chop(self, tol=1e-14):
        """Drop coefficients smaller than ``tol`` in modulus."""
        return HolomorphicPolynomial(
            {k: c for k, c in self.terms.items() if abs(c) > tol}, self.ordering
        )

    def max_abs_diff(self, other):
        keys = set(self.terms) | set(other.terms)
        return max((abs(self.terms.get(k, 0) - other.terms.get(k, 0)) for k in keys), default=0.0)

    def __call__(self, a_star, a):
        a_star = np.asarray(a_star, dtype=complex)
        a = np.asarray(a, dtype=complex)
        out = np.zeros(np.broadcast(a_star, a).shape, dtype=complex)
        for (m, n), c in self.terms.items():
            out = out + c * a_star**m * a**n
        return out

    def at_pq(self, p, q):
        """Evaluate at phase-space points, ``a = (q + i p)/sqrt(2)``."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        a = (q + 1j * p) / math.sqrt(2)
        return self(np.conj(a), a)


def _exp_mixed_derivative(P: HolomorphicPolynomial, s: float, ordering: Ordering):
    # exp(s d_{a*} d_a) applied term by term; the series stops at min(m, n)
    out = {}
    for (m, n), c in P.terms.items():
        coef = 1.0
        for j in range(min(m, n) + 1):
            key = (m - j, n - j)
            out[key] = out.get(key, 0) + c * coef
            coef *= s * (m - j) * (n - j) / (j + 1)
    return HolomorphicPolynomial(out, ordering)


def normal_to_weyl(P: HolomorphicPolynomial) -> HolomorphicPolynomial:
    """Weyl symbol ``exp(-1/2 d_a* d_a) O_N`` of a normal-ordered polynomial."""
    if P.ordering is not Ordering.NORMAL:
        raise ValueError("expected a normal symbol")
    return _exp_mixed_derivative(P, -0.5, Ordering.WEYL)


def weyl_to_normal(P: HolomorphicPolynomial) -> HolomorphicPolynomial:
    """Inverse of :func:`normal_to_weyl`."""
    if P.ordering is not Ordering.WEYL:
        raise ValueError("expected a Weyl symbol")
    return _exp_mixed_derivative(P, 0.5, Ordering.NORMAL)


def complex_gaussian_moment(i, j, alpha=1.0):
    """``<(xi*)^i xi^j>_alpha`` for the isotropic complex Gaussian with ``<xi* xi> = alpha/2``.

    Only pairings of xi* with xi contribute, hence ``i! (alpha/2)^i`` when
    ``i == j`` and zero otherwise.
    """
    if i != j:
        return 0.0
    return math.factorial(i) * (0.5 * alpha) ** i


def gaussian_smoothing_weyl(P: HolomorphicPolynomial) -> HolomorphicPolynomial:
    """Weyl symbol as the Gaussian average ``<O_N(a* + xi*, a - xi)>_1``.

    Expands the shifted monomials binomially and replaces the noise moments
    by their Wick values.  Independent of :func:`normal_to_weyl`.
    """
    if P.ordering is not Ordering.NORMAL:
        raise ValueError("expected a normal symbol")
    out = {}
    for (m, n), c in P.terms.items():
        for i in range(m + 1):
            for j in range(n + 1):
                mom = complex_gaussian_moment(i, j)
                if mom == 0.0:
                    continue
                key = (m - i, n - j)
                val = c * math.comb(m, i) * math.comb(n, j) * (-1) ** j * mom
                out[key] = out.get(key, 0) + val
    return HolomorphicPolynomial(out, Ordering.WEYL)


def weyl_to_normal_smoothing(P: HolomorphicPolynomial) -> HolomorphicPolynomial:
    """Normal symbol as ``<O(a* + xi*, a + xi)>_1``."""
    if P.ordering is not Ordering.WEYL:
        raise ValueError("expected a Weyl symbol")
    out = {}
    for (m, n), c in P.terms.items():
        for i in range(min(m, n) + 1):
            key = (m - i, n - i)
            val = c * math.comb(m, i) * math.comb(n, i) * complex_gaussian_moment(i, i)
            out[key] = out.get(key, 0) + val
    return HolomorphicPolynomial(out, Ordering.NORMAL)


@dataclass(frozen=True)
class ThermalHOWeyl:
    """Weyl symbol of ``exp(-beta H)`` for ``H = omega (a'a + 1/2)``.

    ``rho(p, q) = prefactor * exp(-exponent_coeff (p^2 + q^2))`` with
    ``prefactor = 1/cosh f`` and ``exponent_coeff = tanh f``, ``f = beta omega / 2``.
    """

    f: float
    prefactor: float
    exponent_coeff: float

    def __call__(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        return self.prefactor * np.exp(-self.exponent_coeff * (p * p + q * q))

    def partition_function(self):
        """Closed-form ``Z = 1/(2 sinh f)``."""
        return 0.5 / math.sinh(self.f)

    def phase_space_integral(self):
        """Gaussian integral of the symbol over ``dp dq / (2 pi)``."""
        return 0.5 * self.prefactor / self.exponent_coeff


def thermal_ho_weyl(beta, omega) -> ThermalHOWeyl:
    if not (beta > 0 and omega > 0):
        raise ValueError("beta and omega must be positive")
    f = 0.5 * beta * omega
    if math.isinf(f):
        return ThermalHOWeyl(f=f, prefactor=0.0, exponent_coeff=1.0)
    return ThermalHOWeyl(f=f, prefactor=1.0 / math.cosh(f), exponent_coeff=math.tanh(f))


def fn_times_a_weyl(f_values: Callable, m: int, sample_point):
    """Smooth approximation ``f(a* a - (1+m)/2) a^m`` to the Weyl symbol of ``f(n) a^m``.

    ``sample_point`` is the pair ``(a*, a)``.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    a_star, a = sample_point
    a_star = np.asarray(a_star, dtype=complex)
    a = np.asarray(a, dtype=complex)
    n_eff = (a_star * a).real - 0.5 * (1 + m)
    return f_values(n_eff) * a**m


def hermite_functions(n_max, x):
    """Oscillator eigenfunctions ``psi_0..psi_{n_max-1}`` at the points x (rows = n)."""
    x = np.asarray(x, dtype=float)
    psi = np.empty((n_max,) + x.shape)
    psi[0] = math.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max > 1:
        psi[1] = math.sqrt(2.0) * x * psi[0]
    for n in range(1, n_max - 1):
        psi[n + 1] = math.sqrt(2.0 / (n + 1)) * x * psi[n] - math.sqrt(n / (n + 1)) * psi[n - 1]
    return psi


def fock_operator(kind, dim, **kw):
    """Fock-basis matrices used by the oracle: 'a', 'n', 'identity', 'thermal'."""
    n = np.arange(dim)
    if kind == "a":
        return np.diag(np.sqrt(n[1:]).astype(complex), 1)
    if kind == "n":
        return np.diag(n).astype(complex)
    if kind == "identity":
        return np.eye(dim, dtype=complex)
    if kind == "thermal":
        beta, omega = kw["beta"], kw["omega"]
        return np.diag(np.exp(-beta * omega * (n + 0.5))).astype(complex)
    raise ValueError(f"unknown operator kind {kind!r}")


def boundary_weight(op):
    """Frobenius weight of the last Fock row and column relative to the whole matrix."""
    op = np.asarray(op)
    edge = np.sqrt(np.sum(np.abs(op[-1, :]) ** 2) + np.sum(np.abs(op[:-1, -1]) ** 2))
    total = np.linalg.norm(op)
    return float(edge / total) if total > 0 else 0.0


def fock_oracle_weyl(op_matrix, p_values, q_values, x_max=8.0, n_x=512, warn_tol=1e-8):
    """Weyl symbol of a truncated Fock-space operator by direct quadrature.

    Evaluates ``O(p, q) = int dr <q + r/2| O |q - r/2> exp(-i r p)`` with the
    trapezoid rule; ``r`` is sampled at ``2 dx`` steps of the position grid
    ``[-x_max, x_max]`` with ``n_x`` points, and the integration range covers
    ``|q +- r/2| <= 2 x_max``.  Returns an array of shape
    ``(len(p_values), len(q_values))``.

    Pointwise values are reliable only for operators whose Fock matrix
    elements decay inside the truncation, such as thermal states.  A sharp
    cut of the identity or of polynomial operators produces parity
    oscillations of order one in the symbol; such operators should be
    checked through traces against decaying probe states instead.
    """
    op = np.asarray(op_matrix, dtype=complex)
    dim = op.shape[0]
    if op.shape != (dim, dim):
        raise ValueError("operator matrix must be square")
    if dim < 20:
        raise ValueError("Fock truncation must be at least 20")
    w = boundary_weight(op)
    if w > warn_tol:
        warnings.warn(
            f"boundary Fock weight {w:.2e} exceeds {warn_tol:.0e}; the symbol is "
            "only reliable well inside the phase-space disc p^2+q^2 < 2 D",
            TruncationWarning, stacklevel=2,
        )
    p_values = np.atleast_1d(np.asarray(p_values, dtype=float))
    q_values = np.atleast_1d(np.asarray(q_values, dtype=float))
    dx = 2.0 * x_max / (n_x - 1)
    dr = 2.0 * dx
    n_r = int(round(4.0 * x_max / dr))
    r = dr * np.arange(-n_r, n_r + 1)
    weights = np.full(r.shape, dr)
    weights[0] = weights[-1] = 0.5 * dr
    phase = np.exp(-1j * np.outer(p_values, r))
    out = np.empty((len(p_values), len(q_values)), dtype=complex)
    for j, q in enumerate(q_values):
        psi_plus = hermite_functions(dim, q + 0.5 * r)
        psi_minus = hermite_functions(dim, q - 0.5 * r)
        kernel = np.einsum("mr,mn,nr->r", psi_plus, op, psi_minus)
        out[:, j] = phase @ (weights * kernel)
    return out
