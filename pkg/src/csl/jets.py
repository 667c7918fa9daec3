"""Truncated multivariate Taylor arithmetic.

A :class:`TaylorJet` holds the Taylor coefficients of a scalar function of
``num_vars`` variables up to total degree ``order``, for a whole batch of
expansion points at once.  Coefficients are stored densely in graded
lexicographic order along axis 0, so ``coeffs`` has shape
``(n_coeffs(num_vars, order),) + batch_shape``.  Because the ordering is
graded, truncating a jet to a lower order is a prefix slice.

The coefficient of multi-index ``alpha`` is ``d^alpha f / alpha!``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

MAX_ORDER = 6


class JetError(ValueError):
    """Base class for jet arithmetic failures."""


class JetDomainError(JetError):
    """A function was applied outside its domain (ln(0), 1/0, ...)."""


@lru_cache(maxsize=None)
def multi_indices(num_vars: int, order: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices of total degree <= order, graded lexicographic."""
    out = []
    for deg in range(order + 1):
        level = []
        for combo in combinations_with_replacement(range(num_vars), deg):
            alpha = [0] * num_vars
            for i in combo:
                alpha[i] += 1
            level.append(tuple(alpha))
        level.sort(reverse=True)
        out.extend(level)
    return tuple(out)


def n_coeffs(num_vars: int, order: int) -> int:
    return math.comb(num_vars + order, order)


@lru_cache(maxsize=None)
def _index(num_vars: int, order: int) -> dict:
    return {a: k for k, a in enumerate(multi_indices(num_vars, order))}


@lru_cache(maxsize=None)
def _product_table(num_vars: int, order: int):
    """Index pairs (i, j) with alpha_i + alpha_j = alpha_k, and the 0/1
    matrix that sums each pair's product into its k."""
    mi = multi_indices(num_vars, order)
    idx = _index(num_vars, order)
    left, right, starts = [], [], []
    for k, gamma in enumerate(mi):
        starts.append(len(left))
        for i, a in enumerate(mi):
            if all(ai <= gi for ai, gi in zip(a, gamma)):
                b = tuple(gi - ai for ai, gi in zip(a, gamma))
                left.append(i)
                right.append(idx[b])
    starts.append(len(left))
    select = np.zeros((len(mi), len(left)))
    for k in range(len(mi)):
        select[k, starts[k]:starts[k + 1]] = 1.0
    return np.array(left), np.array(right), select


@lru_cache(maxsize=None)
def _deriv_table(num_vars: int, order: int, var: int):
    src = _index(num_vars, order)
    targets = multi_indices(num_vars, order - 1)
    pick, factor = [], []
    for a in targets:
        b = list(a)
        b[var] += 1
        pick.append(src[tuple(b)])
        factor.append(b[var])
    return np.array(pick), np.array(factor, dtype=float)


@lru_cache(maxsize=None)
def _factorials(num_vars: int, order: int) -> np.ndarray:
    return np.array([math.prod(math.factorial(k) for k in a)
                     for a in multi_indices(num_vars, order)], dtype=float)


class TaylorJet:
    """Batched truncated Taylor expansion of a scalar field."""

    __slots__ = ("coeffs", "num_vars", "order")
    __array_priority__ = 100

    def __init__(self, coeffs, num_vars: int, order: int):
        if not 0 <= order <= MAX_ORDER:
            raise JetError(f"jet order must be in 0..{MAX_ORDER}, got {order}")
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[0] != n_coeffs(num_vars, order):
            raise JetError(
                f"expected {n_coeffs(num_vars, order)} coefficients for "
                f"num_vars={num_vars}, order={order}, got {coeffs.shape[0]}")
        self.coeffs = coeffs
        self.num_vars = num_vars
        self.order = order

    # -- construction ---------------------------------------------------
    @classmethod
    def constant(cls, value, num_vars: int, order: int) -> TaylorJet:
        value = np.asarray(value, dtype=float)
        c = np.zeros((n_coeffs(num_vars, order),) + value.shape)
        c[0] = value
        return cls(c, num_vars, order)

    @classmethod
    def variable(cls, value, var: int, num_vars: int, order: int) -> TaylorJet:
        """The jet of the coordinate function ``x_var`` expanded at ``value``."""
        jet = cls.constant(value, num_vars, order)
        if order >= 1:
            jet.coeffs[1 + var] = 1.0
        return jet

    @classmethod
    def from_derivatives(cls, derivs, num_vars: int, order: int) -> TaylorJet:
        """Build from partial derivatives listed in graded order."""
        d = np.asarray(derivs, dtype=float)
        fac = _factorials(num_vars, order).reshape((-1,) + (1,) * (d.ndim - 1))
        return cls(d / fac, num_vars, order)

    # -- inspection -----------------------------------------------------
    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[1:]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    def coeff(self, alpha) -> np.ndarray:
        return self.coeffs[_index(self.num_vars, self.order)[tuple(alpha)]]

    def partial(self, alpha) -> np.ndarray:
        """The partial derivative d^alpha f at the expansion point."""
        alpha = tuple(alpha)
        return self.coeff(alpha) * math.prod(math.factorial(k) for k in alpha)

    def gradient(self) -> np.ndarray:
        if self.order < 1:
            raise JetError("gradient needs order >= 1")
        return self.coeffs[1:1 + self.num_vars]

    def derivatives(self) -> np.ndarray:
        """All partial derivatives in graded order (coefficients times alpha!)."""
        fac = _factorials(self.num_vars, self.order)
        return self.coeffs * fac.reshape((-1,) + (1,) * len(self.batch_shape))

    def __repr__(self) -> str:
        return (f"TaylorJet(num_vars={self.num_vars}, order={self.order}, "
                f"batch={self.batch_shape})")

    # -- structural -----------------------------------------------------
    def truncate(self, order: int) -> TaylorJet:
        if order > self.order:
            raise JetError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        return TaylorJet(self.coeffs[:n_coeffs(self.num_vars, order)],
                         self.num_vars, order)

    def deriv(self, var: int) -> TaylorJet:
        """Exact partial derivative; the result has order one lower."""
        if self.order < 1:
            raise JetError("cannot differentiate an order-0 jet")
        pick, factor = _deriv_table(self.num_vars, self.order, var)
        f = factor.reshape((-1,) + (1,) * len(self.batch_shape))
        return TaylorJet(self.coeffs[pick] * f, self.num_vars, self.order - 1)

    def compose(self, inner) -> TaylorJet:
        """Substitute ``x_i -> x_i(p) + delta_i`` where ``inner[i]`` is the jet
        of the displacement ``delta_i`` (its constant term is ignored).

        ``self`` must be expanded at the point the inner jets map to.  The
        result lives in the inner jets' variables with their order.
        """
        inner = list(inner)
        if len(inner) != self.num_vars:
            raise JetError("compose needs one inner jet per outer variable")
        m = inner[0].num_vars
        order = min(self.order, *(j.order for j in inner))
        deltas = []
        for j in inner:
            j = j.truncate(order)
            c = j.coeffs.copy()
            c[0] = 0.0
            deltas.append(TaylorJet(c, m, order))
        outer = self.truncate(order)
        mi = multi_indices(self.num_vars, outer.order)
        idx = _index(self.num_vars, outer.order)
        batch = np.broadcast_shapes(outer.batch_shape, *(d.batch_shape for d in deltas))
        result = np.zeros((n_coeffs(m, order),) + batch)
        result[0] = outer.coeffs[0]
        monos = {mi[0]: None}
        for k, alpha in enumerate(mi[1:], start=1):
            i = next(n for n, a in enumerate(alpha) if a)
            prev = list(alpha)
            prev[i] -= 1
            prev = tuple(prev)
            mono = deltas[i] if monos[prev] is None else monos[prev] * deltas[i]
            monos[alpha] = mono
            ck = outer.coeffs[idx[alpha]]
            result = result + ck[None] * mono.coeffs
        return TaylorJet(result, m, order)

    # -- arithmetic -----------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, TaylorJet):
            if other.num_vars != self.num_vars:
                raise JetError("jets over different variable counts")
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        return self, None

    def __neg__(self):
        return TaylorJet(-self.coeffs, self.num_vars, self.order)

    def __pos__(self):
        return self

    def __add__(self, other):
        a, b = self._coerce(other)
        if b is not None:
            return TaylorJet(a.coeffs + b.coeffs, a.num_vars, a.order)
        other = np.asarray(other, dtype=float)
        batch = np.broadcast_shapes(a.batch_shape, other.shape)
        c = np.broadcast_to(a.coeffs, a.coeffs.shape[:1] + batch).copy()
        c[0] += other
        return TaylorJet(c, a.num_vars, a.order)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._coerce(other)
        if b is None:
            return TaylorJet(a.coeffs * np.asarray(other, dtype=float)[None],
                             a.num_vars, a.order)
        left, right, select = _product_table(a.num_vars, a.order)
        prods = a.coeffs[left] * b.coeffs[right]
        batch = prods.shape[1:]
        out = (select @ prods.reshape(len(left), -1)).reshape((select.shape[0],) + batch)
        return TaylorJet(out, a.num_vars, a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TaylorJet):
            return self * reciprocal(other)
        other = np.asarray(other, dtype=float)
        if np.any(other == 0):
            raise JetDomainError("division by zero")
        return TaylorJet(self.coeffs / other[None], self.num_vars, self.order)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, n):
        if isinstance(n, TaylorJet) or int(n) != n:
            raise JetError("jets support integer powers only")
        return integer_power(self, int(n))


# -- univariate functions lifted to jets --------------------------------

def _compose_series(a: TaylorJet, taylor) -> TaylorJet:
    """Apply f with ``taylor[n] = f^(n)(a0) / n!`` (each a batch array)."""
    h = TaylorJet(a.coeffs.copy(), a.num_vars, a.order)
    h.coeffs[0] = 0.0
    out = np.zeros_like(h.coeffs) + np.zeros((1,) + np.shape(taylor[0]))
    out[0] = taylor[0]
    power = None
    for n in range(1, a.order + 1):
        power = h if power is None else power * h
        out = out + np.asarray(taylor[n])[None] * power.coeffs
    return TaylorJet(out, a.num_vars, a.order)


def exp(a: TaylorJet) -> TaylorJet:
    e = np.exp(a.value)
    return _compose_series(a, [e / math.factorial(n) for n in range(a.order + 1)])


def log(a: TaylorJet) -> TaylorJet:
    a0 = a.value
    if np.any(~(a0 > 0)):
        raise JetDomainError("ln of a non-positive value")
    t = [np.log(a0)]
    for n in range(1, a.order + 1):
        t.append((-1) ** (n + 1) / (n * a0 ** n))
    return _compose_series(a, t)


def sin(a: TaylorJet) -> TaylorJet:
    s, c = np.sin(a.value), np.cos(a.value)
    cycle = [s, c, -s, -c]
    return _compose_series(a, [cycle[n % 4] / math.factorial(n) for n in range(a.order + 1)])


def cos(a: TaylorJet) -> TaylorJet:
    s, c = np.sin(a.value), np.cos(a.value)
    cycle = [c, -s, -c, s]
    return _compose_series(a, [cycle[n % 4] / math.factorial(n) for n in range(a.order + 1)])


def sqrt(a: TaylorJet) -> TaylorJet:
    a0 = a.value
    if np.any(~(a0 > 0)):
        raise JetDomainError("sqrt of a non-positive value")
    r = np.sqrt(a0)
    t, binom = [], 1.0
    for n in range(a.order + 1):
        t.append(binom * r / a0 ** n)
        binom *= (0.5 - n) / (n + 1)
    return _compose_series(a, t)


def reciprocal(a: TaylorJet) -> TaylorJet:
    a0 = a.value
    if np.any(a0 == 0):
        raise JetDomainError("division by a jet with zero constant term")
    return _compose_series(a, [(-1) ** n / a0 ** (n + 1) for n in range(a.order + 1)])


def integer_power(a: TaylorJet, n: int) -> TaylorJet:
    if n < 0:
        return reciprocal(integer_power(a, -n))
    result = TaylorJet.constant(np.ones(a.batch_shape), a.num_vars, a.order)
    base = a
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def lift(value, like: TaylorJet) -> TaylorJet:
    """Promote a float or batch array to a constant jet shaped like ``like``."""
    if isinstance(value, TaylorJet):
        return value
    return TaylorJet.constant(np.broadcast_to(value, like.batch_shape), like.num_vars, like.order)
