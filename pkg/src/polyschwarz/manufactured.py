"""Manufactured solutions for the fourth- and sixth-order model problems.

Both benchmark solutions are separable, u(x, y) = g(x) s(y), with a
polynomial factor g vanishing to order m at x = 0, 1 and a sine power in y:

* m = 2:  u = x^2 (1-x)^2 sin^2(pi y),   f = Laplacian^2 u
* m = 3:  u = x^3 (1-x)^3 sin^3(pi y),   f = -Laplacian^3 u

Derivatives of every order are available in closed form (polynomial
differentiation in x, phase-shifted trigonometric identities in y), so both
the clamped-interpolation DOF values and the right-hand side are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, pi

import numpy as np

__all__ = ["SeparableSolution", "manufactured_solution"]


def _sin2_deriv(k: int):
    # s = sin^2(pi y) = (1 - cos 2 pi y) / 2
    if k == 0:
        return lambda y: 0.5 * (1.0 - np.cos(2 * pi * np.asarray(y, dtype=float)))
    c = -0.5 * (2 * pi) ** k
    shift = k * pi / 2
    return lambda y: c * np.cos(2 * pi * np.asarray(y, dtype=float) + shift)


def _sin3_deriv(k: int):
    # s = sin^3(pi y) = (3 sin pi y - sin 3 pi y) / 4
    shift = k * pi / 2
    c1 = 3.0 * pi**k / 4.0
    c3 = 3.0**k * pi**k / 4.0

    def s_k(y):
        y = np.asarray(y, dtype=float)
        return c1 * np.sin(pi * y + shift) - c3 * np.sin(3 * pi * y + shift)

    return s_k


@dataclass(frozen=True)
class SeparableSolution:
    """Exact solution u(x, y) = g(x) s(y) with closed-form derivatives."""

    m: int
    _g: np.polynomial.Polynomial
    _s_deriv_factory: object

    def deriv(self, a: int, b: int):
        """Callable for d^(a+b) u / dx^a dy^b."""
        gp = self._g.deriv(a) if a else self._g
        sk = self._s_deriv_factory(b)
        return lambda x, y: gp(np.asarray(x, dtype=float)) * sk(y)

    def __call__(self, x, y):
        return self.deriv(0, 0)(x, y)

    def rhs(self, x, y):
        """Right-hand side f = (-Laplacian)^m u, in closed form."""
        x = np.asarray(x, dtype=float)
        total = 0.0
        for k in range(self.m + 1):
            gk = self._g.deriv(2 * (self.m - k))
            sk = self._s_deriv_factory(2 * k)
            total = total + comb(self.m, k) * gk(x) * sk(y)
        return (-1.0) ** self.m * total


def manufactured_solution(m: int) -> SeparableSolution:
    """The benchmark exact solution for order 2m (m = 2 or 3)."""
    if m == 2:
        # g = x^2 (1-x)^2 = x^2 - 2 x^3 + x^4
        g = np.polynomial.Polynomial([0.0, 0.0, 1.0, -2.0, 1.0])
        return SeparableSolution(2, g, _sin2_deriv)
    if m == 3:
        # g = x^3 (1-x)^3 = x^3 - 3 x^4 + 3 x^5 - x^6
        g = np.polynomial.Polynomial([0.0, 0.0, 0.0, 1.0, -3.0, 3.0, -1.0])
        return SeparableSolution(3, g, _sin3_deriv)
    raise ValueError(f"manufactured solutions exist for m in {{2, 3}}, got {m}")
