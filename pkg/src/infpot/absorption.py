"""Absorption terms g for the inhomogeneous equation and their primitives.

An `Absorption` wraps a scalar function g given either as one of the named
closed forms (zero, constant c, power lam * s_+^theta) or as a dense sample
table with linear interpolation on a stated interval.  It carries the
primitive G(s; base) = 2 * integral_base^s g, the infimum G_* needed for the
slope admissibility bound, and flags (nonnegative / nondecreasing) verified at
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import InputError

_FLAG_TOL = 1e-12


@dataclass(frozen=True)
class Absorption:
    kind: str  # "zero" | "constant" | "power" | "table"
    c: float = 0.0
    lam: float = 0.0
    theta: float = 0.0
    xs: np.ndarray | None = None
    ys: np.ndarray | None = None
    nonnegative_on_range: bool = field(init=False, default=False)
    nondecreasing_on_range: bool = field(init=False, default=False)

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "power", "table"):
            raise InputError(f"unknown absorption kind {self.kind!r}")
        if self.kind == "power":
            if not (self.lam > 0 and 0 < self.theta < 1):
                raise InputError("power absorption needs lam > 0 and theta in (0, 1)")
        if self.kind == "table":
            xs = np.asarray(self.xs, dtype=float)
            ys = np.asarray(self.ys, dtype=float)
            if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
                raise InputError("table absorption needs matching 1d arrays with >= 2 samples")
            if not np.all(np.diff(xs) > 0):
                raise InputError("table sample points must be strictly increasing")
            object.__setattr__(self, "xs", xs)
            object.__setattr__(self, "ys", ys)
            nonneg = bool(np.all(ys >= -_FLAG_TOL))
            nondec = bool(np.all(np.diff(ys) >= -_FLAG_TOL))
        elif self.kind == "zero":
            nonneg, nondec = True, True
        elif self.kind == "constant":
            nonneg, nondec = self.c >= 0.0, True
        else:  # power: lam * max(s, 0)^theta
            nonneg, nondec = True, True
        object.__setattr__(self, "nonnegative_on_range", nonneg)
        object.__setattr__(self, "nondecreasing_on_range", nondec)

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls) -> "Absorption":
        return cls("zero")

    @classmethod
    def constant(cls, c: float) -> "Absorption":
        return cls("constant", c=float(c))

    @classmethod
    def power(cls, lam: float, theta: float) -> "Absorption":
        return cls("power", lam=float(lam), theta=float(theta))

    @classmethod
    def from_table(cls, xs, ys) -> "Absorption":
        return cls("table", xs=np.asarray(xs, dtype=float), ys=np.asarray(ys, dtype=float))

    @classmethod
    def from_callable(cls, g: Callable[[float], float], lo: float, hi: float, n: int = 2001) -> "Absorption":
        xs = np.linspace(lo, hi, n)
        return cls.from_table(xs, np.array([g(x) for x in xs]))

    def monotone_envelope(self) -> "Absorption":
        """Nondecreasing repair gbar(t) = sup_{s <= t} g(s).

        Closed forms with the nondecreasing flag are returned unchanged; a
        table is replaced by its running maximum (piecewise-linear sup of a
        piecewise-linear function is its knot-wise running max).
        """
        if self.kind != "table":
            if self.nondecreasing_on_range:
                return self
            raise InputError("monotone envelope of a decreasing closed form is not supported")
        return Absorption.from_table(self.xs, np.maximum.accumulate(self.ys))

    # -- evaluation ------------------------------------------------------------

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "zero":
            out = np.zeros_like(s)
        elif self.kind == "constant":
            out = np.full_like(s, self.c)
        elif self.kind == "power":
            out = self.lam * np.maximum(s, 0.0) ** self.theta
        else:
            out = np.interp(s, self.xs, self.ys)
        return float(out) if out.ndim == 0 else out

    @property
    def range(self) -> tuple[float, float]:
        """Stated interval for tables; unbounded for closed forms."""
        if self.kind == "table":
            return float(self.xs[0]), float(self.xs[-1])
        return -math.inf, math.inf

    # -- primitives ------------------------------------------------------------

    def primitive(self, base: float, s) -> np.ndarray | float:
        """G(s) = 2 * integral_base^s g(sigma) dsigma (signed, s may be < base)."""
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        if self.kind == "zero":
            out = np.zeros_like(s_arr)
        elif self.kind == "constant":
            out = 2.0 * self.c * (s_arr - base)
        elif self.kind == "power":
            out = (2.0 * self.lam / (1.0 + self.theta)) * (
                np.maximum(s_arr, 0.0) ** (1.0 + self.theta) - max(base, 0.0) ** (1.0 + self.theta)
            )
        else:
            out = 2.0 * (self._table_integral(s_arr) - self._table_integral(np.array([base]))[0])
        return float(out[0]) if np.ndim(s) == 0 else out

    def _table_integral(self, s: np.ndarray) -> np.ndarray:
        """integral_{xs[0]}^{s} of the interpolant, extended constantly outside
        the stated interval; assembled with the trapezoid rule (exact for the
        piecewise-linear interpolant)."""
        xs, ys = self.xs, self.ys
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs))])
        k = np.clip(np.searchsorted(xs, s, side="right") - 1, 0, xs.size - 2)
        below = s < xs[0]
        above = s > xs[-1]
        t = s - xs[k]
        gk = ys[k] + (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]) * t
        out = cum[k] + 0.5 * (ys[k] + gk) * t
        out = np.where(below, ys[0] * (s - xs[0]), out)
        out = np.where(above, cum[-1] + ys[-1] * (s - xs[-1]), out)
        return out

    def primitive_inf(self, base: float, hi: float) -> float:
        """G_* = inf of G(.; base) on [base, hi] (dense scan plus knots)."""
        if hi < base:
            raise InputError("hi must be >= base")
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return min(0.0, 2.0 * self.c * (hi - base))
        if self.kind == "power":
            return 0.0  # g >= 0, base-anchored primitive is nondecreasing
        grid = np.unique(np.concatenate([np.linspace(base, hi, 1025), self.xs[(self.xs >= base) & (self.xs <= hi)]]))
        return float(np.min(self.primitive(base, grid)))

    def positive_part_integral(self, lo: float, hi: float) -> float:
        """integral_lo^hi g_+ (not doubled)."""
        if hi < lo:
            lo, hi = hi, lo
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return max(self.c, 0.0) * (hi - lo)
        if self.kind == "power":
            a, b = max(lo, 0.0), max(hi, 0.0)
            return self.lam / (1.0 + self.theta) * (b ** (1.0 + self.theta) - a ** (1.0 + self.theta))
        val, _ = quad(lambda s: max(self(s), 0.0), lo, hi, limit=200)
        return float(val)

    def abs_integral(self, lo: float, hi: float) -> float:
        """integral_lo^hi |g| (not doubled)."""
        if hi < lo:
            lo, hi = hi, lo
        if self.kind in ("zero", "power"):
            return self.positive_part_integral(lo, hi)
        if self.kind == "constant":
            return abs(self.c) * (hi - lo)
        val, _ = quad(lambda s: abs(self(s)), lo, hi, limit=200)
        return float(val)

    def slope_threshold(self, u_star: float, hi: float) -> float:
        """Admissibility bound sqrt(max(-G_*, 0)) for profiles started at u_star
        and valued up to hi."""
        g_star = self.primitive_inf(u_star, hi)
        return math.sqrt(max(0.0, -g_star))

    # -- Keller-Osserman -----------------------------------------------------

    def ko_condition(self, u_star: float) -> bool:
        """Whether integral_{u_star+} ds / sqrt(G(s)) converges.

        Closed forms are decided analytically.  For tables the exponent p in
        G(u_star + t) ~ C t^p is estimated from two small offsets and the
        integral converges iff p < 2; the borderline case is treated as
        divergent.
        """
        if self.kind == "zero":
            return False
        if self.kind == "constant":
            return self.c > 0.0
        if self.kind == "power":
            if u_star > 0.0:
                return True  # g(u_star) > 0
            if u_star < 0.0:
                return False  # g vanishes on an initial interval
            return self.theta < 1.0
        if self(u_star) > _FLAG_TOL:
            return True
        h1, h2 = 1e-4, 1e-6
        g1 = self.primitive(u_star, u_star + h1)
        g2 = self.primitive(u_star, u_star + h2)
        if g2 <= 0.0 or g1 <= 0.0:
            return False
        p = math.log(g1 / g2) / math.log(h1 / h2)
        return p < 2.0 - 1e-9
