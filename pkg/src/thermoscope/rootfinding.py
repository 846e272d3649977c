"""Bracketed scalar root finding shared by the gas models."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

from thermoscope.errors import PreconditionError


@dataclass(frozen=True)
class RootResult:
    root: float
    iterations: int
    converged: bool


def safeguarded_newton(
    f: Callable[[float], float],
    df: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    x0: float | None = None,
    xtol: float = 4e-16,
    maxiter: int = 200,
) -> RootResult:
    """Newton iteration kept inside a sign-change bracket.

    A Newton step that would leave the bracket, or that is not shrinking at
    least as fast as bisection, is replaced by a bisection step. ``f(lo)`` and
    ``f(hi)`` must differ in sign; a zero at either end is returned as is.
    """
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return RootResult(lo, 0, True)
    if f_hi == 0.0:
        return RootResult(hi, 0, True)
    if math.copysign(1.0, f_lo) == math.copysign(1.0, f_hi):
        raise PreconditionError(f"no sign change on [{lo!r}, {hi!r}]")
    # orient so that f(neg) < 0 < f(pos)
    neg, pos = (lo, hi) if f_lo < 0.0 else (hi, lo)

    x = x0 if x0 is not None and min(lo, hi) < x0 < max(lo, hi) else 0.5 * (lo + hi)
    dx_old = abs(hi - lo)
    dx = dx_old
    fx, dfx = f(x), df(x)
    for iteration in range(1, maxiter + 1):
        newton = x - fx / dfx if dfx != 0.0 else math.nan
        inside = min(neg, pos) < newton < max(neg, pos)
        if not inside or abs(2.0 * fx) > abs(dx_old * dfx):
            dx_old = dx
            dx = 0.5 * (pos - neg)
            x = neg + dx
        else:
            dx_old = dx
            dx = x - newton
            x = newton
        if abs(dx) <= xtol * max(1.0, abs(x)):
            return RootResult(x, iteration, True)
        fx, dfx = f(x), df(x)
        if fx == 0.0:
            return RootResult(x, iteration, True)
        if fx < 0.0:
            neg = x
        else:
            pos = x
    return RootResult(x, maxiter, False)
