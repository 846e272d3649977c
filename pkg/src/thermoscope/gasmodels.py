"""Ideal-gas and van der Waals closed forms.

Conventions: k_B = 1, ``Veff`` is the container volume X = V + Nb, and the
free volume V = Veff - Nb is what an :class:`EquilibriumPoint` stores. The
ideal gas carries the (N + 1) factors produced by integrating the piston
height h with Lambda = C h.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize
from scipy.special import gammaln, roots_legendre

from thermoscope.errors import (
    ConsistencyError,
    DivergentIntegralError,
    DomainError,
    GridError,
    InfeasibleTargetError,
    NoCriticalPointError,
)
from thermoscope.maxent import ObservableSystem
from thermoscope.measure import Observable, QuadratureMeasure
from thermoscope.rootfinding import safeguarded_newton

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
ROOT_MERGE_RTOL = 1e-7
GAMMA_TAIL_SIGMAS = 12.0
GAMMA_TAIL_LOG = 40.0

EQUILIBRIUM_HEADER = ("U", "V", "T", "P", "S", "Upsilon")


class GasParameters(BaseModel):
    """Particle count, mass, cylinder constant and van der Waals a, b."""

    model_config = ConfigDict(frozen=True)

    N: int = Field(default=1, ge=1)
    m: float = Field(default=1.0, gt=0.0)
    C: float = Field(default=1.0, gt=0.0)
    a: float = Field(default=0.0, ge=0.0)
    b: float = Field(default=0.0, ge=0.0)

    @property
    def excluded_volume(self) -> float:
        return self.b * self.N


@dataclass(frozen=True)
class EquilibriumPoint:
    U: float
    V: float
    T: float
    P: float
    S: float
    gibbs_free_energy: float

    @classmethod
    def from_state(cls, U: float, V: float, T: float, P: float, S: float) -> EquilibriumPoint:
        if T <= 0.0:
            raise DomainError(f"temperature must be positive, got {T!r}")
        return cls(U, V, T, P, S, U + P * V - T * S)

    def as_row(self) -> tuple[float, ...]:
        """Values in :data:`EQUILIBRIUM_HEADER` order."""
        return (self.U, self.V, self.T, self.P, self.S, self.gibbs_free_energy)


# --------------------------------------------------------------------------
# Ideal gas
# --------------------------------------------------------------------------


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0.0:
            raise DomainError(f"{name} must be positive, got {value!r}")


def _require_negative_multiplier(name: str, value: float) -> None:
    if not value < 0.0:
        raise DivergentIntegralError(
            f"{name} = {value!r} makes the partition integral diverge; need {name} < 0"
        )


def ideal_multipliers(T: float, P: float) -> tuple[float, float]:
    """(lambda1, lambda2) = (-1/T, -P/T)."""
    _require_positive(T=T, P=P)
    return -1.0 / T, -P / T


def ideal_energy_from_lambda(lambda1: float, g: GasParameters) -> float:
    _require_negative_multiplier("lambda1", lambda1)
    return -3.0 * g.N / (2.0 * lambda1)


def ideal_volume_from_lambda(lambda2: float, g: GasParameters) -> float:
    _require_negative_multiplier("lambda2", lambda2)
    return -(g.N + 1) / lambda2


def ideal_log_partition(lambda1: float, lambda2: float, g: GasParameters) -> float:
    _require_negative_multiplier("lambda1", lambda1)
    _require_negative_multiplier("lambda2", lambda2)
    N = g.N
    return (
        1.5 * N * math.log(-2.0 * math.pi * g.m / lambda1)
        + (N + 1) * math.log(-1.0 / (lambda2 * g.C))
        + float(gammaln(N + 1))
        + N * LOG_2PI
    )


def ideal_entropy(U: float, V: float, g: GasParameters) -> float:
    """Entropy of the ideal gas as a function of (U, V).

    Includes the constant 3N/2 + N + 1 so that S = w - lambda1 U - lambda2 V
    holds exactly at the inverted multipliers.
    """
    _require_positive(U=U, V=V)
    N = g.N
    return (
        1.5 * N * math.log(4.0 * math.pi * g.m * U / (3.0 * N))
        + (N + 1) * math.log(V / (g.C * (N + 1)))
        + float(gammaln(N + 1))
        + N * LOG_2PI
        + 1.5 * N
        + (N + 1)
    )


def ideal_state(T: float, P: float, g: GasParameters) -> EquilibriumPoint:
    _require_positive(T=T, P=P)
    U = 1.5 * g.N * T
    V = (g.N + 1) * T / P
    return EquilibriumPoint.from_state(U, V, T, P, ideal_entropy(U, V, g))


def _gamma_cutoff(shape: float, scale: float) -> float:
    """Point beyond which a Gamma(shape, scale) density carries negligible mass."""
    return scale * (shape + GAMMA_TAIL_SIGMAS * math.sqrt(shape) + GAMMA_TAIL_LOG)


def ideal_gas_system(
    g: GasParameters,
    *,
    target: tuple[float, float] | None = None,
    energy_nodes: int = 200,
    height_nodes: int = 200,
) -> ObservableSystem:
    """Reduced two-observable system {kinetic energy, Lambda = C h}.

    The 3N momentum integrals collapse to a radial integral in E with density
    of states (2 pi m)^{3N/2} E^{3N/2-1} / Gamma(3N/2); the energy axis is
    sampled as E = u^2 with Gauss-Legendre in u. The height axis carries the
    weight (2 pi h)^N. Weights are assembled in log space; the node set is the
    tensor product of the two rules.

    Both axes are cut off where the equilibrium density for ``target`` = (U, V)
    has dropped below e^-40 of its mass, so the truncated quadrature matches the
    untruncated integrals for any temperature and pressure. Without a target
    the domain is sized for T = P = 1.
    """
    N = g.N
    half_dim = 1.5 * N
    U, V = target if target is not None else (half_dim, N + 1.0)
    if not (U > 0.0 and V > 0.0):
        raise InfeasibleTargetError(
            f"ideal-gas targets must be positive, got U={U!r}, V={V!r}"
        )
    # E ~ Gamma(3N/2, T) and Lambda ~ Gamma(N + 1, V / (N + 1)) at equilibrium
    u_max = math.sqrt(_gamma_cutoff(half_dim, U / half_dim))
    lambda_max = _gamma_cutoff(N + 1.0, V / (N + 1.0))
    xu, wu = roots_legendre(energy_nodes)
    u = 0.5 * u_max * (xu + 1.0)
    log_wu = (
        np.log(0.5 * u_max * wu)
        + math.log(2.0)
        + half_dim * math.log(2.0 * math.pi * g.m)
        + (3 * N - 1) * np.log(u)
        - float(gammaln(half_dim))
    )
    h_max = lambda_max / g.C
    xh, wh = roots_legendre(height_nodes)
    h = 0.5 * h_max * (xh + 1.0)
    log_wh = np.log(0.5 * h_max * wh) + N * np.log(2.0 * math.pi * h)

    energy = np.repeat(u**2, height_nodes)
    height = np.tile(h, energy_nodes)
    log_weights = (log_wu[:, None] + log_wh[None, :]).ravel()
    measure = QuadratureMeasure(
        np.stack([energy, height], axis=1), np.exp(log_weights)
    )
    return ObservableSystem(
        measure,
        (Observable(energy, "kinetic_energy"), Observable(g.C * height, "Lambda")),
        log_weights=log_weights,
    )


# --------------------------------------------------------------------------
# van der Waals
# --------------------------------------------------------------------------


def _check_veff(Veff: ArrayLike, g: GasParameters) -> NDArray[np.float64]:
    v = np.asarray(Veff, dtype=float)
    if np.any(~(v > g.excluded_volume)) or np.any(~(v > 0.0)):
        raise DomainError(
            f"effective volume must exceed the excluded volume bN = {g.excluded_volume!r}"
        )
    return v


def _scalar_or_array(value: NDArray[np.float64]) -> float | NDArray[np.float64]:
    return float(value) if value.ndim == 0 else value


def vdw_pressure(Veff: ArrayLike, T: float, g: GasParameters) -> float | NDArray[np.float64]:
    """P = -a N^2 / Veff^2 + N T / (Veff - bN)."""
    _require_positive(T=T)
    v = _check_veff(Veff, g)
    N = g.N
    return _scalar_or_array(-g.a * N * N / (v * v) + N * T / (v - g.excluded_volume))


def vdw_pressure_slope(Veff: ArrayLike, T: float, g: GasParameters) -> float | NDArray[np.float64]:
    """dP/dVeff at fixed T."""
    v = _check_veff(Veff, g)
    N = g.N
    d = v - g.excluded_volume
    return _scalar_or_array(2.0 * g.a * N * N / v**3 - N * T / (d * d))


def vdw_energy(Veff: float, T: float, g: GasParameters) -> float:
    """U = 3/2 N T - a N^2 / Veff^2."""
    if not Veff > 0.0:
        raise DomainError(f"effective volume must be positive, got {Veff!r}")
    return 1.5 * g.N * T - g.a * g.N**2 / Veff**2


def vdw_mean_field_energy(Veff: float, T: float, g: GasParameters) -> float:
    """U = 3/2 N T - a N^2 / Veff, the energy compatible with the pressure law.

    This is the form for which dS = dU/T + (P/T) dV closes with
    :func:`vdw_pressure`; the equilibrium manifold is built on it.
    """
    if not Veff > 0.0:
        raise DomainError(f"effective volume must be positive, got {Veff!r}")
    return 1.5 * g.N * T - g.a * g.N**2 / Veff


def vdw_entropy(Veff: float, T: float, g: GasParameters) -> float:
    _require_positive(T=T)
    v = float(_check_veff(Veff, g))
    N = g.N
    return (
        1.5 * N * math.log(2.0 * math.pi * g.m * T)
        + N * math.log((v - g.excluded_volume) / (g.C * N))
        + float(gammaln(N + 1))
        + N * LOG_2PI
        + 2.5 * N
    )


def vdw_point(Veff: float, T: float, g: GasParameters) -> EquilibriumPoint:
    P = float(vdw_pressure(Veff, T, g))
    return EquilibriumPoint.from_state(
        vdw_mean_field_energy(Veff, T, g),
        Veff - g.excluded_volume,
        T,
        P,
        vdw_entropy(Veff, T, g),
    )


@dataclass(frozen=True)
class CubicCoefficients:
    """Monic cubic x^3 + alpha x^2 + beta x + gamma."""

    alpha: float
    beta: float
    gamma: float
    discriminant: float

    @classmethod
    def from_coefficients(cls, alpha: float, beta: float, gamma: float) -> CubicCoefficients:
        return cls(alpha, beta, gamma, cubic_discriminant(alpha, beta, gamma))

    @property
    def scale(self) -> float:
        """Root magnitude scale used to make the discriminant dimensionless."""
        return max(abs(self.alpha), math.sqrt(abs(self.beta)), abs(self.gamma) ** (1.0 / 3.0))

    @property
    def scaled_discriminant(self) -> float:
        s = self.scale
        return self.discriminant / s**6 if s > 0.0 else 0.0

    def evaluate(self, x: float) -> float:
        return ((x + self.alpha) * x + self.beta) * x + self.gamma

    def derivative(self, x: float) -> float:
        return (3.0 * x + 2.0 * self.alpha) * x + self.beta

    def stationary_points(self) -> list[float]:
        disc = self.alpha**2 - 3.0 * self.beta
        if disc < 0.0:
            return []
        if disc == 0.0:
            return [-self.alpha / 3.0]
        root = math.sqrt(disc)
        # avoid cancellation in the smaller-magnitude root
        q = -(self.alpha + math.copysign(root, self.alpha)) / 3.0
        points = [q, self.beta / (3.0 * q)] if q != 0.0 else [root / 3.0, -root / 3.0]
        return sorted(points)


def cubic_discriminant(alpha: float, beta: float, gamma: float) -> float:
    return (
        18.0 * alpha * beta * gamma
        - 4.0 * alpha**3 * gamma
        + alpha**2 * beta**2
        - 4.0 * beta**3
        - 27.0 * gamma**2
    )


def vdw_cubic(T: float, P: float, g: GasParameters) -> CubicCoefficients:
    _require_positive(T=T, P=P)
    N = g.N
    return CubicCoefficients.from_coefficients(
        -(g.b * N + N * T / P),
        g.a * N * N / P,
        -g.a * g.b * N**3 / P,
    )


def _merge_roots(roots: list[float]) -> list[float]:
    merged: list[float] = []
    for r in sorted(roots):
        if merged and abs(r - merged[-1]) <= ROOT_MERGE_RTOL * max(abs(r), abs(merged[-1])):
            continue
        merged.append(r)
    return merged


def vdw_volume_roots(T: float, P: float, g: GasParameters) -> list[float]:
    """Real roots Veff > bN of the volume cubic, ascending.

    The real line above bN is split at the cubic's stationary points into
    monotone pieces; each piece with a sign change holds exactly one root,
    found by safeguarded Newton. A stationary point where the cubic vanishes
    to rounding is a tangency and counts as one (double) root, unless a
    neighbouring piece already brackets a root next to it.
    """
    cubic = vdw_cubic(T, P, g)
    lower = g.excluded_volume
    upper = 1.0 + max(abs(cubic.alpha), abs(cubic.beta), abs(cubic.gamma))
    tiny = 1e-12 * cubic.scale**3

    cuts = [lower] + [x for x in cubic.stationary_points() if lower < x < upper] + [upper]
    values = [cubic.evaluate(x) for x in cuts]
    crossing = [
        f_lo != 0.0 and f_hi != 0.0 and (f_lo < 0.0) != (f_hi < 0.0)
        for f_lo, f_hi in zip(values[:-1], values[1:])
    ]
    roots: list[float] = []
    for lo, hi, crosses in zip(cuts[:-1], cuts[1:], crossing):
        if not crosses:
            continue
        result = safeguarded_newton(cubic.evaluate, cubic.derivative, lo, hi)
        if not result.converged:
            logger.warning(
                "volume root on [%r, %r] not converged after %d iterations at T=%r, P=%r",
                lo, hi, result.iterations, T, P,
            )
        roots.append(result.root)
    # cuts[i] separates pieces i - 1 and i
    for i in range(1, len(cuts) - 1):
        if abs(values[i]) <= tiny and not (crossing[i - 1] or crossing[i]):
            roots.append(cuts[i])

    found = [r for r in _merge_roots(roots) if r > lower]
    if not found:
        logger.warning("no volume root above bN at T=%r, P=%r", T, P)
    return found


def vdw_state(T: float, P: float, g: GasParameters) -> list[EquilibriumPoint]:
    """One equilibrium point per real volume root at (T, P)."""
    return [vdw_point(v, T, g) for v in vdw_volume_roots(T, P, g)]


def spinodal_temperature(Veff: ArrayLike, g: GasParameters) -> float | NDArray[np.float64]:
    """Temperature at which Veff is a stationary point of the isotherm."""
    v = _check_veff(Veff, g)
    d = v - g.excluded_volume
    return _scalar_or_array(2.0 * g.a * g.N * d * d / v**3)


def _require_vdw(g: GasParameters) -> None:
    if g.a <= 0.0 or g.b <= 0.0:
        raise NoCriticalPointError(
            f"critical point needs a > 0 and b > 0 (a={g.a!r}, b={g.b!r})"
        )


def vdw_critical_point(g: GasParameters) -> tuple[float, float, float]:
    """(Tc, Pc, Veff_c) = (8a / 27b, a / 27b^2, 3bN)."""
    _require_vdw(g)
    Vc = 3.0 * g.b * g.N
    Tc = 8.0 * g.a / (27.0 * g.b)
    Pc = g.a / (27.0 * g.b**2)
    N = g.N
    first = float(vdw_pressure_slope(Vc, Tc, g))
    second = -6.0 * g.a * N * N / Vc**4 + 2.0 * N * Tc / (Vc - g.excluded_volume) ** 3
    if abs(first) > 1e-10 * 2.0 * g.a * N * N / Vc**3:
        raise ConsistencyError(f"dP/dV = {first!r} at the critical point")
    if abs(second) > 1e-10 * 6.0 * g.a * N * N / Vc**4:
        raise ConsistencyError(f"d2P/dV2 = {second!r} at the critical point")
    return Tc, Pc, Vc


def critical_point_from_spinodal(g: GasParameters) -> tuple[float, float, float]:
    """Critical point located numerically as the top of the spinodal curve.

    The spinodal temperature 2aN(V - bN)^2 / V^3 peaks where its logarithmic
    derivative 2/(V - bN) - 3/V vanishes; the two spinodal volumes coalesce
    there.
    """
    _require_vdw(g)
    bN = g.excluded_volume

    def log_slope(v: float) -> float:
        return 2.0 / (v - bN) - 3.0 / v

    Vc = float(
        optimize.brentq(log_slope, bN * (1.0 + 1e-6), 100.0 * bN, xtol=1e-15 * bN, rtol=1e-15)
    )
    Tc = float(spinodal_temperature(Vc, g))
    Pc = float(vdw_pressure(Vc, Tc, g))
    return Tc, Pc, Vc


def vdw_multiplier_transform(
    lambdaU: float, lambdaV: float, V: float, g: GasParameters
) -> tuple[float, float]:
    """Multipliers conjugate to X = V + Nb and Y = U + a N^2 / X."""
    X = V + g.excluded_volume
    if not X > 0.0:
        raise DomainError(f"V + Nb must be positive, got {X!r}")
    return lambdaV + g.a * g.N**2 * lambdaU / X**2, lambdaU


# --------------------------------------------------------------------------
# First-law residual on sampled patches
# --------------------------------------------------------------------------


def _derivative_along(values: NDArray[np.float64], axis: int) -> NDArray[np.float64]:
    """Per-step derivative along ``axis`` at interior points.

    Five-point stencil when the axis has at least five samples, three-point
    otherwise. Entries without a full stencil are NaN.
    """
    n = values.shape[axis]
    out = np.full(values.shape, np.nan)
    moved = np.moveaxis(values, axis, 0)
    target = np.moveaxis(out, axis, 0)
    if n >= 5:
        target[2:-2] = (-moved[4:] + 8.0 * moved[3:-1] - 8.0 * moved[1:-3] + moved[:-4]) / 12.0
    else:
        target[1:-1] = 0.5 * (moved[2:] - moved[:-2])
    return out


def contact_residual(points: Sequence[Sequence[EquilibriumPoint]]) -> float:
    """Largest first-law defect |dS - dU/T - (P/T) dV| on a sampled patch.

    ``points[i][j]`` is the equilibrium point at grid position (i, j) of a
    rectangular two-parameter sampling. Differences are taken per grid step
    along each direction and checked at every interior point.
    """
    rows = [list(row) for row in points]
    if len(rows) < 3 or any(len(row) != len(rows[0]) for row in rows) or len(rows[0]) < 3:
        raise GridError("contact residual needs a rectangular patch of at least 3x3 points")
    field = {
        name: np.array([[getattr(p, name) for p in row] for row in rows])
        for name in ("U", "V", "T", "P", "S")
    }
    worst = 0.0
    for axis in (0, 1):
        dS = _derivative_along(field["S"], axis)
        dU = _derivative_along(field["U"], axis)
        dV = _derivative_along(field["V"], axis)
        residual = np.abs(dS - dU / field["T"] - field["P"] / field["T"] * dV)
        interior = residual[np.isfinite(residual)]
        if interior.size:
            worst = max(worst, float(interior.max()))
    return worst


def ideal_patch(
    T_range: tuple[float, float],
    P_range: tuple[float, float],
    count: int,
    g: GasParameters,
) -> list[list[EquilibriumPoint]]:
    temps = np.linspace(*T_range, count)
    pressures = np.linspace(*P_range, count)
    return [[ideal_state(float(T), float(P), g) for P in pressures] for T in temps]


def vdw_patch(
    T_range: tuple[float, float],
    Veff_range: tuple[float, float],
    count: int,
    g: GasParameters,
) -> list[list[EquilibriumPoint]]:
    temps = np.linspace(*T_range, count)
    volumes = np.linspace(*Veff_range, count)
    return [[vdw_point(float(v), float(T), g) for v in volumes] for T in temps]
