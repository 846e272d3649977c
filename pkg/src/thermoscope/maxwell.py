"""Subcritical van der Waals isotherms and the Maxwell construction.

Below Tc an isotherm has a liquid branch, an unstable middle branch and a
vapour branch separated by the two spinodal volumes. The Maxwell pressure
P_mx cuts equal areas from the loop; the graph selector f_T(P) is the
Gibbs-energy potential obtained by integrating V dP along the stable branch
on each side of P_mx.
"""

from __future__ import annotations

import logging
import math
import sys
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict
from scipy import optimize

from thermoscope.errors import (
    AnchorError,
    ConsistencyError,
    DomainError,
    GridError,
    NoCoexistenceError,
)
from thermoscope.gasmodels import (
    GasParameters,
    spinodal_temperature,
    vdw_critical_point,
    vdw_pressure,
    vdw_pressure_slope,
)
from thermoscope.rootfinding import safeguarded_newton

logger = logging.getLogger(__name__)

NEAR_CRITICAL_RTOL = 1e-9
BISECTION_RTOL = 1e-13
MIN_GIBBS_SAMPLES = 64
RECOMMENDED_SAMPLES = 16
SEED_SAMPLES = 257
FLOOR_STEP = 1e-3
MIN_PRESSURE = sys.float_info.min


@dataclass(frozen=True, eq=False)
class Isotherm:
    T: float
    volumes: NDArray[np.float64]
    pressures: NDArray[np.float64]
    params: GasParameters

    def __post_init__(self) -> None:
        volumes = np.asarray(self.volumes, dtype=float).ravel()
        pressures = np.asarray(self.pressures, dtype=float).ravel()
        if volumes.shape != pressures.shape:
            raise DomainError("isotherm needs one pressure per volume")
        if volumes.size > 1 and np.any(np.diff(volumes) <= 0.0):
            raise DomainError("isotherm volumes must be strictly increasing")
        if np.any(volumes <= self.params.excluded_volume):
            raise DomainError("isotherm volumes must exceed bN")
        object.__setattr__(self, "volumes", volumes)
        object.__setattr__(self, "pressures", pressures)

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.volumes.tolist(), self.pressures.tolist()))

    def __len__(self) -> int:
        return int(self.volumes.size)


@dataclass(frozen=True, eq=False)
class BranchDecomposition:
    v_spinodal_lo: float
    v_spinodal_hi: float
    branch_min: Isotherm
    branch_mid: Isotherm
    branch_max: Isotherm


@dataclass(frozen=True)
class MaxwellResult:
    T: float
    P_mx: float
    V_liquid: float
    V_vapor: float
    equal_area_residual: float
    near_critical: bool = False

    @property
    def scale(self) -> float:
        """|P_mx| (V_vapor - V_liquid), the size of the areas being balanced."""
        return abs(self.P_mx) * (self.V_vapor - self.V_liquid)


@dataclass(frozen=True)
class MaxwellSegment:
    P_mx: float
    V_liquid: float
    V_vapor: float


class MaxwellDocument(BaseModel):
    model_config = ConfigDict(frozen=True)

    T: float
    P_mx: float
    V_liquid: float
    V_vapor: float
    residual: float

    @classmethod
    def from_result(cls, mr: MaxwellResult) -> MaxwellDocument:
        return cls(
            T=mr.T,
            P_mx=mr.P_mx,
            V_liquid=mr.V_liquid,
            V_vapor=mr.V_vapor,
            residual=mr.equal_area_residual,
        )


def pressure_antiderivative(Veff: float, T: float, g: GasParameters) -> float:
    """Pi(V) with dPi/dV = P(V, T): a N^2 / V + N T log(V - bN)."""
    return g.a * g.N**2 / Veff + g.N * T * math.log(Veff - g.excluded_volume)


def v_dp_between(
    T: float, g: GasParameters, start: tuple[float, float], end: tuple[float, float]
) -> float:
    """Integral of V dP along the isotherm from ``start`` to ``end`` (P, V) points.

    Integration by parts against the closed-form pressure antiderivative, so
    the path may run through the unstable branch.
    """
    (p0, v0), (p1, v1) = start, end
    return p1 * v1 - p0 * v0 - (
        pressure_antiderivative(v1, T, g) - pressure_antiderivative(v0, T, g)
    )


def sample_isotherm(
    T: float, g: GasParameters, v_lo: float, v_hi: float, count: int
) -> Isotherm:
    """``count`` equally spaced volumes on [v_lo, v_hi] with their pressures."""
    if not T > 0.0:
        raise DomainError(f"temperature must be positive, got {T!r}")
    if not g.excluded_volume < v_lo < v_hi:
        raise DomainError(
            f"need bN < v_lo < v_hi, got bN={g.excluded_volume!r}, "
            f"v_lo={v_lo!r}, v_hi={v_hi!r}"
        )
    if count < 2:
        raise DomainError(f"isotherm needs at least 2 samples, got {count}")
    if count < RECOMMENDED_SAMPLES:
        logger.debug("isotherm sampled with only %d points", count)
    volumes = np.linspace(v_lo, v_hi, count)
    return Isotherm(T, volumes, np.asarray(vdw_pressure(volumes, T, g)), g)


def spinodal(T: float, g: GasParameters) -> tuple[float, float] | None:
    """Volumes bounding the unstable branch, or None when there is none.

    Both roots of dP/dV = 0 are bracketed around Veff_c = 3bN, where the
    spinodal temperature peaks at Tc.
    """
    if not T > 0.0:
        raise DomainError(f"temperature must be positive, got {T!r}")
    if g.a <= 0.0 or g.b <= 0.0:
        return None
    Tc, _, Vc = vdw_critical_point(g)
    if abs(T - Tc) <= NEAR_CRITICAL_RTOL * Tc:
        return Vc, Vc
    if T > Tc:
        return None
    bN = g.excluded_volume

    def excess(v: float) -> float:
        return float(spinodal_temperature(v, g)) - T

    lo_edge = bN * (1.0 + 1e-12)
    while excess(lo_edge) >= 0.0:
        lo_edge = bN + 0.5 * (lo_edge - bN)
    hi_edge = 2.0 * Vc
    while excess(hi_edge) >= 0.0:
        hi_edge *= 2.0
    v_lo = optimize.brentq(excess, lo_edge, Vc, xtol=1e-15 * Vc, rtol=1e-15)
    v_hi = optimize.brentq(excess, Vc, hi_edge, xtol=1e-15 * Vc, rtol=1e-15)
    return float(v_lo), float(v_hi)


def branch_decomposition(iso: Isotherm) -> BranchDecomposition:
    bounds = spinodal(iso.T, iso.params)
    if bounds is None:
        raise NoCoexistenceError(f"T = {iso.T!r} has no unstable branch")
    v_sl, v_sh = bounds
    v, p = iso.volumes, iso.pressures

    def piece(mask: NDArray[np.bool_]) -> Isotherm:
        return Isotherm(iso.T, v[mask], p[mask], iso.params)

    return BranchDecomposition(
        v_sl,
        v_sh,
        piece(v < v_sl),
        piece((v >= v_sl) & (v <= v_sh)),
        piece(v > v_sh),
    )


def _liquid_floor(P: float, T: float, g: GasParameters) -> float:
    """A volume on the liquid side where the pressure exceeds ``P``."""
    bN = g.excluded_volume
    return bN + 0.5 * g.N * T / (P + g.a * g.N**2 / bN**2)


def _vapour_ceiling(P: float, T: float, g: GasParameters) -> float:
    """A volume on the vapour side where the pressure is below ``P``."""
    return g.excluded_volume + 2.0 * g.N * T / P


def _outer_roots(P: float, T: float, g: GasParameters, v_sl: float, v_sh: float) -> tuple[float, float]:
    def offset(v: float) -> float:
        return float(vdw_pressure(v, T, g)) - P

    xtol = 1e-15 * v_sh
    v_liq = optimize.brentq(offset, _liquid_floor(P, T, g), v_sl, xtol=xtol, rtol=1e-15)
    v_vap = optimize.brentq(offset, v_sh, _vapour_ceiling(P, T, g), xtol=xtol, rtol=1e-15)
    return float(v_liq), float(v_vap)


def _equal_area(P: float, T: float, g: GasParameters, v_liq: float, v_vap: float) -> float:
    """Integral of P(V) - P between the outer roots, from the antiderivative."""
    bN = g.excluded_volume
    return (
        g.N * T * math.log((v_vap - bN) / (v_liq - bN))
        - g.a * g.N**2 * (v_vap - v_liq) / (v_liq * v_vap)
        - P * (v_vap - v_liq)
    )


def _area_at(P: float, T: float, g: GasParameters, v_sl: float, v_sh: float) -> float:
    v_liq, v_vap = _outer_roots(P, T, g, v_sl, v_sh)
    return _equal_area(P, T, g, v_liq, v_vap)


def _positive_floor(T: float, g: GasParameters, v_sl: float, v_sh: float, p_max: float) -> tuple[float, float]:
    """Bracket (lo, hi) with 0 < lo < hi <= p_max and a positive area at lo.

    Used when the loop dips below P = 0; steps down by FLOOR_STEP.
    """
    hi = p_max
    lo = p_max * FLOOR_STEP
    while _area_at(lo, T, g, v_sl, v_sh) <= 0.0:
        hi = lo
        lo *= FLOOR_STEP
        if lo < MIN_PRESSURE:
            raise DomainError(
                f"Maxwell pressure at T = {T!r} is below the smallest representable pressure"
            )
    return lo, hi


def maxwell_pressure(T: float, g: GasParameters) -> MaxwellResult:
    """Coexistence pressure at which the loop cuts off equal areas.

    Geometric bisection on P* between the local minimum and the local maximum
    of the isotherm; the area difference decreases strictly in P*. When the
    minimum is not positive the lower end is found by stepping down in
    decades, so P_mx keeps full relative precision at low temperature.
    """
    if not T > 0.0:
        raise DomainError(f"temperature must be positive, got {T!r}")
    Tc, Pc, Vc = vdw_critical_point(g)
    if T >= Tc:
        raise NoCoexistenceError(f"T = {T!r} is not below Tc = {Tc!r}")
    if T > Tc * (1.0 - NEAR_CRITICAL_RTOL):
        logger.warning(
            "T = %r is within %.0e of Tc; reporting the critical point", T, NEAR_CRITICAL_RTOL
        )
        return MaxwellResult(T, Pc, Vc, Vc, 0.0, near_critical=True)

    bounds = spinodal(T, g)
    assert bounds is not None
    v_sl, v_sh = bounds
    p_max = float(vdw_pressure(v_sh, T, g))
    p_min = float(vdw_pressure(v_sl, T, g))
    if p_min > 0.0:
        lo, hi = p_min, p_max
    else:
        lo, hi = _positive_floor(T, g, v_sl, v_sh, p_max)
    iterations = 0
    while hi - lo > BISECTION_RTOL * lo:
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        if _area_at(mid, T, g, v_sl, v_sh) > 0.0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    P_mx = math.sqrt(lo * hi)
    v_liq, v_vap = _outer_roots(P_mx, T, g, v_sl, v_sh)
    residual = _equal_area(P_mx, T, g, v_liq, v_vap)
    logger.debug("maxwell bisection at T=%r: %d steps, residual %.3e", T, iterations, residual)
    return MaxwellResult(T, P_mx, v_liq, v_vap, residual)


def coexistence_curve(
    temps: Sequence[float], g: GasParameters, *, workers: int = 1
) -> list[MaxwellResult]:
    """Maxwell results for several temperatures, in input order."""
    if workers <= 1:
        return [maxwell_pressure(T, g) for T in temps]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(lambda T: maxwell_pressure(T, g), temps))


@dataclass(frozen=True, eq=False)
class GraphSelector:
    """Continuous Gibbs-energy potential f_T(P) across the Maxwell pressure.

    The liquid piece is anchored to zero at ``P_ref``; the vapour piece is
    anchored by integrating V dP along the full loop from the liquid to the
    vapour coexistence volume, so any equal-area defect shows up as a gap at
    P_mx. ``P_mx`` is None above Tc, where there is a single branch.
    """

    T: float
    P_ref: float
    params: GasParameters
    P_mx: float | None
    V_liquid: float
    V_vapor: float
    jump: float
    vapour_anchor: float = 0.0
    _seed_p: NDArray[np.float64] = field(default_factory=lambda: np.empty(0), repr=False)
    _seed_v: NDArray[np.float64] = field(default_factory=lambda: np.empty(0), repr=False)

    def branch(self, P: float) -> str:
        if self.P_mx is None:
            return "liquid" if self.alpha(P) < 3.0 * self.params.excluded_volume else "vapour"
        return "liquid" if P >= self.P_mx else "vapour"

    def _invert(self, P: float, lo: float, hi: float) -> float:
        g, T = self.params, self.T
        seed = None
        if self._seed_p.size:
            seed = float(np.interp(P, self._seed_p, self._seed_v))
        result = safeguarded_newton(
            lambda v: float(vdw_pressure(v, T, g)) - P,
            lambda v: float(vdw_pressure_slope(v, T, g)),
            lo,
            hi,
            x0=seed,
        )
        if not result.converged:
            logger.warning(
                "branch inversion at P=%r not converged after %d iterations", P, result.iterations
            )
        return result.root

    def alpha(self, P: float) -> float:
        """Volume on the stable branch at pressure ``P`` (the derivative of f_T)."""
        if not P > 0.0:
            raise DomainError(f"selector is defined for P > 0, got {P!r}")
        g, T = self.params, self.T
        if self.P_mx is None:
            return self._invert(P, _liquid_floor(P, T, g), _vapour_ceiling(P, T, g))
        if P >= self.P_mx:
            if P == self.P_mx:
                return self.V_liquid
            return self._invert(P, _liquid_floor(P, T, g), self.V_liquid)
        return self._invert(P, self.V_vapor, _vapour_ceiling(P, T, g))

    def _integral_v_dp(self, p_from: float, v_from: float, p_to: float, v_to: float) -> float:
        return v_dp_between(self.T, self.params, (p_from, v_from), (p_to, v_to))

    def potential(self, P: float) -> float:
        v = self.alpha(P)
        v_ref = self.alpha(self.P_ref)
        if self.P_mx is None or P >= self.P_mx:
            return -self._integral_v_dp(P, v, self.P_ref, v_ref)
        return self.vapour_anchor - self._integral_v_dp(P, v, self.P_mx, self.V_vapor)

    __call__ = potential

    def one_sided_limits(self) -> tuple[float, float]:
        """(f_T(P_mx+), f_T(P_mx-))."""
        if self.P_mx is None:
            raise NoCoexistenceError("single-branch selector has no Maxwell pressure")
        upper = -self._integral_v_dp(self.P_mx, self.V_liquid, self.P_ref, self.alpha(self.P_ref))
        return upper, self.vapour_anchor

    @property
    def continuity_gap(self) -> float:
        if self.P_mx is None:
            return 0.0
        upper, lower = self.one_sided_limits()
        return abs(upper - lower)

    def lipschitz_bound(self, p_lo: float) -> float:
        """Largest volume on [p_lo, P_ref], a Lipschitz constant of f_T there."""
        return self.alpha(p_lo)


def graph_selector(T: float, g: GasParameters, P_ref: float) -> GraphSelector:
    """Build f_T(P) anchored at ``P_ref`` on the liquid branch."""
    if not T > 0.0:
        raise DomainError(f"temperature must be positive, got {T!r}")
    Tc, _, Vc = vdw_critical_point(g)
    if not P_ref > 0.0:
        raise AnchorError(f"anchor pressure must be positive, got {P_ref!r}")
    if T >= Tc:
        return GraphSelector(T, P_ref, g, None, Vc, Vc, 0.0)

    mr = maxwell_pressure(T, g)
    if P_ref <= mr.P_mx:
        raise AnchorError(f"P_ref = {P_ref!r} must exceed P_mx = {mr.P_mx!r}")
    seed_v = np.concatenate(
        [
            np.linspace(_liquid_floor(P_ref, T, g), mr.V_liquid, SEED_SAMPLES),
            np.geomspace(mr.V_vapor, 64.0 * mr.V_vapor, SEED_SAMPLES),
        ]
    )
    seed_p = np.asarray(vdw_pressure(seed_v, T, g))
    order = np.argsort(seed_p)
    selector = GraphSelector(
        T,
        P_ref,
        g,
        mr.P_mx,
        mr.V_liquid,
        mr.V_vapor,
        mr.V_vapor - mr.V_liquid,
        _seed_p=seed_p[order],
        _seed_v=seed_v[order],
    )
    liquid_side = -v_dp_between(T, g, (mr.P_mx, mr.V_liquid), (P_ref, selector.alpha(P_ref)))
    # through the unstable branch, from the liquid to the vapour coexistence point
    loop = v_dp_between(T, g, (mr.P_mx, mr.V_liquid), (mr.P_mx, mr.V_vapor))
    selector = replace(selector, vapour_anchor=liquid_side + loop)
    gap = selector.continuity_gap
    logger.debug("selector continuity gap at P_mx: %.3e", gap)
    if gap > 1e-8 * max(mr.scale, 1.0):
        raise ConsistencyError(f"selector is discontinuous at P_mx (gap {gap:.3e})")
    return selector


def selector_table(
    selector: GraphSelector, p_lo: float, count: int
) -> list[tuple[float, float, float, str]]:
    """Rows (P, f_T, df_T/dP, branch) on an even P grid, ascending.

    The Maxwell pressure itself is emitted as two ``cliff`` rows carrying the
    liquid and vapour volumes.
    """
    if not 0.0 < p_lo < selector.P_ref:
        raise DomainError(f"need 0 < P_lo < P_ref, got P_lo={p_lo!r}")
    if count < 2:
        raise GridError("selector table needs at least 2 pressures")
    rows: list[tuple[float, float, float, str]] = []
    for P in np.linspace(p_lo, selector.P_ref, count).tolist():
        if selector.P_mx is not None and P == selector.P_mx:
            continue
        rows.append((P, selector.potential(P), selector.alpha(P), selector.branch(P)))
    if selector.P_mx is not None and p_lo < selector.P_mx:
        f_mx = selector.potential(selector.P_mx)
        rows.append((selector.P_mx, f_mx, selector.V_liquid, "cliff"))
        rows.append((selector.P_mx, f_mx, selector.V_vapor, "cliff"))
    rows.sort(key=lambda row: row[0])
    return rows


def maxwell_adjustment(
    iso: Isotherm, mr: MaxwellResult | None
) -> tuple[Isotherm, MaxwellSegment | None]:
    """Replace the loop between the coexistence volumes by P = P_mx.

    The coexistence endpoints are inserted as samples so the adjusted curve
    contains the full horizontal segment. ``mr`` is None above Tc, where the
    isotherm is returned unchanged.
    """
    if mr is None:
        return iso, None
    if abs(mr.T - iso.T) > 1e-12 * iso.T:
        raise ConsistencyError(
            f"Maxwell result at T = {mr.T!r} does not match isotherm T = {iso.T!r}"
        )
    v = iso.volumes
    p = np.where((v > mr.V_liquid) & (v < mr.V_vapor), mr.P_mx, iso.pressures)
    extra = [x for x in (mr.V_liquid, mr.V_vapor) if v[0] <= x <= v[-1] and x not in v]
    if extra:
        v = np.concatenate([v, extra])
        p = np.concatenate([p, [mr.P_mx] * len(extra)])
        order = np.argsort(v, kind="stable")
        v, p = v[order], p[order]
    for x in (mr.V_liquid, mr.V_vapor):
        p[v == x] = mr.P_mx
    return Isotherm(iso.T, v, p, iso.params), MaxwellSegment(mr.P_mx, mr.V_liquid, mr.V_vapor)


def integrate_v_dp(volumes: NDArray[np.float64], pressures: NDArray[np.float64]) -> NDArray[np.float64]:
    """Cumulative trapezoid of V dP, starting at 0."""
    steps = 0.5 * (volumes[1:] + volumes[:-1]) * np.diff(pressures)
    return np.concatenate([[0.0], np.cumsum(steps)])


def gibbs_on_isotherm(iso: Isotherm, g: GasParameters) -> list[tuple[float, float]]:
    """(P, Upsilon) along the isotherm with Upsilon = 0 at the first sample."""
    if iso.params != g:
        raise ConsistencyError("isotherm was sampled with different gas parameters")
    if len(iso) < MIN_GIBBS_SAMPLES:
        raise GridError(
            f"Gibbs integration needs at least {MIN_GIBBS_SAMPLES} samples, got {len(iso)}"
        )
    upsilon = integrate_v_dp(iso.volumes, iso.pressures)
    return list(zip(iso.pressures.tolist(), upsilon.tolist()))


def gibbs_crossing_pressure(iso: Isotherm) -> float:
    """Pressure where the liquid and vapour Upsilon(P) branches intersect."""
    parts = branch_decomposition(iso)
    upsilon = integrate_v_dp(iso.volumes, iso.pressures)
    v = iso.volumes
    liquid = v < parts.v_spinodal_lo
    vapour = v > parts.v_spinodal_hi
    if liquid.sum() < 2 or vapour.sum() < 2:
        raise GridError("isotherm does not sample both stable branches")
    # pressure falls along each stable branch; reverse for np.interp
    p_liq, u_liq = iso.pressures[liquid][::-1], upsilon[liquid][::-1]
    p_vap, u_vap = iso.pressures[vapour][::-1], upsilon[vapour][::-1]
    lo = max(p_liq[0], p_vap[0])
    hi = min(p_liq[-1], p_vap[-1])
    if not lo < hi:
        raise NoCoexistenceError("stable branches do not overlap in pressure")

    def difference(P: float) -> float:
        return float(np.interp(P, p_liq, u_liq) - np.interp(P, p_vap, u_vap))

    grid = np.linspace(lo, hi, 4097)
    values = np.array([difference(P) for P in grid.tolist()])
    change = np.nonzero(np.signbit(values[:-1]) != np.signbit(values[1:]))[0]
    if change.size == 0:
        raise NoCoexistenceError("Gibbs branches do not cross in the sampled range")
    i = int(change[0])
    return float(optimize.brentq(difference, grid[i], grid[i + 1], xtol=1e-15))
