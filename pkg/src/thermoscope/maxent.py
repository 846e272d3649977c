"""Constrained entropy maximization on a quadrature.

The Gibbs density of an observable system is ``f = exp(sum_i lambda_i F_i - w)``
with ``w`` the log-partition function. :func:`fit_multipliers` inverts the
moment map ``lambda -> <F>`` by damped Newton iteration on the convex dual
``w(lambda) - lambda . mu``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import logsumexp

from thermoscope.errors import (
    DegenerateSystemError,
    DimensionError,
    InfeasibleTargetError,
)
from thermoscope.measure import Density, Observable, QuadratureMeasure

logger = logging.getLogger(__name__)

ARMIJO = 1e-4
MAX_HALVINGS = 50
DEGENERATE_CONDITION = 1e12
DIVERGENCE_NORM = 1e12


class SolverOptions(BaseModel):
    """Newton solver settings (config keys ``maxent.*``)."""

    model_config = ConfigDict(frozen=True)

    tol: float = Field(default=1e-10, gt=0.0)
    max_iter: int = Field(default=200, ge=1)
    deterministic: bool = False


@dataclass(frozen=True, eq=False)
class ObservableSystem:
    """Observables sharing one quadrature measure.

    ``log_weights`` overrides ``log(measure.weights)`` for reference measures
    assembled in log space.
    """

    measure: QuadratureMeasure
    observables: tuple[Observable, ...]
    log_weights: NDArray[np.float64] | None = None
    matrix: NDArray[np.float64] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        observables = tuple(self.observables)
        if not observables:
            raise DimensionError("observable system needs at least one observable")
        for obs in observables:
            if obs.values.shape[0] != self.measure.size:
                raise DimensionError(
                    f"observable {obs.label!r} has {obs.values.shape[0]} values "
                    f"for {self.measure.size} nodes"
                )
        object.__setattr__(self, "observables", observables)
        object.__setattr__(self, "matrix", np.stack([o.values for o in observables]))
        if self.log_weights is None:
            object.__setattr__(self, "log_weights", np.log(self.measure.weights))
        else:
            lw = np.asarray(self.log_weights, dtype=float).ravel()
            if lw.shape[0] != self.measure.size:
                raise DimensionError("log_weights do not match the measure")
            object.__setattr__(self, "log_weights", lw)

    @property
    def n(self) -> int:
        return len(self.observables)

    @property
    def labels(self) -> list[str]:
        return [o.label for o in self.observables]


@dataclass(frozen=True, eq=False)
class MaxEntSolution:
    multipliers: NDArray[np.float64]
    log_partition: float
    moments: NDArray[np.float64]
    entropy: float
    covariance: NDArray[np.float64]
    iterations: int = 0


class SolutionDocument(BaseModel):
    """JSON layout of a :class:`MaxEntSolution`."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lambda_: list[float] = Field(alias="lambda")
    w: float
    moments: list[float]
    entropy: float
    covariance: list[list[float]]

    @classmethod
    def from_solution(cls, sol: MaxEntSolution) -> SolutionDocument:
        return cls(
            lambda_=sol.multipliers.tolist(),
            w=sol.log_partition,
            moments=sol.moments.tolist(),
            entropy=sol.entropy,
            covariance=sol.covariance.tolist(),
        )

    def to_solution(self) -> MaxEntSolution:
        return MaxEntSolution(
            multipliers=np.asarray(self.lambda_),
            log_partition=self.w,
            moments=np.asarray(self.moments),
            entropy=self.entropy,
            covariance=np.asarray(self.covariance),
        )

    def dump(self) -> str:
        return self.model_dump_json(by_alias=True)


def _as_vector(values: ArrayLike, sys: ObservableSystem, name: str) -> NDArray[np.float64]:
    vec = np.atleast_1d(np.asarray(values, dtype=float))
    if vec.shape != (sys.n,):
        raise DimensionError(f"{name} has shape {vec.shape}, expected ({sys.n},)")
    return vec


def _exponent(lam: NDArray[np.float64], sys: ObservableSystem) -> NDArray[np.float64]:
    assert sys.log_weights is not None
    return lam @ sys.matrix + sys.log_weights


def _logsumexp(a: NDArray[np.float64], deterministic: bool) -> float:
    if not deterministic:
        return float(logsumexp(a))
    shift = float(np.max(a))
    return shift + math.log(math.fsum(np.exp(a - shift).tolist()))


def _node_masses(
    lam: NDArray[np.float64], sys: ObservableSystem, deterministic: bool
) -> tuple[float, NDArray[np.float64]]:
    """Log-partition and the Gibbs probability mass carried by each node."""
    a = _exponent(lam, sys)
    w = _logsumexp(a, deterministic)
    return w, np.exp(a - w)


def _weighted_rows(
    matrix: NDArray[np.float64], masses: NDArray[np.float64], deterministic: bool
) -> NDArray[np.float64]:
    if not deterministic:
        return matrix @ masses
    return np.array([math.fsum((row * masses).tolist()) for row in matrix])


def log_partition(
    lam: ArrayLike, sys: ObservableSystem, *, deterministic: bool = False
) -> float:
    """w(lambda) = log sum_j exp(lambda . F(x_j)) w_j, evaluated in log space."""
    vec = _as_vector(lam, sys, "lambda")
    return _logsumexp(_exponent(vec, sys), deterministic)


def gibbs_density(
    lam: ArrayLike, sys: ObservableSystem, *, deterministic: bool = False
) -> Density:
    vec = _as_vector(lam, sys, "lambda")
    w = log_partition(vec, sys, deterministic=deterministic)
    assert sys.log_weights is not None
    log_base = sys.log_weights - np.log(sys.measure.weights)
    return Density(np.exp(vec @ sys.matrix + log_base - w), sys.measure)


def moments(
    lam: ArrayLike, sys: ObservableSystem, *, deterministic: bool = False
) -> NDArray[np.float64]:
    """Gibbs averages of each observable, the gradient of ``w``."""
    vec = _as_vector(lam, sys, "lambda")
    _, masses = _node_masses(vec, sys, deterministic)
    return _weighted_rows(sys.matrix, masses, deterministic)


def covariance(
    lam: ArrayLike, sys: ObservableSystem, *, deterministic: bool = False
) -> NDArray[np.float64]:
    """Gibbs covariance of the observables, the Hessian of ``w``."""
    vec = _as_vector(lam, sys, "lambda")
    _, masses = _node_masses(vec, sys, deterministic)
    return _covariance_from_masses(sys.matrix, masses, deterministic)


def _covariance_from_masses(
    matrix: NDArray[np.float64], masses: NDArray[np.float64], deterministic: bool
) -> NDArray[np.float64]:
    mean = _weighted_rows(matrix, masses, deterministic)
    centered = matrix - mean[:, None]
    if deterministic:
        n = matrix.shape[0]
        cov = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                cov[i, j] = cov[j, i] = math.fsum(
                    (centered[i] * centered[j] * masses).tolist()
                )
        return cov
    cov = (centered * masses) @ centered.T
    return 0.5 * (cov + cov.T)


def entropy_at(
    lam: ArrayLike, sys: ObservableSystem, *, deterministic: bool = False
) -> float:
    """S = w - lambda . q."""
    vec = _as_vector(lam, sys, "lambda")
    w, masses = _node_masses(vec, sys, deterministic)
    q = _weighted_rows(sys.matrix, masses, deterministic)
    return w - math.fsum((vec * q).tolist())


def dual_objective(
    lam: ArrayLike, target: ArrayLike, sys: ObservableSystem, *, deterministic: bool = False
) -> float:
    """w(lambda) - lambda . mu, minimized by the multipliers matching ``mu``."""
    vec = _as_vector(lam, sys, "lambda")
    mu = _as_vector(target, sys, "target")
    return log_partition(vec, sys, deterministic=deterministic) - math.fsum(
        (vec * mu).tolist()
    )


def _check_hull(mu: NDArray[np.float64], sys: ObservableSystem) -> None:
    lo = sys.matrix.min(axis=1)
    hi = sys.matrix.max(axis=1)
    outside = (mu <= lo) | (mu >= hi)
    if np.any(outside):
        i = int(np.argmax(outside))
        raise InfeasibleTargetError(
            f"target {mu[i]!r} for {sys.labels[i]!r} is outside the observable "
            f"range [{lo[i]!r}, {hi[i]!r}]"
        )


def _newton_direction(
    cov: NDArray[np.float64], grad: NDArray[np.float64]
) -> NDArray[np.float64]:
    try:
        return -np.linalg.solve(cov, grad)
    except np.linalg.LinAlgError:
        return -np.linalg.lstsq(cov, grad, rcond=None)[0]


def fit_multipliers(
    target_mu: ArrayLike,
    sys: ObservableSystem,
    opts: SolverOptions | None = None,
) -> MaxEntSolution:
    """Find the multipliers whose Gibbs moments equal ``target_mu``.

    Damped Newton from ``lambda = 0`` with Armijo backtracking. Raises
    :class:`DegenerateSystemError` if the observables are affinely dependent
    and :class:`InfeasibleTargetError` if the target is outside the moment
    range or the iteration does not converge.
    """
    opts = opts or SolverOptions()
    det = opts.deterministic
    mu = _as_vector(target_mu, sys, "target")

    lam = np.zeros(sys.n)
    w, masses = _node_masses(lam, sys, det)
    cov = _covariance_from_masses(sys.matrix, masses, det)
    condition = float(np.linalg.cond(cov))
    if not math.isfinite(condition) or condition > DEGENERATE_CONDITION:
        raise DegenerateSystemError(
            f"moment covariance is singular (condition number {condition:.3g}); "
            "observables are affinely dependent"
        )
    _check_hull(mu, sys)

    q = _weighted_rows(sys.matrix, masses, det)
    grad = q - mu
    objective = w - math.fsum((lam * mu).tolist())
    for iteration in range(opts.max_iter):
        gnorm = float(np.max(np.abs(grad)))
        logger.debug("newton iter %d: |grad| = %.3e", iteration, gnorm)
        if gnorm <= opts.tol:
            return MaxEntSolution(
                multipliers=lam,
                log_partition=w,
                moments=q,
                entropy=w - math.fsum((lam * q).tolist()),
                covariance=cov,
                iterations=iteration,
            )
        step = _newton_direction(cov, grad)
        slope = float(grad @ step)
        if slope >= 0.0:
            step = -grad
            slope = -float(grad @ grad)
        t = 1.0
        noise = 4.0 * np.finfo(float).eps * max(1.0, abs(objective))
        for _ in range(MAX_HALVINGS):
            candidate = lam + t * step
            w_c, masses_c = _node_masses(candidate, sys, det)
            objective_c = w_c - math.fsum((candidate * mu).tolist())
            q_c = _weighted_rows(sys.matrix, masses_c, det)
            grad_c = q_c - mu
            if objective_c <= objective + ARMIJO * t * slope:
                break
            # Near the optimum the objective is flat to rounding; accept steps
            # that still shrink the gradient.
            if objective_c <= objective + noise and np.max(np.abs(grad_c)) < gnorm:
                break
            t *= 0.5
        else:
            raise InfeasibleTargetError(
                f"line search stalled at iteration {iteration} with |grad| = {gnorm:.3e}"
            )
        lam, w, masses, q, grad, objective = (
            candidate,
            w_c,
            masses_c,
            q_c,
            grad_c,
            objective_c,
        )
        cov = _covariance_from_masses(sys.matrix, masses, det)
        if not np.all(np.isfinite(lam)) or float(np.max(np.abs(lam))) > DIVERGENCE_NORM:
            raise InfeasibleTargetError("multipliers diverge; target is on the hull boundary")

    raise InfeasibleTargetError(
        f"no convergence after {opts.max_iter} iterations "
        f"(|grad| = {float(np.max(np.abs(grad))):.3e})"
    )
