"""Reference measures, densities, observables and the relative entropy.

A measure is an explicit quadrature: nodes in R^d with positive weights. Every
integral in the toolkit is a finite weighted sum over those nodes. Sums use
``math.fsum`` so results do not depend on node order, which keeps entropy and
moments bit-identical under permutations of the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict
from scipy import ndimage
from scipy.special import roots_legendre

from thermoscope.errors import (
    DimensionError,
    EmptyDensityError,
    InputError,
    NormalizationError,
    PreconditionError,
)

NORMALIZATION_TOL = 1e-12
"""Allowed deviation of a density's mass from 1."""

JACOBIAN_TOL = 1e-12


def fsum_dot(a: NDArray[np.float64], b: NDArray[np.float64]) -> float:
    """Order-independent sum of ``a * b``."""
    return math.fsum(np.multiply(a, b).ravel().tolist())


@dataclass(frozen=True, eq=False)
class QuadratureMeasure:
    """Nodes with positive weights standing in for a continuum measure.

    ``axes`` is set for tensor-product grids built by :func:`grid_measure` and
    records the 1-D node arrays; ``periodic`` marks grids on a torus.
    """

    nodes: NDArray[np.float64]
    weights: NDArray[np.float64]
    axes: tuple[NDArray[np.float64], ...] | None = None
    periodic: bool = False
    total_mass: float = field(init=False)

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        weights = np.asarray(self.weights, dtype=float).ravel()
        if nodes.ndim != 2 or nodes.shape[0] != weights.shape[0]:
            raise DimensionError(
                f"{nodes.shape[0]} nodes but {weights.shape[0]} weights"
            )
        if weights.size == 0:
            raise DimensionError("measure has no nodes")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0.0):
            raise InputError("quadrature weights must be finite and positive")
        if not np.all(np.isfinite(nodes)):
            raise InputError("quadrature nodes must be finite")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "total_mass", math.fsum(weights.tolist()))

    @property
    def dim(self) -> int:
        return int(self.nodes.shape[1])

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    @property
    def shape(self) -> tuple[int, ...]:
        """Grid shape for tensor-product measures, ``(size,)`` otherwise."""
        if self.axes is None:
            return (self.size,)
        return tuple(len(axis) for axis in self.axes)


@dataclass(frozen=True, eq=False)
class Density:
    """Nonnegative Radon-Nikodym values at the nodes of ``measure``."""

    values: NDArray[np.float64]
    measure: QuadratureMeasure

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float).ravel()
        if values.shape[0] != self.measure.size:
            raise DimensionError(
                f"density has {values.shape[0]} values for {self.measure.size} nodes"
            )
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise InputError("density values must be finite and nonnegative")
        object.__setattr__(self, "values", values)

    @property
    def mass(self) -> float:
        return fsum_dot(self.values, self.measure.weights)


@dataclass(frozen=True, eq=False)
class Observable:
    """Pointwise values of a phase-space function at quadrature nodes."""

    values: NDArray[np.float64]
    label: str = "F"

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(values)):
            raise InputError(f"observable {self.label!r} has non-finite values")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class AffineMap:
    """x -> matrix @ x + offset."""

    matrix: tuple[tuple[float, ...], ...]
    offset: tuple[float, ...]

    @classmethod
    def identity(cls, dim: int) -> AffineMap:
        eye = np.eye(dim)
        return cls(tuple(map(tuple, eye.tolist())), (0.0,) * dim)

    @property
    def jacobian(self) -> float:
        return float(np.linalg.det(np.asarray(self.matrix, dtype=float)))

    def inverse_apply(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        """Pre-images of ``points`` (shape ``(count, dim)``)."""
        matrix = np.asarray(self.matrix, dtype=float)
        offset = np.asarray(self.offset, dtype=float)
        return np.linalg.solve(matrix, (points - offset).T).T


def _check_normalized(rho: Density) -> None:
    mass = rho.mass
    if abs(mass - 1.0) > NORMALIZATION_TOL:
        raise NormalizationError(f"density has mass {mass!r}, expected 1")


def _check_nodes(m: QuadratureMeasure, values: NDArray[np.float64], label: str) -> None:
    if values.shape[0] != m.size:
        raise DimensionError(
            f"{label} has {values.shape[0]} values for {m.size} nodes"
        )


def integrate(m: QuadratureMeasure, g: Observable) -> float:
    """Quadrature approximation of the integral of ``g`` against ``m``."""
    _check_nodes(m, g.values, g.label)
    return fsum_dot(g.values, m.weights)


def expectation(rho: Density, F: Observable) -> float:
    """Average of ``F`` under the normalized density ``rho``."""
    _check_nodes(rho.measure, F.values, F.label)
    _check_normalized(rho)
    return fsum_dot(F.values * rho.values, rho.measure.weights)


def relative_entropy(rho: Density) -> float:
    """-sum f log f w with 0 log 0 = 0."""
    _check_normalized(rho)
    f = rho.values
    positive = f > 0.0
    terms = np.zeros_like(f)
    terms[positive] = f[positive] * np.log(f[positive])
    return -fsum_dot(terms, rho.measure.weights)


def _same_measure(m: QuadratureMeasure, other: QuadratureMeasure) -> bool:
    if m is other:
        return True
    return bool(np.array_equal(m.nodes, other.nodes) and np.array_equal(m.weights, other.weights))


def kl_divergence(rho: Density, sigma: Density) -> float:
    """D(rho || sigma) on a shared measure; infinite if rho is not dominated."""
    if not _same_measure(rho.measure, sigma.measure):
        raise DimensionError("densities live on different measures")
    _check_normalized(rho)
    _check_normalized(sigma)
    f, g = rho.values, sigma.values
    support = f > 0.0
    if np.any(g[support] <= 0.0):
        return math.inf
    terms = np.zeros_like(f)
    terms[support] = f[support] * (np.log(f[support]) - np.log(g[support]))
    return fsum_dot(terms, rho.measure.weights)


def normalize(values: ArrayLike, m: QuadratureMeasure) -> Density:
    """Scale nonnegative ``values`` to unit mass against ``m``."""
    arr = np.asarray(values, dtype=float).ravel()
    _check_nodes(m, arr, "values")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise InputError("density values must be finite and nonnegative")
    mass = fsum_dot(arr, m.weights)
    if mass <= 0.0:
        raise EmptyDensityError("values integrate to zero")
    return Density(arr / mass, m)


def uniform_density(m: QuadratureMeasure) -> Density:
    return normalize(np.ones(m.size), m)


def grid_measure(
    axes: list[ArrayLike] | tuple[ArrayLike, ...], *, periodic: bool = False
) -> QuadratureMeasure:
    """Tensor-product midpoint measure on uniform 1-D node arrays.

    Nodes are ordered row-major (the last axis varies fastest) and every cell
    has weight equal to the product of the axis spacings.
    """
    arrays = tuple(np.asarray(axis, dtype=float).ravel() for axis in axes)
    if not arrays:
        raise DimensionError("grid needs at least one axis")
    spacing = []
    for axis in arrays:
        if axis.size < 2:
            raise PreconditionError("grid axes need at least two nodes")
        steps = np.diff(axis)
        h = float(steps.mean())
        if h <= 0.0 or not np.allclose(steps, h, rtol=1e-9, atol=0.0):
            raise PreconditionError("grid axes must be uniform and increasing")
        spacing.append(h)
    mesh = np.meshgrid(*arrays, indexing="ij")
    nodes = np.stack([g.ravel() for g in mesh], axis=1)
    weights = np.full(nodes.shape[0], math.prod(spacing))
    return QuadratureMeasure(nodes, weights, axes=arrays, periodic=periodic)


def midpoint_measure(lo: float, hi: float, count: int) -> QuadratureMeasure:
    """1-D midpoint rule with ``count`` equal cells on ``[lo, hi]``."""
    h = (hi - lo) / count
    centers = lo + h * (np.arange(count) + 0.5)
    return grid_measure([centers])


def gauss_legendre_measure(lo: float, hi: float, count: int) -> QuadratureMeasure:
    """Gauss-Legendre rule with ``count`` nodes on ``[lo, hi]``."""
    x, w = roots_legendre(count)
    half = 0.5 * (hi - lo)
    return QuadratureMeasure(lo + half * (x + 1.0), half * w)


def _pull_back_values(
    rho: Density, pullback: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Evaluate the grid density at pre-image points given in index units."""
    m = rho.measure
    shape = m.shape
    grid = rho.values.reshape(shape)
    rounded = np.rint(pullback)
    if np.all(np.abs(pullback - rounded) <= 1e-9):
        # Pre-images land on nodes: gather instead of interpolating.
        index = rounded.astype(np.int64)
        inside = np.ones(index.shape[1], dtype=bool)
        for k, n in enumerate(shape):
            if m.periodic:
                index[k] %= n
            else:
                inside &= (index[k] >= 0) & (index[k] < n)
                index[k] = np.clip(index[k], 0, n - 1)
        out = grid[tuple(index)]
        return np.where(inside, out, 0.0)
    mode = "grid-wrap" if m.periodic else "grid-constant"
    out = ndimage.map_coordinates(grid, pullback, order=3, mode=mode, cval=0.0)
    return np.clip(out, 0.0, None)


def shear_invariance_check(rho: Density, mapping: AffineMap) -> tuple[float, float]:
    """Entropy before and after pushing ``rho`` forward by a unit-Jacobian map.

    The pushed-forward density is re-binned onto the same grid by evaluating
    ``f(mapping^-1(x))`` at every node (cubic spline, or an exact gather when
    pre-images coincide with nodes) and renormalizing.
    """
    m = rho.measure
    if m.axes is None:
        raise PreconditionError("shear check needs a tensor-product grid measure")
    if abs(mapping.jacobian - 1.0) > JACOBIAN_TOL:
        raise PreconditionError(
            f"map Jacobian is {mapping.jacobian!r}, expected 1"
        )
    before = relative_entropy(rho)
    pre_images = mapping.inverse_apply(m.nodes)
    index = np.stack(
        [
            (pre_images[:, k] - axis[0]) / (axis[1] - axis[0])
            for k, axis in enumerate(m.axes)
        ]
    )
    pushed = _pull_back_values(rho, index)
    if abs(fsum_dot(pushed, m.weights) - 1.0) <= NORMALIZATION_TOL:
        after = relative_entropy(Density(pushed, m))
    else:
        after = relative_entropy(normalize(pushed, m))
    return before, after


class MeasureDocument(BaseModel):
    """JSON layout shared by measures and densities (field order is fixed)."""

    model_config = ConfigDict(frozen=True)

    dim: int
    nodes: list[list[float]]
    weights: list[float]
    values: list[float] | None = None


def measure_to_json(m: QuadratureMeasure, rho: Density | None = None) -> str:
    doc = MeasureDocument(
        dim=m.dim,
        nodes=m.nodes.tolist(),
        weights=m.weights.tolist(),
        values=None if rho is None else rho.values.tolist(),
    )
    return doc.model_dump_json(exclude_none=True)


def measure_from_json(text: str) -> tuple[QuadratureMeasure, Density | None]:
    doc = MeasureDocument.model_validate_json(text)
    m = QuadratureMeasure(np.asarray(doc.nodes, dtype=float), np.asarray(doc.weights))
    if m.dim != doc.dim:
        raise DimensionError(f"document declares dim {doc.dim}, nodes have {m.dim}")
    if doc.values is None:
        return m, None
    return m, Density(np.asarray(doc.values, dtype=float), m)
