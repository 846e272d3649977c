"""Collisionless free transport on a (Q, P) phase grid.

Densities are stored as arrays of shape ``(n_p, n_q)``: one row per momentum,
periodic in Q. Free transport shifts row P by ``t * P`` in Q, which is done
with a four-point cubic Lagrange interpolation (an exact circular shift when
the displacement is a whole number of cells).
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from thermoscope.errors import DimensionError, GridError, InputError
from thermoscope.measure import Observable

logger = logging.getLogger(__name__)

MIN_POINTS = 8
ENTROPY_FLOOR = 1e-300
INTEGER_SHIFT_TOL = 1e-9

BINARY_MAGIC = b"KTPS0001"
BINARY_HEADER = struct.Struct("<8sII")

TRAJECTORY_HEADER = ("t", "mass", "entropy", "meanP", "meanP2")


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    q_nodes: NDArray[np.float64]
    p_nodes: NDArray[np.float64]
    period: float
    dq: float = field(init=False)
    dp: float = field(init=False)

    def __post_init__(self) -> None:
        q = np.asarray(self.q_nodes, dtype=float)
        p = np.asarray(self.p_nodes, dtype=float)
        if q.size < MIN_POINTS or p.size < MIN_POINTS:
            raise GridError(f"phase grid needs at least {MIN_POINTS} points per axis")
        object.__setattr__(self, "q_nodes", q)
        object.__setattr__(self, "p_nodes", p)
        object.__setattr__(self, "dq", self.period / q.size)
        object.__setattr__(self, "dp", float(p[1] - p[0]))

    @property
    def shape(self) -> tuple[int, int]:
        return int(self.p_nodes.size), int(self.q_nodes.size)

    @property
    def cell_volume(self) -> float:
        return self.dq * self.dp

    def mesh(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """(Q, P) arrays of shape ``(n_p, n_q)``."""
        Q, P = np.meshgrid(self.q_nodes, self.p_nodes)
        return Q, P


def phase_grid(
    nq: int, np_: int, q_min: float, q_max: float, p_min: float, p_max: float
) -> PhaseGrid:
    """Periodic Q nodes on [q_min, q_max) and P nodes spanning [p_min, p_max]."""
    if nq < MIN_POINTS or np_ < MIN_POINTS:
        raise GridError(f"phase grid needs at least {MIN_POINTS} points per axis")
    if not (q_max > q_min and p_max > p_min):
        raise GridError("grid bounds must be increasing")
    period = q_max - q_min
    q = q_min + (period / nq) * np.arange(nq)
    return PhaseGrid(q, np.linspace(p_min, p_max, np_), period)


@dataclass(frozen=True, eq=False)
class KineticState:
    f: NDArray[np.float64]
    grid: PhaseGrid
    t: float = 0.0
    renormalization: float = 1.0

    def __post_init__(self) -> None:
        f = np.asarray(self.f, dtype=float)
        if f.shape != self.grid.shape:
            raise DimensionError(f"state has shape {f.shape}, grid is {self.grid.shape}")
        if not np.all(np.isfinite(f)):
            raise InputError("kinetic state has non-finite values")
        object.__setattr__(self, "f", f)

    @property
    def mass(self) -> float:
        return math.fsum(self.f.ravel().tolist()) * self.grid.cell_volume

    @property
    def entropy(self) -> float:
        return _entropy(self.f, self.grid)


@dataclass(frozen=True, eq=False)
class HamiltonianField:
    H: NDArray[np.float64]
    label: str = "H"

    def __post_init__(self) -> None:
        H = np.asarray(self.H, dtype=float)
        if not np.all(np.isfinite(H)):
            raise InputError(f"Hamiltonian {self.label!r} has non-finite values")
        object.__setattr__(self, "H", H)


def _entropy(f: NDArray[np.float64], grid: PhaseGrid) -> float:
    positive = f > ENTROPY_FLOOR
    terms = np.zeros_like(f)
    terms[positive] = f[positive] * np.log(f[positive])
    return -math.fsum(terms.ravel().tolist()) * grid.cell_volume


def _normalized(f: NDArray[np.float64], grid: PhaseGrid) -> tuple[NDArray[np.float64], float]:
    mass = math.fsum(f.ravel().tolist()) * grid.cell_volume
    if mass <= 0.0:
        raise InputError("kinetic density has no mass")
    return f / mass, 1.0 / mass


def gaussian_state(
    grid: PhaseGrid,
    q0: float = 0.0,
    p0: float = 0.0,
    sigma_q: float = 1.0,
    sigma_p: float = 1.0,
) -> KineticState:
    Q, P = grid.mesh()
    f = np.exp(-((Q - q0) ** 2) / (2.0 * sigma_q**2) - (P - p0) ** 2 / (2.0 * sigma_p**2))
    return KineticState(_normalized(f, grid)[0], grid)


def free_hamiltonian(grid: PhaseGrid) -> HamiltonianField:
    _, P = grid.mesh()
    return HamiltonianField(0.5 * P * P, "free")


def gibbs_state(grid: PhaseGrid, H: HamiltonianField, lam: float) -> KineticState:
    """exp(lam H) / Z on the grid, formed in log space."""
    if H.H.shape != grid.shape:
        raise DimensionError("Hamiltonian does not match the grid")
    exponent = lam * H.H
    f = np.exp(exponent - exponent.max())
    return KineticState(_normalized(f, grid)[0], grid)


def momentum_observables(grid: PhaseGrid) -> list[Observable]:
    _, P = grid.mesh()
    return [Observable(P.ravel(), "meanP"), Observable((P * P).ravel(), "meanP2")]


def _advect(f: NDArray[np.float64], grid: PhaseGrid, t: float) -> NDArray[np.float64]:
    """Rows of ``f`` evaluated at Q - t P (periodic), by cubic Lagrange shifts."""
    nq = grid.shape[1]
    cells = t * grid.p_nodes / grid.dq
    k = np.floor(cells)
    theta = cells - k
    snap = (theta < INTEGER_SHIFT_TOL) | (theta > 1.0 - INTEGER_SHIFT_TOL)
    k = np.where(theta > 1.0 - INTEGER_SHIFT_TOL, k + 1.0, k).astype(np.int64)
    theta = np.where(snap, 0.0, theta)

    columns = np.arange(nq)

    def rolled(shift: NDArray[np.int64]) -> NDArray[np.float64]:
        index = (columns[None, :] - shift[:, None]) % nq
        return np.take_along_axis(f, index, axis=1)

    out = np.empty_like(f)
    exact = snap
    if np.any(exact):
        out[exact] = rolled(k)[exact]
    if np.any(~exact):
        x = (1.0 - theta)[:, None]
        weights = (
            (-x * (x - 1.0) * (x - 2.0) / 6.0, k + 2),
            ((x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0, k + 1),
            (-(x + 1.0) * x * (x - 2.0) / 2.0, k),
            ((x + 1.0) * x * (x - 1.0) / 6.0, k - 1),
        )
        blended = sum(w * rolled(shift) for w, shift in weights)
        out[~exact] = np.asarray(blended)[~exact]
    return out


def free_transport_exact(f0: KineticState, t: float) -> KineticState:
    """f(t, Q, P) = f0(Q - t P, P) by interpolating each P-row.

    Undershoots of the cubic interpolant are clipped at zero; the result is
    not renormalized.
    """
    f = np.clip(_advect(f0.f, f0.grid, t), 0.0, None)
    return KineticState(f, f0.grid, f0.t + t)


def free_transport_step(state: KineticState, dt: float) -> KineticState:
    """One semi-Lagrangian step, clipped at zero and renormalized to unit mass."""
    if not math.isfinite(dt):
        raise InputError(f"time step must be finite, got {dt!r}")
    f = np.clip(_advect(state.f, state.grid, dt), 0.0, None)
    f, factor = _normalized(f, state.grid)
    if factor != 1.0:
        logger.debug("t=%.6g renormalization factor 1%+.3e", state.t + dt, factor - 1.0)
    return KineticState(f, state.grid, state.t + dt, factor)


def run_transport(state: KineticState, t_end: float, steps: int) -> list[KineticState]:
    """Trajectory of ``steps`` equal steps from ``state``, initial state included."""
    if steps < 1:
        raise GridError(f"need at least one time step, got {steps}")
    dt = t_end / steps
    trajectory = [state]
    for _ in range(steps):
        trajectory.append(free_transport_step(trajectory[-1], dt))
    return trajectory


def _d_dq(f: NDArray[np.float64], h: float) -> NDArray[np.float64]:
    """Fourth-order periodic central difference along Q (axis 1)."""
    ahead1, behind1 = np.roll(f, -1, axis=1), np.roll(f, 1, axis=1)
    ahead2, behind2 = np.roll(f, -2, axis=1), np.roll(f, 2, axis=1)
    return (8.0 * (ahead1 - behind1) - (ahead2 - behind2)) / (12.0 * h)


def _d_dp(f: NDArray[np.float64], h: float) -> NDArray[np.float64]:
    """Fourth-order difference along P (axis 0), one-sided at the edges."""
    d = np.empty_like(f)
    d[2:-2] = (8.0 * (f[3:-1] - f[1:-3]) - (f[4:] - f[:-4])) / (12.0 * h)
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h)
    d[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * h)
    d[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * h)
    return d


def poisson_bracket(
    f: NDArray[np.float64], H: HamiltonianField, grid: PhaseGrid
) -> NDArray[np.float64]:
    """{f, H} = df/dQ dH/dP - df/dP dH/dQ."""
    values = np.asarray(f, dtype=float)
    if values.shape != H.H.shape or values.shape != grid.shape:
        raise DimensionError(
            f"bracket operands have shapes {values.shape} and {H.H.shape}, grid is {grid.shape}"
        )
    return _d_dq(values, grid.dq) * _d_dp(H.H, grid.dp) - _d_dp(values, grid.dp) * _d_dq(
        H.H, grid.dq
    )


def entropy_production(state: KineticState, H: HamiltonianField) -> float:
    """Quadrature of (log f + 1) {f, H}; cells at or below the floor are skipped."""
    bracket = poisson_bracket(state.f, H, state.grid)
    live = state.f > ENTROPY_FLOOR
    terms = np.zeros_like(state.f)
    terms[live] = (np.log(state.f[live]) + 1.0) * bracket[live]
    return math.fsum(terms.ravel().tolist()) * state.grid.cell_volume


@dataclass(frozen=True)
class Snapshot:
    t: float
    mass: float
    entropy: float
    means: dict[str, float]


@dataclass(frozen=True)
class ConservationReport:
    snapshots: list[Snapshot]
    drifts: dict[str, float]

    def rows(self) -> list[tuple[float, ...]]:
        """Trajectory rows in snapshot order: t, mass, entropy, then the means."""
        return [(s.t, s.mass, s.entropy, *s.means.values()) for s in self.snapshots]


def conservation_report(
    trajectory: list[KineticState], observables: list[Observable]
) -> ConservationReport:
    """Mass, entropy and observable means per snapshot, with max drifts from the first."""
    if not trajectory:
        raise GridError("conservation report needs at least one snapshot")
    snapshots = []
    for state in trajectory:
        flat = state.f.ravel()
        cell = state.grid.cell_volume
        means = {}
        for obs in observables:
            if obs.values.shape[0] != flat.shape[0]:
                raise DimensionError(f"observable {obs.label!r} does not match the grid")
            means[obs.label] = math.fsum((obs.values * flat).tolist()) * cell
        snapshots.append(Snapshot(state.t, state.mass, state.entropy, means))

    first = snapshots[0]
    drifts = {
        "mass": max(abs(s.mass - first.mass) for s in snapshots),
        "entropy": max(abs(s.entropy - first.entropy) for s in snapshots),
    }
    for obs in observables:
        drifts[obs.label] = max(abs(s.means[obs.label] - first.means[obs.label]) for s in snapshots)
    return ConservationReport(snapshots, drifts)


def encode_binary(f: NDArray[np.float64]) -> bytes:
    """16-byte header (magic, n_p, n_q) followed by row-major little-endian doubles."""
    values = np.ascontiguousarray(f, dtype="<f8")
    if values.ndim != 2:
        raise DimensionError("binary dump expects a 2-D array")
    n_p, n_q = values.shape
    return BINARY_HEADER.pack(BINARY_MAGIC, n_p, n_q) + values.tobytes(order="C")


def decode_binary(data: bytes) -> NDArray[np.float64]:
    if len(data) < BINARY_HEADER.size:
        raise InputError("binary dump is shorter than its header")
    magic, n_p, n_q = BINARY_HEADER.unpack_from(data)
    if magic != BINARY_MAGIC:
        raise InputError(f"unexpected magic {magic!r}")
    payload = data[BINARY_HEADER.size :]
    if len(payload) != 8 * n_p * n_q:
        raise InputError(f"payload has {len(payload)} bytes, expected {8 * n_p * n_q}")
    return np.frombuffer(payload, dtype="<f8").reshape(n_p, n_q).astype(float)
