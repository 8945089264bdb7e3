"""Sensor suites, selection schedules, and their stacked block matrices.

Selection matrices are never materialized: a per-step selection is an
index set into the suite, and every formula that multiplies by a
selection matrix is realized as row or block gathering instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .blocklinalg import BlockDiagonalMatrix
from .errors import DimensionMismatchError, InvalidParamsError, NotPositiveDefiniteError

__all__ = [
    "Sensor",
    "SensorSuite",
    "Schedule",
    "builtin_sensor",
    "stacked_jacobian",
    "stacked_noise_cov",
    "finite_difference_jacobian",
]


@dataclass(frozen=True)
class Sensor:
    """One nonlinear sensor: measurement map, Jacobian, Gaussian noise.

    ``measure`` maps a state vector to a length-``output_dim`` vector and
    ``jacobian`` to its (output_dim x n) derivative. ``noise_cov`` is the
    SPD noise covariance, constant over time unless ``noise_overrides``
    maps specific step indices to replacement covariances.
    """

    output_dim: int
    measure: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    noise_cov: np.ndarray
    name: str = ""
    noise_overrides: Mapping[int, np.ndarray] | None = None

    def __post_init__(self):
        if self.output_dim < 1:
            raise InvalidParamsError(f"output_dim must be >= 1, got {self.output_dim}")
        cov = np.atleast_2d(np.asarray(self.noise_cov, dtype=float))
        if cov.shape != (self.output_dim, self.output_dim):
            raise DimensionMismatchError(
                f"noise_cov has shape {cov.shape}, expected "
                f"({self.output_dim}, {self.output_dim})"
            )
        cov = 0.5 * (cov + cov.T)
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError("sensor noise covariance is not SPD") from exc
        cov.setflags(write=False)
        object.__setattr__(self, "noise_cov", cov)
        if self.noise_overrides is not None:
            frozen = {}
            for k, m in self.noise_overrides.items():
                m = np.atleast_2d(np.asarray(m, dtype=float))
                if m.shape != cov.shape:
                    raise DimensionMismatchError(
                        f"noise override at step {k} has shape {m.shape}"
                    )
                m = 0.5 * (m + m.T)
                m.setflags(write=False)
                frozen[int(k)] = m
            object.__setattr__(self, "noise_overrides", frozen)

    def noise_cov_at(self, k: int) -> np.ndarray:
        if self.noise_overrides is not None and k in self.noise_overrides:
            return self.noise_overrides[k]
        return self.noise_cov

    def measure_at(self, x: np.ndarray) -> np.ndarray:
        z = np.atleast_1d(np.asarray(self.measure(x), dtype=float))
        if z.shape != (self.output_dim,):
            raise DimensionMismatchError(
                f"sensor {self.name!r} returned shape {z.shape}, "
                f"expected ({self.output_dim},)"
            )
        return z

    def jacobian_at(self, x: np.ndarray) -> np.ndarray:
        J = np.atleast_2d(np.asarray(self.jacobian(x), dtype=float))
        if J.shape != (self.output_dim, x.size):
            raise DimensionMismatchError(
                f"sensor {self.name!r} jacobian has shape {J.shape}, "
                f"expected ({self.output_dim}, {x.size})"
            )
        return J


@dataclass(frozen=True)
class SensorSuite:
    """The m available sensors over a state of dimension ``state_dim``."""

    state_dim: int
    sensors: tuple[Sensor, ...]

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(self.sensors))

    @property
    def m(self) -> int:
        return len(self.sensors)


@dataclass(frozen=True)
class Schedule:
    """Per-step selected sensor index sets with their budgets.

    Sensor indices are 0-based positions in the suite. Each step holds a
    set (duplicates rejected) of at most ``budgets[k]`` indices.
    """

    sets: tuple[tuple[int, ...], ...]
    budgets: tuple[int, ...]

    def __post_init__(self):
        budgets = tuple(int(s) for s in self.budgets)
        if any(s < 0 for s in budgets):
            raise DimensionMismatchError("budgets must be non-negative")
        sets = []
        for k, raw in enumerate(self.sets):
            indices = [int(i) for i in raw]
            if any(i < 0 for i in indices):
                raise DimensionMismatchError(f"step {k} has a negative sensor index")
            if len(set(indices)) != len(indices):
                raise DimensionMismatchError(f"step {k} selects a sensor more than once")
            sets.append(tuple(sorted(indices)))
        if len(sets) != len(budgets):
            raise DimensionMismatchError(
                f"{len(sets)} step sets vs {len(budgets)} budgets"
            )
        for k, (chosen, cap) in enumerate(zip(sets, budgets)):
            if len(chosen) > cap:
                raise DimensionMismatchError(
                    f"step {k} selects {len(chosen)} sensors, budget is {cap}"
                )
        object.__setattr__(self, "sets", tuple(sets))
        object.__setattr__(self, "budgets", budgets)

    @classmethod
    def empty(cls, budgets: Sequence[int]) -> "Schedule":
        return cls(sets=tuple(() for _ in budgets), budgets=tuple(budgets))

    @classmethod
    def _unchecked(cls, sets, budgets) -> "Schedule":
        # internal fast path for callers that construct already-valid,
        # sorted index tuples in bulk (greedy scans, enumeration)
        obj = object.__new__(cls)
        object.__setattr__(obj, "sets", sets)
        object.__setattr__(obj, "budgets", budgets)
        return obj

    @property
    def num_steps(self) -> int:
        return len(self.sets)

    @property
    def total_selected(self) -> int:
        return sum(len(s) for s in self.sets)

    def with_set(self, k: int, indices: Iterable[int]) -> "Schedule":
        new_sets = list(self.sets)
        new_sets[k] = tuple(indices)
        return Schedule(sets=tuple(new_sets), budgets=self.budgets)


def _step_states(linearization: np.ndarray, n: int, K: int) -> np.ndarray:
    x = np.asarray(linearization, dtype=float)
    if x.shape != (n * K,):
        raise DimensionMismatchError(
            f"linearization has shape {x.shape}, expected ({n * K},)"
        )
    return x.reshape(K, n)


def stacked_jacobian(
    suite: SensorSuite, schedule: Schedule, linearization: np.ndarray
) -> BlockDiagonalMatrix:
    """Block-diagonal of per-step stacked Jacobians of the selected sensors.

    Block k stacks the Jacobians of the sensors in schedule step k
    (ascending index), evaluated at the k-th sub-vector of the
    linearization point; an empty step yields a 0 x n block.
    """
    n, K = suite.state_dim, schedule.num_steps
    states = _step_states(linearization, n, K)
    blocks = []
    for k, chosen in enumerate(schedule.sets):
        if any(i >= suite.m for i in chosen):
            raise DimensionMismatchError(
                f"step {k} selects a sensor index >= m={suite.m}"
            )
        if chosen:
            blocks.append(np.vstack([suite.sensors[i].jacobian_at(states[k]) for i in chosen]))
        else:
            blocks.append(np.zeros((0, n)))
    return BlockDiagonalMatrix(blocks=tuple(blocks))


def stacked_noise_cov(suite: SensorSuite, schedule: Schedule) -> BlockDiagonalMatrix:
    """Block-diagonal noise covariance of the selected measurements.

    One SPD block per (step, selected sensor), in schedule order; equals
    the selection-compressed noise covariance of the full suite.
    """
    blocks = []
    for k, chosen in enumerate(schedule.sets):
        if any(i >= suite.m for i in chosen):
            raise DimensionMismatchError(
                f"step {k} selects a sensor index >= m={suite.m}"
            )
        for i in chosen:
            blocks.append(suite.sensors[i].noise_cov_at(k))
    return BlockDiagonalMatrix(blocks=tuple(blocks))


def finite_difference_jacobian(
    measure: Callable[[np.ndarray], np.ndarray], x: np.ndarray, step: float = 1e-6
) -> np.ndarray:
    """Central finite-difference Jacobian of a measurement map at x."""
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(np.asarray(measure(x), dtype=float))
    J = np.empty((f0.size, x.size))
    for j in range(x.size):
        hi, lo = x.copy(), x.copy()
        hi[j] += step
        lo[j] -= step
        J[:, j] = (
            np.atleast_1d(measure(hi)) - np.atleast_1d(measure(lo))
        ) / (2.0 * step)
    return J


def _resolve_noise(output_dim, noise_cov, noise_var):
    if noise_cov is not None and noise_var is not None:
        raise InvalidParamsError("give noise_cov or noise_var, not both")
    if noise_cov is not None:
        return np.atleast_2d(np.asarray(noise_cov, dtype=float))
    if noise_var is None:
        raise InvalidParamsError("sensor needs noise_cov or noise_var")
    if noise_var <= 0:
        raise InvalidParamsError(f"noise_var must be positive, got {noise_var}")
    return float(noise_var) * np.eye(output_dim)


def builtin_sensor(
    kind: str,
    *,
    noise_cov: np.ndarray | None = None,
    noise_var: float | None = None,
    axis: int | None = None,
    anchor: Sequence[float] | None = None,
    weight: np.ndarray | None = None,
    name: str | None = None,
) -> Sensor:
    """Library of concrete sensors with analytically coded Jacobians.

    Kinds:
        linear_coordinate: reads state coordinate ``axis``.
        range: Euclidean distance to ``anchor``; singular at the anchor.
        bearing: planar angle to ``anchor`` from the first two state
            coordinates; singular at the anchor.
        quadratic: 0.5 * x^T W x with symmetric ``weight`` W.

    Raises:
        InvalidParamsError: for unknown kinds or missing/invalid params.
    """
    if kind == "linear_coordinate":
        if axis is None or axis < 0:
            raise InvalidParamsError("linear_coordinate needs a non-negative axis")
        ax = int(axis)

        def measure(x, _ax=ax):
            if _ax >= x.size:
                raise InvalidParamsError(f"axis {_ax} out of range for state dim {x.size}")
            return np.array([x[_ax]])

        def jac(x, _ax=ax):
            if _ax >= x.size:
                raise InvalidParamsError(f"axis {_ax} out of range for state dim {x.size}")
            row = np.zeros((1, x.size))
            row[0, _ax] = 1.0
            return row

        return Sensor(1, measure, jac, _resolve_noise(1, noise_cov, noise_var),
                      name=name or f"linear_coordinate[{ax}]")

    if kind == "range":
        if anchor is None:
            raise InvalidParamsError("range sensor needs an anchor point")
        a = np.asarray(anchor, dtype=float)

        def measure(x, _a=a):
            d = x - _a
            r = float(np.linalg.norm(d))
            if r == 0.0:
                raise InvalidParamsError("range sensor evaluated at its anchor")
            return np.array([r])

        def jac(x, _a=a):
            d = x - _a
            r = float(np.linalg.norm(d))
            if r == 0.0:
                raise InvalidParamsError("range sensor evaluated at its anchor")
            return (d / r).reshape(1, -1)

        return Sensor(1, measure, jac, _resolve_noise(1, noise_cov, noise_var),
                      name=name or "range")

    if kind == "bearing":
        if anchor is None:
            raise InvalidParamsError("bearing sensor needs an anchor point")
        a = np.asarray(anchor, dtype=float)
        if a.size < 2:
            raise InvalidParamsError("bearing anchor needs at least two coordinates")

        def measure(x, _a=a):
            if x.size < 2:
                raise InvalidParamsError("bearing sensor needs state dim >= 2")
            dx, dy = x[0] - _a[0], x[1] - _a[1]
            if dx == 0.0 and dy == 0.0:
                raise InvalidParamsError("bearing sensor evaluated at its anchor")
            return np.array([np.arctan2(dy, dx)])

        def jac(x, _a=a):
            if x.size < 2:
                raise InvalidParamsError("bearing sensor needs state dim >= 2")
            dx, dy = x[0] - _a[0], x[1] - _a[1]
            r2 = dx * dx + dy * dy
            if r2 == 0.0:
                raise InvalidParamsError("bearing sensor evaluated at its anchor")
            row = np.zeros((1, x.size))
            row[0, 0] = -dy / r2
            row[0, 1] = dx / r2
            return row

        return Sensor(1, measure, jac, _resolve_noise(1, noise_cov, noise_var),
                      name=name or "bearing")

    if kind == "quadratic":
        if weight is None:
            raise InvalidParamsError("quadratic sensor needs a weight matrix")
        W = np.atleast_2d(np.asarray(weight, dtype=float))
        if W.shape[0] != W.shape[1]:
            raise InvalidParamsError(f"weight must be square, got shape {W.shape}")
        W = 0.5 * (W + W.T)

        def measure(x, _W=W):
            if x.size != _W.shape[0]:
                raise InvalidParamsError(
                    f"quadratic weight is {_W.shape[0]} x {_W.shape[0]}, state dim {x.size}"
                )
            return np.array([0.5 * float(x @ _W @ x)])

        def jac(x, _W=W):
            if x.size != _W.shape[0]:
                raise InvalidParamsError(
                    f"quadratic weight is {_W.shape[0]} x {_W.shape[0]}, state dim {x.size}"
                )
            return (_W @ x).reshape(1, -1)

        return Sensor(1, measure, jac, _resolve_noise(1, noise_cov, noise_var),
                      name=name or "quadratic")

    raise InvalidParamsError(f"unknown sensor kind {kind!r}")
