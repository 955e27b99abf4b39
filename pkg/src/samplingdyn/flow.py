"""Fixed-step integration of the revision dynamics and basin estimation.

dp_i/dt = w_i(p_j) - p_i points into the unit square on its boundary, so
trajectories are clamped componentwise after every step; the clamp can
only absorb integrator error.  Fixed-step RK4 keeps runs reproducible
bit for bit, which the golden-file outputs depend on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import (
    StationaryAnalysis,
    StationaryState,
    find_stationary_one_pop,
    find_stationary_two_pop,
)
from .dynamics import Environment, ResponsePair

CONVERGENCE_TOL = 1e-10
MATCH_TOL = 1e-6
DEFAULT_T_MAX = 200.0
DEFAULT_DT = 0.01


class NumericError(ArithmeticError):
    """A trajectory produced a non-finite state (response function bug)."""


@dataclass
class Trajectory:
    """Time-stamped states from one integration run."""

    times: np.ndarray
    states: np.ndarray  # shape (n,) for one population, (n, 2) for two
    converged: bool
    limit: StationaryState | None
    dt: float
    max_clamp: float

    @property
    def verdict(self) -> str:
        if self.converged:
            return f"converged-to({self._limit_label()})"
        return "max-time-reached"

    def _limit_label(self) -> str:
        if self.limit is None:
            return "unmatched"
        return repr(self.limit.state)

    @property
    def final_state(self):
        last = self.states[-1]
        return float(last) if last.ndim == 0 or last.shape == () else tuple(last)


def _field_and_dim(system, initial):
    """Resolve (vector field on (n, d) arrays, d, stationary solver)."""
    init = np.atleast_1d(np.asarray(initial, dtype=float))
    if init.ndim != 1 or init.size not in (1, 2):
        raise ValueError(f"initial state must be a scalar or a pair, got {initial!r}")
    dim = init.size
    if isinstance(system, Environment):
        if dim == 1:
            w = system.single_response()
        else:
            pair = system.pair()
    elif isinstance(system, ResponsePair):
        if dim == 1:
            raise ValueError("a ResponsePair drives two-population dynamics")
        pair = system
    else:
        if dim != 1:
            raise ValueError("a single response function drives one-population dynamics")
        w = system

    if dim == 1:
        def field(x):  # x: (n, 1)
            return w(x) - x
    else:
        w1, w2 = pair.w1, pair.w2

        def field(x):  # x: (n, 2)
            out = np.empty_like(x)
            out[:, 0] = w1(x[:, 1]) - x[:, 0]
            out[:, 1] = w2(x[:, 0]) - x[:, 1]
            return out

    return field, dim, init


def _stationary_for(system, dim: int) -> StationaryAnalysis:
    if dim == 1:
        return find_stationary_one_pop(system)
    return find_stationary_two_pop(system)


def _match_stationary(
    states: StationaryAnalysis, point: np.ndarray, tol: float = MATCH_TOL
) -> StationaryState | None:
    best = None
    best_dist = math.inf
    for s in states.states:
        ref = np.atleast_1d(np.asarray(s.state, dtype=float))
        dist = float(np.max(np.abs(ref - point)))
        if dist < best_dist:
            best, best_dist = s, dist
    if best is not None and best_dist <= tol:
        return best
    return None


def _rk4_step(field, x, dt, k1=None):
    # stage arguments clamped into the unit cube; the field is only
    # defined there and boundary overshoot is O(dt * |field|)
    if k1 is None:
        k1 = field(x)
    k2 = field(np.clip(x + 0.5 * dt * k1, 0.0, 1.0))
    k3 = field(np.clip(x + 0.5 * dt * k2, 0.0, 1.0))
    k4 = field(np.clip(x + dt * k3, 0.0, 1.0))
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


def _scalar_rhs(system, dim: int):
    """Python-float vector field matching the batched one bit for bit in
    structure: stage states are clamped componentwise before evaluation."""
    if dim == 1:
        if isinstance(system, Environment):
            w = system.single_response()
        else:
            w = system

        def rhs(state):
            p = _clamp01(state[0])
            return (w(p) - p,)

        return rhs
    pair = system.pair() if isinstance(system, Environment) else system
    w1, w2 = pair.w1, pair.w2

    def rhs(state):
        p1, p2 = _clamp01(state[0]), _clamp01(state[1])
        return (w1(p2) - p1, w2(p1) - p2)

    return rhs


def integrate(
    system,
    initial,
    t_max: float = DEFAULT_T_MAX,
    dt: float = DEFAULT_DT,
    stationary: StationaryAnalysis | None = None,
) -> Trajectory:
    """Integrate from one initial state, recording every step.

    Stops early once the vector field's sup norm drops below 1e-10; the
    verdict then names the nearest stationary state within 1e-6 (matched
    against ``stationary`` when given, otherwise computed on demand).
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    _, dim, init = _field_and_dim(system, initial)
    if np.any(init < 0.0) or np.any(init > 1.0):
        raise ValueError(f"initial state outside the unit interval/square: {initial!r}")

    rhs = _scalar_rhs(system, dim)
    n_steps = int(round(t_max / dt))
    x = tuple(float(v) for v in init)
    times = [0.0]
    path = [x]
    converged = False
    max_clamp = 0.0
    half = 0.5 * dt
    sixth = dt / 6.0
    for step in range(1, n_steps + 1):
        k1 = rhs(x)
        if max(abs(v) for v in k1) < CONVERGENCE_TOL:
            converged = True
            break
        k2 = rhs(tuple(xi + half * ki for xi, ki in zip(x, k1)))
        k3 = rhs(tuple(xi + half * ki for xi, ki in zip(x, k2)))
        k4 = rhs(tuple(xi + dt * ki for xi, ki in zip(x, k3)))
        raw = tuple(
            xi + sixth * (a + 2.0 * b + 2.0 * c + d)
            for xi, a, b, c, d in zip(x, k1, k2, k3, k4)
        )
        if not all(math.isfinite(v) for v in raw):
            raise NumericError(f"non-finite state at step {step}")
        x = tuple(_clamp01(v) for v in raw)
        max_clamp = max(max_clamp, max(abs(a - b) for a, b in zip(x, raw)))
        times.append(step * dt)
        path.append(x)
    else:
        converged = max(abs(v) for v in rhs(x)) < CONVERGENCE_TOL

    limit = None
    if converged:
        if stationary is None:
            stationary = _stationary_for(system, dim)
        limit = _match_stationary(stationary, np.asarray(x))

    states = np.asarray(path)
    if dim == 1:
        states = states[:, 0]
    return Trajectory(
        times=np.asarray(times),
        states=states,
        converged=converged,
        limit=limit,
        dt=dt,
        max_clamp=max_clamp,
    )


def convergence_limit(
    system,
    initial,
    t_max: float = 500.0,
    dt: float = DEFAULT_DT,
    stationary: StationaryAnalysis | None = None,
) -> StationaryState:
    """The stationary state a trajectory settles into."""
    if stationary is None:
        _, dim, _ = _field_and_dim(system, initial)
        stationary = _stationary_for(system, dim)
    traj = integrate(system, initial, t_max=t_max, dt=dt, stationary=stationary)
    if not traj.converged or traj.limit is None:
        raise NumericError(
            f"trajectory from {initial!r} did not converge to a known stationary "
            f"state within t_max={t_max}"
        )
    return traj.limit


def _terminal_states(field, x0: np.ndarray, t_max: float, dt: float):
    """Batched RK4 without trajectory recording; converged rows drop out.

    The working set is kept compact: rows are only copied out when they
    converge, so the common all-active phase costs no masking passes.
    Returns (final states, converged mask).
    """
    n = x0.shape[0]
    out = x0.copy()
    converged = np.zeros(n, dtype=bool)
    idx = np.arange(n)
    x = x0.copy()
    n_steps = int(round(t_max / dt))
    for _ in range(n_steps):
        fa = field(x)
        if not np.all(np.isfinite(fa)):
            raise NumericError("non-finite vector field during batched integration")
        done = np.max(np.abs(fa), axis=1) < CONVERGENCE_TOL
        if done.any():
            rows = idx[done]
            out[rows] = x[done]
            converged[rows] = True
            keep = ~done
            idx, x, fa = idx[keep], x[keep], fa[keep]
            if idx.size == 0:
                return out, converged
        x = np.clip(_rk4_step(field, x, dt, k1=fa), 0.0, 1.0)
    if idx.size:
        fa = field(x)
        done = np.max(np.abs(fa), axis=1) < CONVERGENCE_TOL
        out[idx] = x
        converged[idx[done]] = True
    return out, converged


def terminal_states(
    system,
    initials,
    t_max: float = DEFAULT_T_MAX,
    dt: float = DEFAULT_DT,
):
    """Batched no-recording integration of many initial states.

    ``initials`` has shape (n,) for one population or (n, 2) for two.
    Returns (final states in the same shape, converged mask).
    """
    x0 = np.asarray(initials, dtype=float)
    one_pop = x0.ndim == 1
    probe = np.array([0.5]) if one_pop else np.array([0.5, 0.5])
    field, dim, _ = _field_and_dim(system, probe)
    batch = x0.reshape(-1, dim)
    finals, ok = _terminal_states(field, batch, t_max, dt)
    return (finals[:, 0] if one_pop else finals), ok


@dataclass
class BasinGrid:
    """Attractor index per grid cell plus each attractor's share of cells."""

    resolution: int
    attractors: tuple[StationaryState, ...]
    cells: np.ndarray  # shape (res,) or (res, res); -1 marks a flagged cell
    shares: dict[int, float]
    flagged: int

    def share_of(self, state: StationaryState) -> float:
        for i, s in enumerate(self.attractors):
            if s is state or s.state == state.state:
                return self.shares.get(i, 0.0)
        raise ValueError(f"unknown attractor {state!r}")


def estimate_basins(
    system,
    resolution: int,
    t_max: float = DEFAULT_T_MAX,
    dt: float = DEFAULT_DT,
) -> BasinGrid:
    """Integrate from every cell center and record which attractor wins.

    Cells that fail to converge within t_max are retried once with half
    the step size, then flagged with index -1.  Shares are fractions of
    converged cells per attractor.
    """
    if resolution < 2:
        raise ValueError(f"resolution must be at least 2, got {resolution!r}")
    probe = np.array([0.5])
    if isinstance(system, Environment) and system.is_symmetric:
        # symmetric environments can be run either way; basins default to
        # the arity of the stationary analysis requested by the caller via
        # ResponsePair for two populations
        dim = 1
    elif isinstance(system, Environment) or isinstance(system, ResponsePair):
        dim = 2
    else:
        dim = 1

    centers = (np.arange(resolution) + 0.5) / resolution
    if dim == 1:
        x0 = centers.reshape(-1, 1)
        field, _, _ = _field_and_dim(system, probe)
    else:
        g1, g2 = np.meshgrid(centers, centers, indexing="ij")
        x0 = np.column_stack([g1.ravel(), g2.ravel()])
        field, _, _ = _field_and_dim(system, np.array([0.5, 0.5]))

    stationary = _stationary_for(system, dim)
    if stationary.continuum:
        raise ValueError("basin estimation needs finitely many stationary states")

    finals, ok = _terminal_states(field, x0, t_max, dt)
    if not ok.all():
        redo = ~ok
        finals_retry, ok_retry = _terminal_states(field, x0[redo], t_max, dt / 2.0)
        finals[redo] = finals_retry
        ok[redo] = ok_retry

    cells = np.full(x0.shape[0], -1, dtype=int)
    refs = np.array(
        [np.atleast_1d(np.asarray(s.state, dtype=float)) for s in stationary.states]
    )
    for i in range(x0.shape[0]):
        if not ok[i]:
            continue
        dists = np.max(np.abs(refs - finals[i]), axis=1)
        j = int(np.argmin(dists))
        if dists[j] <= 1e-3:
            cells[i] = j
    flagged = int(np.sum(cells < 0))
    assigned = cells[cells >= 0]
    shares: dict[int, float] = {}
    if assigned.size:
        for j in np.unique(assigned):
            shares[int(j)] = float(np.sum(assigned == j)) / float(cells.size)
    shape = (resolution,) if dim == 1 else (resolution, resolution)
    return BasinGrid(
        resolution=resolution,
        attractors=stationary.states,
        cells=cells.reshape(shape),
        shares=shares,
        flagged=flagged,
    )
