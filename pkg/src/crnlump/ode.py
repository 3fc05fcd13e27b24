"""Deterministic semantics: mass-action vector field, fixed-step integration
under piecewise-constant controls, block-sum projection, cost functionals,
and projection of controls onto a quotient network.

The vector field of species A is

    f_A(v, a) = sum_r a_r (product_r(A) - reactant_r(A)) prod_B v_B^{rho(B)} / rho(B)!

with the factorial divisor convention, so it is the large-population limit of
the count-scaled stochastic model and is linear in the control vector `a`.
Integration is classical fixed-step RK4 with steps split at schedule
breakpoints: bit-identical output for identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .model import Partition, ReactionNetwork, StructuralError
from .reconstruct import _solve_box_core


class DivergenceError(RuntimeError):
    """Integration produced a non-finite state."""

    def __init__(self, time: float):
        super().__init__(f"non-finite state at t = {time}")
        self.time = time


class ProjectionFailureError(RuntimeError):
    """Drift matching left a residual above threshold; the partition is not an
    equivalence or the trajectory is inconsistent with the network."""

    def __init__(self, time: float, residual: float):
        super().__init__(f"projection residual {residual:.3e} at t = {time}")
        self.time = time
        self.residual = residual


class ControlSchedule:
    """Piecewise-constant per-reaction control values.

    `breakpoints` start at 0 and increase strictly; value row i applies on
    [breakpoints[i], breakpoints[i+1]) and the last row extends to the end of
    any horizon it is used with.
    """

    def __init__(self, breakpoints: Sequence[float], values: Sequence[Sequence[float]]):
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.breakpoints.ndim != 1 or self.values.ndim != 2:
            raise ValueError("breakpoints must be 1-D and values 2-D")
        if len(self.breakpoints) != len(self.values):
            raise ValueError("one value row per breakpoint required")
        if len(self.breakpoints) == 0 or self.breakpoints[0] != 0.0:
            raise ValueError("schedule must start at t = 0")
        if np.any(np.diff(self.breakpoints) <= 0):
            raise ValueError("breakpoints must increase strictly")

    @classmethod
    def constant(cls, values: Sequence[float]) -> "ControlSchedule":
        return cls([0.0], [list(values)])

    @classmethod
    def midpoint(cls, net: ReactionNetwork) -> "ControlSchedule":
        return cls.constant([r.rate.midpoint for r in net.reactions])

    @property
    def n_reactions(self) -> int:
        return self.values.shape[1]

    def validate_for(self, net: ReactionNetwork):
        if self.n_reactions != net.n_reactions:
            raise StructuralError("schedule width does not match reaction count")
        lo = np.array([r.rate.lo for r in net.reactions])
        hi = np.array([r.rate.hi for r in net.reactions])
        if np.any(self.values < lo) or np.any(self.values > hi):
            raise StructuralError("schedule value outside its rate interval")

    def segment_at(self, t: float) -> int:
        if t < 0:
            raise ValueError("negative time")
        return max(0, int(np.searchsorted(self.breakpoints, t, side="right")) - 1)

    def value_at(self, t: float) -> np.ndarray:
        return self.values[self.segment_at(t)]


@dataclass
class Trajectory:
    """Time grid plus per-time state vectors, with the schedule that drove it."""

    times: np.ndarray
    states: np.ndarray
    schedule: Optional[ControlSchedule] = None
    names: Optional[Tuple[str, ...]] = None

    def state_at(self, t: float) -> np.ndarray:
        """Linear interpolation between grid points."""
        times = self.times
        if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
            raise StructuralError(f"time {t} outside trajectory range")
        i = int(np.searchsorted(times, t, side="right")) - 1
        i = min(max(i, 0), len(times) - 2)
        t0, t1 = times[i], times[i + 1]
        w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        return (1.0 - w) * self.states[i] + w * self.states[i + 1]


class VectorField:
    """Compiled evaluator for one network: monomials, drift, and the
    coefficient matrix of the drift as a linear function of the controls."""

    def __init__(self, net: ReactionNetwork):
        self.net = net
        R, S = net.n_reactions, net.n_species
        cols = sorted({i for r in net.reactions for i, _ in r.reactant})
        self.cols = np.array(cols, dtype=int)
        E = np.zeros((R, len(cols)), dtype=float)
        fact = np.ones(R)
        N = np.zeros((R, S))
        pos = {c: k for k, c in enumerate(cols)}
        for r in net.reactions:
            for i, c in r.reactant:
                E[r.id, pos[i]] = c
                fact[r.id] *= math.factorial(c)
                N[r.id, i] -= c
            for i, c in r.product:
                N[r.id, i] += c
        self.E = E
        self.fact = fact
        self.stoich = N

    def monomials(self, v: np.ndarray) -> np.ndarray:
        """prod_B v_B^{rho(B)} / rho(B)! per reaction."""
        if len(self.cols) == 0:
            return 1.0 / self.fact
        base = v[self.cols]
        return np.prod(base[None, :] ** self.E, axis=1) / self.fact

    def __call__(self, v: np.ndarray, alpha: np.ndarray) -> np.ndarray:
        return (alpha * self.monomials(v)) @ self.stoich

    def block_coefficients(self, indicator: np.ndarray) -> np.ndarray:
        """Per-reaction block-summed stoichiometric change, shape (R, n_blocks)."""
        return self.stoich @ indicator.T


def vector_field(net: ReactionNetwork, v: Sequence[float],
                 alpha: Sequence[float]) -> np.ndarray:
    """Drift of the deterministic model at state `v` under controls `alpha`."""
    return VectorField(net)(np.asarray(v, dtype=float), np.asarray(alpha, dtype=float))


def block_indicator(part: Partition) -> np.ndarray:
    """0/1 matrix (n_blocks, n_species) summing species into their blocks."""
    B = np.zeros((part.n_blocks, part.n), dtype=float)
    for bid, block in enumerate(part.blocks):
        for i in block:
            B[bid, i] = 1.0
    return B


def _time_grid(t_end: float, step: float, breakpoints: np.ndarray) -> np.ndarray:
    if step <= 0:
        raise ValueError("step must be positive")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    n = int(math.floor(t_end / step + 1e-9))
    times = [i * step for i in range(n + 1)]
    if not times or abs(times[-1] - t_end) > 1e-9 * max(1.0, t_end):
        times.append(t_end)
    else:
        times[-1] = t_end
    grid = np.array(times)
    extra = [b for b in breakpoints if 0.0 < b < t_end
             and np.min(np.abs(grid - b)) > 1e-12 * max(1.0, t_end)]
    if extra:
        grid = np.sort(np.concatenate([grid, np.array(extra)]))
    return grid


def simulate(net: ReactionNetwork, v0: Sequence[float], schedule: ControlSchedule,
             t_end: float, step: float = 1e-3) -> Trajectory:
    """Integrate the deterministic model with classical RK4 at fixed step,
    splitting steps at schedule breakpoints. Controls are held at the value of
    the segment containing the step's left endpoint."""
    schedule.validate_for(net)
    v = np.asarray(v0, dtype=float).copy()
    if v.shape != (net.n_species,):
        raise StructuralError("initial state length mismatch")
    vf = VectorField(net)
    times = _time_grid(t_end, step, schedule.breakpoints)
    states = np.empty((len(times), net.n_species))
    states[0] = v
    seg = np.searchsorted(schedule.breakpoints, times[:-1], side="right") - 1
    seg = np.maximum(seg, 0)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(len(times) - 1):
            dt = times[k + 1] - times[k]
            alpha = schedule.values[seg[k]]
            k1 = vf(v, alpha)
            k2 = vf(v + 0.5 * dt * k1, alpha)
            k3 = vf(v + 0.5 * dt * k2, alpha)
            k4 = vf(v + dt * k3, alpha)
            v = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(v)):
                raise DivergenceError(times[k + 1])
            states[k + 1] = v
    return Trajectory(np.asarray(times), states, schedule, net.names)


def block_sums(traj: Trajectory, part: Partition) -> Trajectory:
    """Per-block cumulative trajectory: one component per partition block."""
    if traj.states.shape[1] != part.n:
        raise StructuralError("trajectory width does not match partition universe")
    B = block_indicator(part)
    names = None
    if traj.names is not None:
        names = tuple(traj.names[b[0]] for b in part.blocks)
    return Trajectory(traj.times, traj.states @ B.T, traj.schedule, names)


@dataclass
class CostSpec:
    """Linear running and final cost: integral of `running_weights . v(t)` over
    [0, horizon] plus `final_weights . v(horizon)`. Weights must be constant
    within each block of the partition the cost is used with."""

    running_weights: np.ndarray
    final_weights: np.ndarray
    horizon: float

    def __post_init__(self):
        self.running_weights = np.asarray(self.running_weights, dtype=float)
        self.final_weights = np.asarray(self.final_weights, dtype=float)

    def respects(self, part: Partition) -> bool:
        for block in part.blocks:
            if len({self.running_weights[i] for i in block}) > 1:
                return False
            if len({self.final_weights[i] for i in block}) > 1:
                return False
        return True

    def project(self, part: Partition) -> "CostSpec":
        """Equivalent cost on the quotient network (one weight per block)."""
        if not self.respects(part):
            raise StructuralError("cost weights are not block-respecting")
        reps = part.representatives
        return CostSpec(self.running_weights[list(reps)],
                        self.final_weights[list(reps)], self.horizon)


def evaluate_cost(traj: Trajectory, cost: CostSpec) -> float:
    """Trapezoidal quadrature of the running cost over the trajectory grid
    plus the final cost at the horizon."""
    T = cost.horizon
    times = traj.times
    if T > times[-1] + 1e-9 * max(1.0, T):
        raise StructuralError("cost horizon exceeds trajectory range")
    running = traj.states @ cost.running_weights
    total = 0.0
    for k in range(len(times) - 1):
        t1 = times[k + 1]
        if t1 >= T:
            w = 1.0 if times[k + 1] == times[k] else (T - times[k]) / (t1 - times[k])
            rT = running[k] + w * (running[k + 1] - running[k])
            total += 0.5 * (T - times[k]) * (running[k] + rT)
            break
        total += 0.5 * (t1 - times[k]) * (running[k] + running[k + 1])
    return total + float(cost.final_weights @ traj.state_at(T))


def project_control(net: ReactionNetwork, part: Partition,
                    lumped: ReactionNetwork, traj: Trajectory,
                    schedule: ControlSchedule,
                    residual_threshold: float = 1e-6
                    ) -> Tuple[ControlSchedule, float]:
    """Controls for the quotient network matching a trajectory of the original.

    At every grid time the box-constrained least-squares drift match is solved
    in the lumped parameter box: the block-summed original drift is the target
    and the lumped drift is linear in the lumped controls. Each step of the
    returned piecewise-constant schedule averages the solutions at its two
    endpoints (both evaluated under that step's original control value), which
    centers the constant approximation on the step. Returns the schedule and
    the worst drift-match residual; a residual above `residual_threshold`
    raises ProjectionFailureError.
    """
    schedule.validate_for(net)
    if traj.states.shape[1] != net.n_species:
        raise StructuralError("trajectory does not match network")
    B = block_indicator(part)
    if B.shape[0] != lumped.n_species:
        raise StructuralError("partition size does not match lumped network")
    vf = VectorField(net)
    lvf = VectorField(lumped)
    lo = np.array([r.rate.lo for r in lumped.reactions])
    hi = np.array([r.rate.hi for r in lumped.reactions])
    vhat = traj.states @ B.T
    times = traj.times
    seg = np.maximum(np.searchsorted(schedule.breakpoints, times[:-1], side="right") - 1, 0)

    def solve_at(k: int, alpha: np.ndarray, warm: np.ndarray):
        target = B @ vf(traj.states[k], alpha)
        coeff = (lvf.stoich * lvf.monomials(vhat[k])[:, None]).T
        lam = float((coeff * coeff).sum())
        res = _solve_box_core(coeff, target, lo, hi, 1e-11, 2000, warm, lam)
        return res.x, res.residual

    n_steps = len(times) - 1
    out = np.empty((n_steps, lumped.n_reactions))
    worst = 0.0
    worst_time = 0.0
    warm = 0.5 * (lo + hi)
    carried: Optional[np.ndarray] = None
    for k in range(n_steps):
        alpha = schedule.values[seg[k]]
        if carried is not None and k > 0 and seg[k] == seg[k - 1]:
            a_left = carried
        else:
            a_left, r_left = solve_at(k, alpha, warm)
            if r_left > worst:
                worst, worst_time = r_left, float(times[k])
        a_right, r_right = solve_at(k + 1, alpha, a_left)
        if r_right > worst:
            worst, worst_time = r_right, float(times[k + 1])
        out[k] = np.clip(0.5 * (a_left + a_right), lo, hi)
        warm = a_right
        carried = a_right
    if worst > residual_threshold:
        raise ProjectionFailureError(worst_time, worst)
    return ControlSchedule(times[:-1].copy(), out), worst


# ---------------------------------------------------------------------------
# CSV interchange: trajectories as `t,<species...>`, schedules as
# `t_start,<reaction controls...>`.

def _fmt(x: float) -> str:
    return repr(float(x))


def trajectory_to_csv(traj: Trajectory) -> str:
    names = traj.names or tuple(f"x{i}" for i in range(traj.states.shape[1]))
    lines = ["t," + ",".join(names)]
    for t, row in zip(traj.times, traj.states):
        lines.append(_fmt(t) + "," + ",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def trajectory_from_csv(text: str) -> Trajectory:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty trajectory file")
    header = lines[0].split(",")
    if header[0] != "t":
        raise ValueError("trajectory header must start with 't'")
    names = tuple(h.strip() for h in header[1:])
    times = []
    states = []
    for ln in lines[1:]:
        parts = ln.split(",")
        times.append(float(parts[0]))
        states.append([float(x) for x in parts[1:]])
    return Trajectory(np.array(times), np.array(states), None, names)


def schedule_to_csv(sched: ControlSchedule) -> str:
    header = "t_start," + ",".join(f"r{i}" for i in range(sched.n_reactions))
    lines = [header]
    for t, row in zip(sched.breakpoints, sched.values):
        lines.append(_fmt(t) + "," + ",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def schedule_from_csv(text: str) -> ControlSchedule:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty schedule file")
    start = 1 if lines[0].split(",")[0].strip() == "t_start" else 0
    breakpoints = []
    values = []
    for ln in lines[start:]:
        parts = ln.split(",")
        breakpoints.append(float(parts[0]))
        values.append([float(x) for x in parts[1:]])
    return ControlSchedule(breakpoints, values)
