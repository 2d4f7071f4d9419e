"""Galerkin-truncated integration of the phase-modulated frequency flow.

The state is a finitely supported sequence on the frequency box
``|n|_inf <= N_box``.  Its time derivative is the alternating
(2k+1)-linear interaction sum with unimodular phases ``exp(i t mu)``
attached per resonance level, with odd slots unconjugated and even
slots conjugated.  Interactions are precomputed once into a table that
groups admissible tuples by (output frequency, resonance level,
exceptional flag), so each evaluation costs one phase per group rather
than one per tuple, and so the flow can be split exactly into its
principal (complement) and remainder (exceptional) parts.

The truncation keeps only tuples whose entries *and* output lie in the
box; with a purely imaginary coupling ``c * lam`` this projected
nonlinearity conserves the squared sequence norm exactly, which the
acceptance checks exploit.  Time stepping is the classical one-step
fourth-order scheme with a fixed step.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, replace
from typing import BinaryIO, Iterator, Sequence

import numpy as np

from .errors import (
    BudgetError,
    DivergenceError,
    ParameterError,
    PreconditionError,
    UnsupportedCaseError,
)
from .lattice import SpectralField, Vec, weighted_norm

_DEFAULT_TUPLE_BUDGET = 30_000_000


class Splitting(enum.Enum):
    FULL = "Full"
    PRINCIPAL = "PrincipalAc"
    REMAINDER = "RemainderR"


@dataclass(frozen=True)
class FlowParams:
    """Dimensions, coupling, truncation box, and nonlinearity splitting.

    ``c_const`` fixes the Fourier-convention constant in front of the
    interaction sum; the default ``-1j`` corresponds to the convention
    in which a real coupling ``lam`` conserves the squared norm.
    """

    d: int
    k: int
    lam: complex
    box_radius: int
    c_const: complex = -1j
    splitting: Splitting = Splitting.FULL
    tuple_budget: int = _DEFAULT_TUPLE_BUDGET

    def __post_init__(self):
        if not 1 <= self.d <= 4:
            raise ParameterError(f"dimension {self.d} outside 1..4")
        if self.k < 1:
            raise ParameterError("k must be at least 1")
        if self.box_radius < 1:
            raise ParameterError("box_radius must be at least 1")
        object.__setattr__(self, "lam", complex(self.lam))
        object.__setattr__(self, "c_const", complex(self.c_const))
        if not isinstance(self.splitting, Splitting):
            object.__setattr__(self, "splitting", Splitting(self.splitting))
        if self.splitting is not Splitting.FULL and (self.d, self.k) == (1, 1):
            raise UnsupportedCaseError(
                "the exceptional splitting is undefined for d = k = 1")


def _box_points(d: int, radius: int) -> np.ndarray:
    axes = [np.arange(-radius, radius + 1, dtype=np.int64)] * d
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _cubic_flags(coords: np.ndarray) -> np.ndarray:
    n1, n2, n3 = coords[:, 0, :], coords[:, 1, :], coords[:, 2, :]
    return (np.all(n2 == n1, axis=-1) | np.all(n2 == n3, axis=-1)
            | np.all(n1 == n3, axis=-1))


@dataclass
class InteractionTable:
    """Admissible interaction tuples grouped by output, level, and flag."""

    params: FlowParams
    box_points: np.ndarray          # (V, d) int64, lexicographic
    entry_idx: np.ndarray           # (T, 2k+1) int32 into box_points
    out_idx: np.ndarray             # (T,) int32
    group_starts: np.ndarray        # (G,) int64 into the sorted tuples
    group_out: np.ndarray           # (G,) int32
    group_mu: np.ndarray            # (G,) int64
    group_in_a: np.ndarray          # (G,) bool

    @property
    def tuple_count(self) -> int:
        return len(self.out_idx)

    @property
    def group_count(self) -> int:
        return len(self.group_starts)

    def point(self, idx: int) -> Vec:
        return tuple(int(c) for c in self.box_points[idx])

    def groups(self) -> Iterator[tuple[Vec, int, bool, list[tuple[Vec, ...]]]]:
        """Yield (output, level, exceptional flag, member tuples)."""
        bounds = np.r_[self.group_starts, self.tuple_count]
        for g in range(self.group_count):
            lo, hi = int(bounds[g]), int(bounds[g + 1])
            members = [tuple(self.point(i) for i in row)
                       for row in self.entry_idx[lo:hi]]
            yield (self.point(int(self.group_out[g])),
                   int(self.group_mu[g]), bool(self.group_in_a[g]), members)


def build_interaction_table(params: FlowParams) -> InteractionTable:
    """Enumerate every in-box tuple whose signed sum stays in the box."""
    d, k = params.d, params.k
    pts = _box_points(d, params.box_radius)
    V = len(pts)
    L = 2 * k + 1
    raw = V ** L
    if raw > params.tuple_budget:
        raise BudgetError(f"{raw} raw tuples exceed the budget "
                          f"{params.tuple_budget}")

    signs = np.asarray([(-1) ** j for j in range(L)], dtype=np.int64)
    norms = (pts * pts).sum(axis=1)
    side = 2 * params.box_radius + 1
    # index decode tables for the trailing 2k slots of one chunk
    inner = V ** (L - 1)
    trailing = np.empty((inner, L - 1), dtype=np.int32)
    for j in range(L - 1):
        reps_after = V ** (L - 2 - j)
        reps_before = inner // (V * reps_after)
        trailing[:, j] = np.tile(np.repeat(np.arange(V, dtype=np.int32),
                                           reps_after), reps_before)

    tail_vec = np.zeros((inner, d), dtype=np.int64)
    tail_quad = np.zeros(inner, dtype=np.int64)
    for j in range(L - 1):
        tail_vec += signs[j + 1] * pts[trailing[:, j]]
        tail_quad += signs[j + 1] * norms[trailing[:, j]]

    kept_idx, kept_out, kept_mu, kept_flag = [], [], [], []
    classify = None
    if (d, k) != (1, 1):
        if k == 1 and d in (2, 3):
            classify = "cubic"
        elif k >= 2 and d <= 2:
            classify = "ranked"

    from .multilinear import _classify_batch  # local import, no cycle at load

    for first in range(V):
        vec = pts[first][None, :] + tail_vec
        inbox = np.all(np.abs(vec) <= params.box_radius, axis=1)
        if not inbox.any():
            continue
        vec = vec[inbox]
        rows = trailing[inbox]
        quad = norms[first] + tail_quad[inbox]
        mu = (vec * vec).sum(axis=1) - quad
        idx = np.empty((len(rows), L), dtype=np.int32)
        idx[:, 0] = first
        idx[:, 1:] = rows
        if classify == "cubic":
            flags = _cubic_flags(pts[idx])
        elif classify == "ranked":
            flags = _classify_batch(pts[idx], d, k)
        else:
            flags = np.zeros(len(rows), dtype=bool)
        # lexicographic output index inside the box
        out = np.zeros(len(rows), dtype=np.int64)
        for i in range(d):
            out = out * side + (vec[:, i] + params.box_radius)
        kept_idx.append(idx)
        kept_out.append(out.astype(np.int32))
        kept_mu.append(mu)
        kept_flag.append(flags)

    if kept_idx:
        entry_idx = np.concatenate(kept_idx)
        out_idx = np.concatenate(kept_out)
        mu = np.concatenate(kept_mu)
        flags = np.concatenate(kept_flag)
    else:
        entry_idx = np.zeros((0, L), dtype=np.int32)
        out_idx = np.zeros(0, dtype=np.int32)
        mu = np.zeros(0, dtype=np.int64)
        flags = np.zeros(0, dtype=bool)

    mu_span = int(mu.max() - mu.min()) + 1 if len(mu) else 1
    mu_lo = int(mu.min()) if len(mu) else 0
    codes = (out_idx.astype(np.int64) * mu_span + (mu - mu_lo)) * 2 \
        + flags.astype(np.int64)
    order = np.argsort(codes, kind="stable")
    entry_idx, out_idx, mu, flags = (entry_idx[order], out_idx[order],
                                     mu[order], flags[order])
    codes = codes[order]
    starts = np.flatnonzero(np.r_[True, codes[1:] != codes[:-1]]) \
        if len(codes) else np.zeros(0, dtype=np.int64)
    return InteractionTable(
        params=params, box_points=pts, entry_idx=entry_idx, out_idx=out_idx,
        group_starts=starts, group_out=out_idx[starts] if len(codes)
        else np.zeros(0, dtype=np.int32),
        group_mu=mu[starts] if len(codes) else np.zeros(0, dtype=np.int64),
        group_in_a=flags[starts] if len(codes) else np.zeros(0, dtype=bool))


def _field_to_state(omega: SpectralField, params: FlowParams,
                    pts: np.ndarray) -> np.ndarray:
    if omega.dim != params.d:
        raise PreconditionError("state dimension differs from the flow")
    state = np.zeros(len(pts), dtype=np.complex128)
    side = 2 * params.box_radius + 1
    for key, val in omega.amps.items():
        if max(abs(c) for c in key) > params.box_radius:
            raise PreconditionError(f"support point {key} outside the box")
        flat = 0
        for c in key:
            flat = flat * side + (c + params.box_radius)
        state[flat] = val
    return state


def _state_to_field(state: np.ndarray, params: FlowParams,
                    pts: np.ndarray) -> SpectralField:
    amps = {tuple(int(c) for c in pts[i]): complex(v)
            for i, v in enumerate(state) if v != 0}
    return SpectralField(params.d, params.box_radius, amps)


def _group_selector(table: InteractionTable, splitting: Splitting) -> np.ndarray:
    if splitting is Splitting.FULL:
        return np.ones(table.group_count, dtype=bool)
    if splitting is Splitting.PRINCIPAL:
        return ~table.group_in_a
    return table.group_in_a.copy()


class _FlowEvaluator:
    """Precomputed arrays for fast derivative evaluations."""

    def __init__(self, params: FlowParams, table: InteractionTable | None = None):
        self.params = params
        self.table = table if table is not None else build_interaction_table(params)
        self.pts = self.table.box_points
        sel = _group_selector(self.table, params.splitting)
        bounds = np.r_[self.table.group_starts, self.table.tuple_count]
        keep_rows = np.zeros(self.table.tuple_count, dtype=bool)
        for g in np.flatnonzero(sel):
            keep_rows[bounds[g]:bounds[g + 1]] = True
        self.entry_idx = self.table.entry_idx[keep_rows]
        lengths = (bounds[1:] - bounds[:-1])[sel]
        self.starts = np.r_[0, np.cumsum(lengths)[:-1]].astype(np.int64)
        self.group_out = self.table.group_out[sel].astype(np.int64)
        self.group_mu = self.table.group_mu[sel].astype(np.float64)
        self.coupling = self.params.c_const * self.params.lam

    def rhs(self, t: float, state: np.ndarray) -> np.ndarray:
        out = np.zeros_like(state)
        if len(self.entry_idx) == 0 or self.coupling == 0:
            return out
        # overflow here surfaces as a non-finite state checked per step
        with np.errstate(over="ignore", invalid="ignore"):
            prod = np.ones(len(self.entry_idx), dtype=np.complex128)
            for j in range(self.entry_idx.shape[1]):
                gathered = state[self.entry_idx[:, j]]
                prod *= gathered if j % 2 == 0 else np.conjugate(gathered)
            sums = np.add.reduceat(prod, self.starts)
            phased = np.exp(1j * t * self.group_mu) * sums
            np.add.at(out, self.group_out, phased)
            out *= self.coupling
        return out


def rhs(omega: SpectralField, t: float, params: FlowParams,
        table: InteractionTable | None = None) -> SpectralField:
    """Time derivative of the truncated flow at state ``omega``, time t."""
    ev = _FlowEvaluator(params, table)
    state = _field_to_state(omega, params, ev.pts)
    return _state_to_field(ev.rhs(t, state), params, ev.pts)


def evolve(omega0: SpectralField, T: float, dt: float, params: FlowParams,
           snapshot_stride: int | None = 1,
           table: InteractionTable | None = None,
           step_budget: int = 2_000_000) -> list[tuple[float, SpectralField]]:
    """Integrate the flow with classical fourth-order one-step updates.

    Snapshots are stored at step 0, every ``snapshot_stride`` steps
    (``None`` keeps endpoints only), and at the final time.  The state
    is checked for finiteness each step.
    """
    if dt <= 0:
        raise ParameterError("dt must be positive")
    if T < 0:
        raise ParameterError("T must be nonnegative")
    ev = _FlowEvaluator(params, table)
    state = _field_to_state(omega0, params, ev.pts)
    traj: list[tuple[float, SpectralField]] = [
        (0.0, _state_to_field(state, params, ev.pts))]
    if T == 0:
        return traj
    ratio = T / dt
    n_steps = int(round(ratio)) if abs(ratio - round(ratio)) < 1e-9 \
        else int(math.ceil(ratio))
    if n_steps > step_budget:
        raise ParameterError(f"{n_steps} steps exceed the budget {step_budget}")
    t = 0.0
    for step in range(n_steps):
        h = dt if step < n_steps - 1 else T - dt * (n_steps - 1)
        if h <= 0:
            h = dt
        k1 = ev.rhs(t, state)
        k2 = ev.rhs(t + h / 2, state + (h / 2) * k1)
        k3 = ev.rhs(t + h / 2, state + (h / 2) * k2)
        k4 = ev.rhs(t + h, state + h * k3)
        state = state + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = T if step == n_steps - 1 else t + h
        if not np.all(np.isfinite(state.view(np.float64))):
            raise DivergenceError(f"non-finite state at step {step + 1}",
                                  step_index=step + 1)
        last = step == n_steps - 1
        if last or (snapshot_stride is not None
                    and (step + 1) % snapshot_stride == 0):
            traj.append((t, _state_to_field(state, params, ev.pts)))
    return traj


def observables(omega: SpectralField, s: float) -> tuple[float, float]:
    """Squared sequence norm (mass) and the weighted l2_s norm."""
    mass = sum(abs(v) ** 2 for v in omega.amps.values())
    return float(mass), weighted_norm(omega, 2, s)


@dataclass(frozen=True)
class DivergenceRecord:
    dt: float
    box_radius: int
    sup_distance: float


def _project_to_box(omega: SpectralField, radius: int) -> SpectralField:
    amps = {k: v for k, v in omega.amps.items()
            if max(abs(c) for c in k) <= radius}
    return SpectralField(omega.dim, radius, amps)


def _checkpoint_run(omega0: SpectralField, T: float, dt: float,
                    params: FlowParams, checkpoints: int
                    ) -> list[SpectralField]:
    """States at times j * T / checkpoints, each segment hit exactly."""
    ev = _FlowEvaluator(params)
    seg = T / checkpoints
    states = []
    current = _project_to_box(omega0, params.box_radius)
    t0 = 0.0
    for _ in range(checkpoints):
        steps = max(1, int(round(seg / dt)))
        current = _evolve_segment(current, t0, seg, seg / steps, ev, params)
        t0 += seg
        states.append(current)
    return states


def _evolve_segment(omega: SpectralField, t0: float, span: float, dt: float,
                    ev: _FlowEvaluator, params: FlowParams) -> SpectralField:
    state = _field_to_state(omega, params, ev.pts)
    steps = int(round(span / dt))
    t = t0
    for step in range(steps):
        k1 = ev.rhs(t, state)
        k2 = ev.rhs(t + dt / 2, state + (dt / 2) * k1)
        k3 = ev.rhs(t + dt / 2, state + (dt / 2) * k2)
        k4 = ev.rhs(t + dt, state + dt * k3)
        state = state + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
        if not np.all(np.isfinite(state.view(np.float64))):
            raise DivergenceError(f"non-finite state at step {step + 1}",
                                  step_index=step + 1)
    return _state_to_field(state, params, ev.pts)


def uniqueness_experiment(omega0: SpectralField, T: float, params: FlowParams,
                          dt_list: Sequence[float], box_list: Sequence[int],
                          s: float = 1.0, checkpoints: int = 4
                          ) -> list[DivergenceRecord]:
    """Distance of each (dt, box) run from the finest run, in the l2_s norm.

    Every run starts from the same data projected to its box; distances
    are taken at shared checkpoint times and the sup over them is
    reported.  The reference run uses the smallest step and the largest
    box.
    """
    if not dt_list or not box_list:
        raise ParameterError("dt_list and box_list must be nonempty")
    if T <= 0:
        raise ParameterError("T must be positive")
    ref_dt, ref_box = min(dt_list), max(box_list)
    ref_states = _checkpoint_run(omega0, T, ref_dt,
                                 replace(params, box_radius=ref_box),
                                 checkpoints)
    records = []
    for box in sorted(set(box_list)):
        run_params = replace(params, box_radius=box)
        for dt in sorted(set(dt_list)):
            states = _checkpoint_run(omega0, T, dt, run_params, checkpoints)
            dist = max(weighted_norm(a.minus(b), 2, s)
                       for a, b in zip(states, ref_states))
            records.append(DivergenceRecord(dt=dt, box_radius=box,
                                            sup_distance=dist))
    return records


# ---------------------------------------------------------------------------
# binary state dumps

_HEADER = struct.Struct("<4i")


def write_state(stream: BinaryIO, omega: SpectralField, params: FlowParams):
    """Little-endian dump: header (d, k, N_box, count), then per entry
    the signed 32-bit coordinates followed by the float64 re/im pair."""
    record = struct.Struct(f"<{omega.dim}i2d")
    keys = sorted(omega.amps)
    stream.write(_HEADER.pack(omega.dim, params.k, params.box_radius,
                              len(keys)))
    for key in keys:
        val = omega.amps[key]
        stream.write(record.pack(*key, val.real, val.imag))


def read_state(stream: BinaryIO) -> tuple[SpectralField, int]:
    """Inverse of :func:`write_state`; returns the field and k."""
    d, k, box_radius, count = _HEADER.unpack(stream.read(_HEADER.size))
    record = struct.Struct(f"<{d}i2d")
    amps = {}
    for _ in range(count):
        values = record.unpack(stream.read(record.size))
        amps[tuple(values[:d])] = complex(values[d], values[d + 1])
    return SpectralField(d, box_radius, amps), k


def trajectory_records(traj: Sequence[tuple[float, SpectralField]],
                       s: float) -> list[dict]:
    """Flat per-snapshot records (t, mass, sobolev) for report emission."""
    out = []
    for t, field in traj:
        mass, sob = observables(field, s)
        out.append({"t": t, "mass": mass, "sobolev": sob})
    return out
