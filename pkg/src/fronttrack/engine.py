"""Event-driven front tracking.

Fronts move on straight lines between collisions.  A binary heap holds the
predicted collision time of every adjacent approaching pair; stale entries are
skipped when popped.  Each collision is replaced by the Riemann fan of its
outer states, rarefactions discretized at ``eps``, and one
:class:`InteractionRecord` is emitted with the functional values before and
after.
"""
from __future__ import annotations

import csv
import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .functionals import (FunctionalReport, SnapFront, Snapshot, WaveArrays, auto_c_star,
                          q_pos_arrays, q_weak_arrays, secant_lipschitz)
from .kinetics import KineticModel
from .riemann import Wave, fan_fronts
from .waves import (InteractionCase, InteractionError, WaveLabel, classify_interaction,
                    normalized_state, predicted_V_bound, wave_strength)

# Outgoing fronts weaker than this are dropped.
MIN_STRENGTH = 1e-14
# Relative distance under which fronts count as meeting at one point.
COINCIDENCE_RTOL = 1e-12
MULTI = "MULTI"
UNCLASSIFIED = "UNCLASSIFIED"

EVENT_COLUMNS = [
    "time", "position", "case", "incoming_labels", "outgoing_labels",
    "V_before", "V_after", "TV_before", "TV_after", "Qweak_before", "Qweak_after",
    "Qpos_before", "Qpos_after", "predicted_bound", "mass",
]


class EventCapExceeded(RuntimeError):
    """More events than the safety cap: usually a tie-breaking pathology."""


@dataclass(frozen=True, eq=False)
class Front:
    """An immutable front; a collision retires it and creates new ones."""

    id: int
    x0: float
    t0: float
    speed: float
    u_left: float
    u_right: float
    label: WaveLabel
    sigma: float
    ahat: float
    increasing: bool

    def position(self, t: float) -> float:
        return self.x0 + self.speed * (t - self.t0)

    @property
    def is_rarefaction(self) -> bool:
        return self.label.is_rarefaction

    def snap(self, t: float) -> SnapFront:
        return SnapFront(self.position(t), self.u_left, self.u_right, self.label, self.speed, self.id)


@dataclass(frozen=True)
class InteractionRecord:
    index: int
    time: float
    position: float
    kind: str
    case: Optional[InteractionCase]
    incoming: tuple[Front, ...]
    outgoing: tuple[Front, ...]
    before: FunctionalReport
    after: FunctionalReport
    bound: float
    q1_weak: float
    q1_pos: float
    c_star_ok: bool

    @property
    def dV(self) -> float:
        return self.after.V - self.before.V

    @property
    def dTV(self) -> float:
        return self.after.TV - self.before.TV

    @property
    def dQ_weak(self) -> float:
        return self.after.Q_weak - self.before.Q_weak

    @property
    def dQ_pos(self) -> float:
        return self.after.Q_pos - self.before.Q_pos

    @property
    def q2_weak(self) -> float:
        return self.dQ_weak - self.q1_weak

    @property
    def q2_pos(self) -> float:
        return self.dQ_pos - self.q1_pos

    @property
    def mass_drift(self) -> float:
        return self.after.mass - self.before.mass

    @property
    def is_multi(self) -> bool:
        return self.kind == MULTI

    @property
    def incoming_rarefaction_strength(self) -> float:
        for f in self.incoming:
            if f.is_rarefaction:
                return f.sigma
        return 0.0

    def csv_row(self) -> list[str]:
        def num(v):
            return repr(float(v))

        return [
            num(self.time), num(self.position), self.kind,
            " ".join(f.label.value for f in self.incoming),
            " ".join(f.label.value for f in self.outgoing),
            num(self.before.V), num(self.after.V), num(self.before.TV), num(self.after.TV),
            num(self.before.Q_weak), num(self.after.Q_weak),
            num(self.before.Q_pos), num(self.after.Q_pos), num(self.bound), num(self.after.mass),
        ]


Monitor = Callable[["SimulationState", InteractionRecord], None]


@dataclass
class SimulationState:
    model: KineticModel
    eps: float
    c_star: float
    domain: tuple[float, float]
    far_left: float
    far_right: float
    mass0: float
    lipschitz: float
    time: float = 0.0
    fronts: list[Front] = field(default_factory=list)
    queue: list = field(default_factory=list)
    events: int = 0
    max_events: int = 100_000
    initial_front_count: int = 0
    max_front_count: int = 0
    report: Optional[FunctionalReport] = None
    _ids: itertools.count = field(default_factory=itertools.count)
    _seq: itertools.count = field(default_factory=itertools.count)

    # -- construction helpers -------------------------------------------------

    def new_front(self, w: Wave, x0: float, t0: float) -> Front:
        m = self.model
        a, b = normalized_state(m, w.u_left), normalized_state(m, w.u_right)
        if a != b:
            f = m.flux.eval
            ahat = (f(b) - f(a)) / (b - a)
        else:
            ahat = m.flux.deriv(a)
        return Front(next(self._ids), x0, t0, w.speed, w.u_left, w.u_right, w.kind,
                     wave_strength(m, w.u_left, w.u_right), ahat, b > a)

    def schedule(self, i: int) -> None:
        """Queue the collision of ``fronts[i]`` with ``fronts[i + 1]``, if any."""
        if i < 0 or i + 1 >= len(self.fronts):
            return
        a, b = self.fronts[i], self.fronts[i + 1]
        if not a.speed > b.speed:
            return
        t = max(a.t0, b.t0, self.time)
        gap = max(b.position(t) - a.position(t), 0.0)
        heapq.heappush(self.queue, (t + gap / (a.speed - b.speed), next(self._seq), a.id, b.id))

    # -- diagnostics ----------------------------------------------------------------

    def arrays(self, fronts: Optional[Sequence[Front]] = None) -> WaveArrays:
        fr = self.fronts if fronts is None else fronts
        return WaveArrays(
            np.fromiter((f.sigma for f in fr), float, len(fr)),
            np.fromiter((f.ahat for f in fr), float, len(fr)),
            np.fromiter((f.increasing for f in fr), bool, len(fr)),
            np.fromiter((f.is_rarefaction for f in fr), bool, len(fr)),
        )

    def mass(self, t: Optional[float] = None, fronts: Optional[Sequence[Front]] = None) -> float:
        t = self.time if t is None else t
        fr = self.fronts if fronts is None else fronts
        return piecewise_mass([f.position(t) for f in fr], [f.u_right for f in fr], self.far_left, self.domain)

    def conservation_residual(self, t: Optional[float] = None) -> float:
        """Mass change minus the boundary flux, ``mass(t) - mass(0) - t [f]``."""
        t = self.time if t is None else t
        f = self.model.flux.eval
        return self.mass(t) - self.mass0 - t * (f(self.far_left) - f(self.far_right))

    def functionals(self, t: Optional[float] = None) -> FunctionalReport:
        w = self.arrays()
        tv = float(sum(abs(f.u_left - f.u_right) for f in self.fronts))
        qp, qrr = q_pos_arrays(w, self.c_star, split=True)
        return FunctionalReport(float(w.sigma.sum()), tv, q_weak_arrays(w), qp, self.mass(t), qrr)

    def snapshot(self, t: Optional[float] = None) -> Snapshot:
        t = self.time if t is None else t
        return Snapshot(t, tuple(f.snap(t) for f in self.fronts))

    def c_star_holds(self, tv: float) -> bool:
        return self.c_star * self.lipschitz * tv < 1.0

    def next_event_time(self) -> float:
        self._drop_stale()
        return self.queue[0][0] if self.queue else math.inf

    def _valid(self, entry) -> Optional[int]:
        _, _, lid, rid = entry
        for i, f in enumerate(self.fronts):
            if f.id == lid:
                return i if i + 1 < len(self.fronts) and self.fronts[i + 1].id == rid else None
        return None

    def _drop_stale(self) -> None:
        while self.queue and self._valid(self.queue[0]) is None:
            heapq.heappop(self.queue)


def piecewise_mass(positions: Sequence[float], right_values: Sequence[float], far_left: float,
                   domain: tuple[float, float]) -> float:
    """Exact integral of a piecewise-constant function over ``domain``."""
    a, b = domain
    if positions and (min(positions) < a or max(positions) > b):
        raise ValueError("fronts outside the mass domain")
    total, x_prev, u_prev = 0.0, a, far_left
    for x, u in zip(positions, right_values):
        total += u_prev * (x - x_prev)
        x_prev, u_prev = x, u
    return total + u_prev * (b - x_prev)


def snapshot_mass(s: Snapshot, domain: tuple[float, float], far_left: Optional[float] = None) -> float:
    if not s.fronts and far_left is None:
        raise ValueError("far-field value needed for an empty snapshot")
    left = s.fronts[0].u_left if s.fronts else far_left
    return piecewise_mass([f.position for f in s.fronts], [f.u_right for f in s.fronts], left, domain)


def l1_distance(a: Snapshot, b: Snapshot, domain: tuple[float, float]) -> float:
    """``int |u_a - u_b| dx`` over ``domain`` for two piecewise-constant snapshots."""
    lo, hi = domain

    def steps(s):
        xs = [f.position for f in s.fronts]
        vals = [s.fronts[0].u_left] + [f.u_right for f in s.fronts] if s.fronts else None
        return xs, vals

    xa, va = steps(a)
    xb, vb = steps(b)
    if va is None or vb is None:
        raise ValueError("empty snapshots carry no far-field value")
    grid = np.unique(np.clip(np.array([lo, hi] + xa + xb, dtype=float), lo, hi))
    mid = 0.5 * (grid[:-1] + grid[1:])
    ua = np.asarray(va)[np.searchsorted(xa, mid, side="right")]
    ub = np.asarray(vb)[np.searchsorted(xb, mid, side="right")]
    return float(np.sum(np.abs(ua - ub) * np.diff(grid)))


# ---------------------------------------------------------------------------
# Initialization


def _clean_data(u0) -> list[tuple[float, float]]:
    data = [(float(x), float(u)) for x, u in u0]
    if not data:
        raise ValueError("initial data is empty")
    for x, u in data:
        if not (math.isfinite(x) and math.isfinite(u)):
            raise ValueError("initial data must be finite")
    data.sort(key=lambda p: p[0])
    merged: list[tuple[float, float]] = []
    for x, u in data:
        if merged and merged[-1][0] == x:
            merged[-1] = (x, u)
        else:
            merged.append((x, u))
    return merged


def initialize(m: KineticModel, u0, eps: float, t_end: float = 1.0, c_star="auto",
               range_bound: Optional[float] = None, max_events: int = 100_000) -> SimulationState:
    """Build the initial fronts from ``u0 = [(x, u), ...]``.

    Each pair sets the value ``u`` to the right of ``x``; the first value also
    extends to the far left.  Every jump is replaced by its Riemann fan.  For
    the cubic family the working range defaults to twice the sup norm of the
    data; ``t_end`` only sizes the mass domain.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    data = _clean_data(u0)
    sup = max(abs(u) for _, u in data)
    if range_bound is not None:
        m = m.with_range(range_bound)
    elif m.config.get("family") == "cubic" and sup > 0:
        m = m.with_range(2.0 * sup)
    if sup > m.range_bound:
        raise ValueError(f"initial data exceed range_bound {m.range_bound!r}")

    reach = max(abs(m.flux.deriv(m.range_bound)), abs(m.flux.deriv(-m.range_bound)), 1.0)
    pad = reach * max(t_end, 0.0) + 1.0
    domain = (data[0][0] - pad, data[-1][0] + pad)
    tv0 = sum(abs(b[1] - a[1]) for a, b in zip(data, data[1:]))
    cs = auto_c_star(m, tv0) if c_star in (None, "auto") else float(c_star)
    if not cs > 0:
        raise ValueError("c_star must be positive")

    state = SimulationState(
        model=m, eps=float(eps), c_star=cs, domain=domain, far_left=data[0][1],
        far_right=data[-1][1], mass0=0.0, lipschitz=secant_lipschitz(m), max_events=max_events,
    )
    for (_, ul), (x, ur) in zip(data, data[1:]):
        if ul != ur:
            state.fronts.extend(state.new_front(w, x, 0.0) for w in fan_fronts(m, ul, ur, eps))
    state.mass0 = state.mass(0.0)
    state.initial_front_count = state.max_front_count = len(state.fronts)
    for i in range(len(state.fronts) - 1):
        state.schedule(i)
    state.report = state.functionals(0.0)
    return state


# ---------------------------------------------------------------------------
# Evolution


def _classify(m: KineticModel, group: Sequence[Front]):
    if len(group) != 2:
        return MULTI, None, math.nan
    a, b = group
    try:
        case = classify_interaction(m, (a.u_left, a.u_right, a.label), (b.u_left, b.u_right, b.label),
                                    check_speeds=False)
    except InteractionError:
        return UNCLASSIFIED, None, math.nan
    bound = predicted_V_bound(case, ((a.u_left, a.u_right, a.label), (b.u_left, b.u_right, b.label)), m)
    return case.value, case, bound


def step(state: SimulationState, t_limit: float = math.inf) -> Optional[InteractionRecord]:
    """Resolve the earliest collision at or before ``t_limit``; ``None`` if none."""
    state._drop_stale()
    if not state.queue or state.queue[0][0] > t_limit:
        return None
    if state.events >= state.max_events:
        raise EventCapExceeded(f"more than {state.max_events} interactions")
    entry = heapq.heappop(state.queue)
    i = state._valid(entry)
    t = max(entry[0], state.time)
    m = state.model
    fronts = state.fronts
    x = 0.5 * (fronts[i].position(t) + fronts[i + 1].position(t))
    tol = COINCIDENCE_RTOL * (1.0 + abs(x))
    lo, hi = i, i + 1
    while lo > 0 and abs(fronts[lo - 1].position(t) - x) <= tol:
        lo -= 1
    while hi + 1 < len(fronts) and abs(fronts[hi + 1].position(t) - x) <= tol:
        hi += 1
    group = tuple(fronts[lo:hi + 1])
    kind, case, bound = _classify(m, group)

    before = state.report
    mass_before = state.mass(t)
    waves = fan_fronts(m, group[0].u_left, group[-1].u_right, state.eps)
    outgoing = tuple(state.new_front(w, x, t) for w in waves
                     if wave_strength(m, w.u_left, w.u_right) >= MIN_STRENGTH)
    fronts[lo:hi + 1] = outgoing
    state.time = t
    state.events += 1
    state.max_front_count = max(state.max_front_count, len(fronts))
    for j in range(lo - 1, lo + len(outgoing)):
        state.schedule(j)

    after = state.functionals(t)
    w_in, w_out = state.arrays(group), state.arrays(outgoing)
    record = InteractionRecord(
        index=state.events - 1, time=t, position=x, kind=kind, case=case,
        incoming=group, outgoing=outgoing,
        before=FunctionalReport(before.V, before.TV, before.Q_weak, before.Q_pos, mass_before,
                                before.Q_pos_rarefaction_pairs),
        after=after, bound=bound,
        q1_weak=q_weak_arrays(w_out) - q_weak_arrays(w_in),
        q1_pos=q_pos_arrays(w_out, state.c_star) - q_pos_arrays(w_in, state.c_star),
        c_star_ok=state.c_star_holds(before.TV),
    )
    state.report = after
    return record


@dataclass
class RunResult:
    state: SimulationState
    final: Snapshot
    records: list[InteractionRecord]
    snapshots: list[Snapshot]


def run(state: SimulationState, t_end: float, monitors: Iterable[Monitor] = (),
        snapshot_times: Iterable[float] = ()) -> RunResult:
    """Process every collision up to ``t_end`` and return the final snapshot.

    Monitors are called after each interaction; snapshots are taken at the
    requested times (between events, so the functionals are well defined).
    """
    if not t_end > state.time:
        raise ValueError("t_end must exceed the current time")
    monitors = list(monitors)
    pending = sorted(t for t in snapshot_times if state.time <= t <= t_end)
    snaps: list[Snapshot] = []
    records: list[InteractionRecord] = []
    while True:
        t_next = state.next_event_time()
        while pending and pending[0] < min(t_next, math.inf) and pending[0] <= t_end:
            snaps.append(state.snapshot(pending.pop(0)))
        rec = step(state, t_end)
        if rec is None:
            break
        records.append(rec)
        for mon in monitors:
            mon(state, rec)
    snaps.extend(state.snapshot(t) for t in pending)
    state.time = t_end
    return RunResult(state, state.snapshot(t_end), records, snaps)


def run_scenario(m: KineticModel, u0, eps: float, t_end: float, c_star="auto", monitors=(),
                 snapshot_times=(), **kwargs) -> RunResult:
    return run(initialize(m, u0, eps, t_end=t_end, c_star=c_star, **kwargs), t_end, monitors, snapshot_times)


# ---------------------------------------------------------------------------
# Monitors and output


@dataclass
class InvariantMonitor:
    """Collects violations of the per-interaction invariants."""

    tol: float = 1e-10
    mass_rtol: float = 1e-12
    failures: list[str] = field(default_factory=list)

    def __call__(self, state: SimulationState, rec: InteractionRecord) -> None:
        where = f"event {rec.index} t={rec.time!r}"
        if rec.dV > self.tol:
            self.failures.append(f"{where}: V increased by {rec.dV!r}")
        if rec.case is not None and rec.dV > rec.bound + self.tol:
            self.failures.append(f"{where}: dV={rec.dV!r} exceeds bound {rec.bound!r} ({rec.kind})")
        if rec.kind == UNCLASSIFIED:
            self.failures.append(f"{where}: unclassified interaction")
        if abs(rec.mass_drift) > self.mass_rtol * (1.0 + abs(rec.after.mass)):
            self.failures.append(f"{where}: mass drift {rec.mass_drift!r}")

    @property
    def ok(self) -> bool:
        return not self.failures


def write_event_log(path, records: Iterable[InteractionRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_COLUMNS)
        for rec in records:
            w.writerow(rec.csv_row())


def write_snapshot(path, s: Snapshot) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["position", "u_left", "u_right", "label", "speed"])
        for f in s.fronts:
            w.writerow([repr(float(f.position)), repr(float(f.u_left)), repr(float(f.u_right)),
                        f.label.value, repr(float(f.speed))])


def run_config(cfg: dict, monitors: Iterable[Monitor] = (), snapshot_times: Iterable[float] = (),
               eps: Optional[float] = None, t_end: Optional[float] = None, c_star=None) -> RunResult:
    """Run a scenario config ``{kinetic, initial_data, eps, t_end, c_star}``.

    Keyword arguments override the config values.
    """
    from .kinetics import model_from_config

    m = model_from_config(cfg["kinetic"])
    eps = float(cfg["eps"]) if eps is None else float(eps)
    t_end = float(cfg["t_end"]) if t_end is None else float(t_end)
    cs = cfg.get("c_star", "auto") if c_star is None else c_star
    u0 = [(float(x), float(u)) for x, u in cfg["initial_data"]]
    return run_scenario(m, u0, eps, t_end, c_star=cs, monitors=monitors, snapshot_times=snapshot_times,
                        max_events=int(cfg.get("max_events", 100_000)))
