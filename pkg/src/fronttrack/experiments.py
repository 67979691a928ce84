"""Splitting-merging episodes and the search for potential-increasing interactions.

A splitting-merging episode starts when a crossing shock splits into a
nonclassical shock ``N`` followed by a classical shock ``C`` (birth) and ends
when ``N`` catches ``C`` again (death).  The helpers here build such
scenarios, follow both trajectories through the interaction records and
evaluate the bookkeeping identities along them.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from .engine import Front, InteractionRecord, RunResult, run_config
from .functionals import weakly_approaching
from .kinetics import KineticModel, mirror_model, model_to_config
from .riemann import solve_riemann
from .waves import (BIRTH_CASES, EXCEPTIONAL_CASES, Branch, InteractionCase,
                    classify_interaction, classify_wave, riemann_branch, wave_strength)

DEFAULT_C0 = (0.1, 1.0, 10.0)


class EpisodeError(ValueError):
    """No complete, well-formed birth-death episode in the records."""


# ---------------------------------------------------------------------------
# Scenario construction


def lstar(m: KineticModel, u_star: float, step: float = 1e-6) -> float:
    """Derivative of ``phi_flat_zero o phi_flat`` at ``u_star``."""
    if m.config.get("family") == "cubic":
        return float(m.config["beta"])
    g = lambda u: m.phi_flat_zero(m.phi_flat(u))  # noqa: E731
    return (g(u_star + step) - g(u_star - step)) / (2 * step)


def build_splitting_merging(m: KineticModel, u_star: float, perturbation: Sequence[tuple[float, float]],
                            eps: float, t_end: float = 40.0) -> dict:
    """Scenario config for a crossing shock at the origin plus a small perturbation.

    The base data is ``u_star`` left of 0 and ``phi_sharp(u_star)`` right of
    0.  ``perturbation`` lists ``(x, amplitude)``: the perturbation takes the
    value ``amplitude`` right of ``x`` and vanishes far to the left.
    """
    if not u_star > 0:
        raise ValueError("u_star must be positive")
    L = lstar(m, u_star)
    if not 0.5 < L < 1.0:
        raise ValueError(f"L* = {L!r} is outside (1/2, 1)")
    pert = sorted((float(x), float(a)) for x, a in perturbation)
    if any(abs(a) >= eps for _, a in pert):
        raise ValueError("perturbation amplitude must stay below eps")
    right = m.phi_sharp(u_star)
    breaks = sorted({0.0, *(x for x, _ in pert)})
    xs = [min(breaks) - 1.0] + breaks

    def theta(x):
        val = 0.0
        for px, a in pert:
            if px <= x:
                val = a
        return val

    data = [(x, (u_star if x < 0 else right) + theta(x)) for x in xs]
    left0 = [u for x, u in data if x < 0][-1]
    right0 = [u for x, u in data if x >= 0][0]
    if riemann_branch(m, left0, right0) != Branch.SHOCK:
        raise ValueError("perturbation too large: the crossing shock is not an isolated classical shock")
    return {
        "kinetic": model_to_config(m),
        "initial_data": [[x, u] for x, u in data],
        "eps": float(eps),
        "t_end": float(t_end),
        "c_star": "auto",
        "u_star": float(u_star),
    }


def random_splitting_merging(rng: np.random.Generator, m: KineticModel, u_star: float = 1.0,
                             eps: float = 0.05, t_end: float = 60.0) -> dict:
    """Random episode: left waves that cross ``N`` and right waves that hit ``C``.

    Right of the crossing shock a rarefaction drop triggers the split, followed
    by shock rises whose total exceeds the drop so that ``C`` eventually slows
    below ``N`` and the two merge.
    """
    amp = 0.8 * eps
    pert: list[tuple[float, float]] = []
    x, level = -rng.uniform(0.5, 1.5), 0.0
    for _ in range(rng.integers(0, 4)):
        x -= rng.uniform(0.3, 1.0)
        level = float(np.clip(level + rng.uniform(-0.4, 0.4) * amp, -amp, amp))
        pert.append((x, level))
    if pert:
        pert.append((pert[-1][0] - rng.uniform(0.3, 1.0), 0.0))
        pert.append((-rng.uniform(0.05, 0.3), 0.0))
    drop = rng.uniform(0.1, 0.5) * amp
    xr = rng.uniform(0.3, 1.0)
    pert.append((xr, -drop))
    level = -drop
    for _ in range(rng.integers(1, 4)):
        xr += rng.uniform(0.3, 1.0)
        level = min(level + rng.uniform(0.2, 0.8) * amp, amp * 0.95)
        pert.append((xr, level))
    return build_splitting_merging(m, u_star, pert, eps, t_end)


# ---------------------------------------------------------------------------
# Trajectories


@dataclass(frozen=True)
class TrajectoryEvent:
    time: float
    case: str
    strength_before: float
    strength_after: float
    side: str
    sign: int
    other_strength: float


@dataclass
class TrajectoryLedger:
    kind: str
    front_ids: list[int] = field(default_factory=list)
    events: list[TrajectoryEvent] = field(default_factory=list)
    t0: float = math.nan
    tm1: float = math.nan
    strength_birth: float = math.nan
    strength_death: float = math.nan

    @property
    def TV(self) -> float:
        return float(sum(abs(e.strength_after - e.strength_before) for e in self.events))

    @property
    def SV(self) -> float:
        return float(sum(e.strength_after - e.strength_before for e in self.events))

    def _side(self, side: str) -> float:
        return float(sum(e.strength_after - e.strength_before for e in self.events if e.side == side))

    @property
    def SV_L(self) -> float:
        return self._side("left")

    @property
    def SV_R(self) -> float:
        return self._side("right")


@dataclass
class OmegaRegion:
    n_fronts: list[Front]
    c_fronts: list[Front]
    records: list[InteractionRecord]
    birth: InteractionRecord
    death: InteractionRecord
    violations: list[str] = field(default_factory=list)

    @property
    def closed(self) -> bool:
        return not self.violations


def _other(rec: InteractionRecord, fid: int):
    a, b = rec.incoming
    return (b, "right") if a.id == fid else (a, "left")


def _sign(front: Front) -> int:
    return -1 if front.is_rarefaction else 1


def find_births(records: Sequence[InteractionRecord]) -> list[int]:
    out = []
    for k, rec in enumerate(records):
        if rec.case in BIRTH_CASES and len(rec.outgoing) >= 2 and rec.outgoing[0].label.is_nonclassical \
                and not rec.outgoing[1].is_rarefaction:
            out.append(k)
    return out


def analyze_trajectories(records: Sequence[InteractionRecord], m: Optional[KineticModel] = None):
    """Follow the first nonclassical shock born in ``records`` until it merges.

    Returns ``(ledger_N, ledger_C, omega)``.  ``N`` continues through RN and
    CN-3 interactions, ``C`` through classical interactions with a single
    outgoing shock; the episode ends with the NC interaction between them.
    """
    births = find_births(records)
    if not births:
        raise EpisodeError("no birth of a nonclassical shock")
    k0 = births[0]
    birth = records[k0]
    n, c = birth.outgoing[0], birth.outgoing[1]
    led_n = TrajectoryLedger("N", [n.id], t0=birth.time, strength_birth=n.sigma)
    led_c = TrajectoryLedger("C", [c.id], t0=birth.time, strength_birth=c.sigma)
    n_fronts, c_fronts = [n], [c]
    omega_recs = [birth]
    inside: dict[int, Front] = {f.id: f for f in birth.outgoing[2:]}
    consumed: set[int] = set()
    violations: list[str] = []
    death = None

    for rec in records[k0 + 1:]:
        ids = [f.id for f in rec.incoming]
        t = rec.time
        has_n, has_c = n.id in ids, c.id in ids
        if has_n and has_c:
            if rec.case != InteractionCase.NC:
                raise EpisodeError(f"N and C meet in a {rec.kind} interaction")
            death = rec
            omega_recs.append(rec)
            consumed.update(ids)
            break
        if has_n:
            if rec.case not in (InteractionCase.RN, InteractionCase.CN3) or len(rec.incoming) != 2:
                raise EpisodeError(f"N takes part in a {rec.kind} interaction")
            other, side = _other(rec, n.id)
            n_new = rec.outgoing[0]
            led_n.events.append(TrajectoryEvent(t, rec.kind, n.sigma, n_new.sigma, side, _sign(other), other.sigma))
            n = n_new
            n_fronts.append(n)
            led_n.front_ids.append(n.id)
            omega_recs.append(rec)
            inside.update((f.id, f) for f in rec.outgoing[1:])
            consumed.update(ids)
            continue
        if has_c:
            shocks = [f for f in rec.outgoing if not f.is_rarefaction]
            if len(rec.incoming) != 2 or len(rec.outgoing) != 1 or len(shocks) != 1:
                raise EpisodeError(f"C does not survive a {rec.kind} interaction")
            other, side = _other(rec, c.id)
            c_new = shocks[0]
            led_c.events.append(TrajectoryEvent(t, rec.kind, c.sigma, c_new.sigma, side, _sign(other), other.sigma))
            c = c_new
            c_fronts.append(c)
            led_c.front_ids.append(c.id)
            omega_recs.append(rec)
            consumed.update(ids)
            continue
        x_n, x_c = n.position(t), c.position(t)
        tol = 1e-12 * (1 + abs(rec.position))
        in_region = x_n - tol <= rec.position <= x_c + tol
        touches = [i for i in ids if i in inside]
        if in_region:
            omega_recs.append(rec)
            inside.update((f.id, f) for f in rec.outgoing)
            consumed.update(ids)
            outsiders = [i for i in ids if i not in inside]
            if outsiders:
                violations.append(f"t={t!r}: front(s) {outsiders} entered Omega without crossing N or C")
        elif touches:
            violations.append(f"t={t!r}: front(s) {touches} left Omega")

    if death is None:
        raise EpisodeError("nonclassical shock never merges with its classical partner")
    leftover = sorted(set(inside) - consumed)
    if leftover:
        violations.append(f"fronts {leftover} still inside Omega at the merge")
    led_n.tm1 = led_c.tm1 = death.time
    led_n.strength_death, led_c.strength_death = n.sigma, c.sigma
    omega = OmegaRegion(n_fronts, c_fronts, omega_recs, birth, death, violations)
    return led_n, led_c, omega


def omega_Q1(omega: Optional[OmegaRegion], which: str = "Q_weak") -> float:
    """Sum of the pairwise-among-participants change over every interaction in Omega."""
    if omega is None:
        return 0.0
    attr = {"Q_weak": "q1_weak", "Qweak": "q1_weak", "Q_pos": "q1_pos", "Qpos": "q1_pos"}[which]
    return float(sum(getattr(r, attr) for r in omega.records))


# ---------------------------------------------------------------------------
# Interactions with the nonclassical shock


@dataclass(frozen=True)
class CrossingIdentities:
    time: float
    case: str
    L_i: float
    sign: int
    sigma_W_in: float
    sigma_W_out: float
    sigma_N_in: float
    sigma_N_out: float
    residual_crossing: float
    residual_N_update: float
    residual_Q1: float

    @property
    def residuals(self) -> tuple[float, float, float]:
        return (self.residual_crossing, self.residual_N_update, self.residual_Q1)


def lemma52_check(record: InteractionRecord, m: KineticModel) -> CrossingIdentities:
    """Contraction ratio ``L_i`` of a wave crossing ``N`` and the three identity residuals.

    ``L_i`` is computed from the states, ``|g(u_l) - g(u_m)| / |u_l - u_m|``
    with ``g = phi_flat_zero o phi_flat``; the residuals compare it with the
    strengths measured on the outgoing fronts and with the recorded change of
    the weak potential among the participants.
    """
    if record.case not in (InteractionCase.RN, InteractionCase.CN3):
        raise ValueError(f"expected an RN or CN-3 record, got {record.kind}")
    w_in, n_in = record.incoming
    n_out, w_out = record.outgoing[0], record.outgoing[1:]
    u_l, u_m = w_in.u_left, w_in.u_right
    mm = m
    if u_l < 0:
        mm, u_l, u_m = mirror_model(m), -u_l, -u_m
    g = lambda u: mm.phi_flat_zero(mm.phi_flat(u))  # noqa: E731
    L = abs(g(u_l) - g(u_m)) / abs(u_l - u_m)
    s = _sign(w_in)
    sw_in, sw_out = w_in.sigma, float(sum(f.sigma for f in w_out))
    q1 = -(1 - L) * sw_in * (n_in.sigma - s * L * sw_in)
    return CrossingIdentities(
        time=record.time, case=record.kind, L_i=L, sign=s,
        sigma_W_in=sw_in, sigma_W_out=sw_out, sigma_N_in=n_in.sigma, sigma_N_out=n_out.sigma,
        residual_crossing=sw_out - L * sw_in,
        residual_N_update=n_out.sigma - (n_in.sigma + s * (1 - L) * sw_in),
        residual_Q1=record.q1_weak - q1,
    )


def episode_report(result: RunResult, m: Optional[KineticModel] = None, u_star: Optional[float] = None) -> dict:
    """Summary of the first splitting-merging episode of a run."""
    m = m or result.state.model
    led_n, led_c, omega = analyze_trajectories(result.records, m)
    if u_star is None:
        u_star = omega.birth.incoming[0].u_left
    L = lstar(m, abs(u_star))
    lam = (1 - L) / L
    rows = [lemma52_check(r, m) for r in omega.records if r.case in (InteractionCase.RN, InteractionCase.CN3)
            and r.incoming[1].id in led_n.front_ids]
    return {
        "t0": led_n.t0,
        "tm1": led_n.tm1,
        "TV_N": led_n.TV,
        "SV_N": led_n.SV,
        "SV_C": led_c.SV,
        "SV_L_C": led_c.SV_L,
        "SV_R_C": led_c.SV_R,
        "lambda_star": lam,
        "lambda_balance_residual": abs(lam * led_c.SV_L - led_n.SV),
        "omega_Q1_Qweak": omega_Q1(omega, "Q_weak"),
        "omega_Q1_Qpos": omega_Q1(omega, "Q_pos"),
        "omega_closed": omega.closed,
        "omega_violations": omega.violations,
        "lemma52_rows": [
            {"time": r.time, "case": r.case, "L_i": r.L_i, "sign": r.sign,
             "residuals": list(r.residuals)} for r in rows
        ],
    }


# ---------------------------------------------------------------------------
# Potential-increasing interactions


@dataclass
class Witness:
    case: str
    states: tuple[float, float, float]
    dV: float
    dQ_weak: float
    combined: dict
    seed: int
    samples: int
    replay: dict

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "states": list(self.states),
            "dV": self.dV,
            "dQ_weak": self.dQ_weak,
            "dV_plus_C0_dQweak": {repr(k): v for k, v in self.combined.items()},
            "seed": self.seed,
            "samples": self.samples,
            "replay": self.replay,
        }


def pair_deltas(m: KineticModel, u_l: float, u_m: float, u_r: float) -> tuple[float, float]:
    """``(dV, dQ_weak)`` when the waves ``(u_l, u_m)`` and ``(u_m, u_r)`` interact alone."""
    inc = [(u_l, u_m), (u_m, u_r)]
    out = [(w.u_left, w.u_right) for w in solve_riemann(m, u_l, u_r)]

    def totals(waves):
        sig = [wave_strength(m, a, b) for a, b in waves]
        lab = [classify_wave(m, a, b) for a, b in waves]
        q = sum(sig[i] * sig[j] for i in range(len(waves)) for j in range(i + 1, len(waves))
                if weakly_approaching(lab[i], lab[j]))
        return sum(sig), q

    v0, q0 = totals(inc)
    v1, q1 = totals(out)
    return v1 - v0, q1 - q0


def _log_uniform(x: float, lo: float, hi: float) -> float:
    return lo * (hi / lo) ** x


def _candidate(case: InteractionCase, m: KineticModel, p: np.ndarray):
    """Map a point of the unit cube to states satisfying the case guards, or None."""
    u_l = 0.5 + p[0]
    ps_l, pf_l = m.phi_sharp(u_l), m.phi_flat(u_l)
    d1, d2 = _log_uniform(p[1], 1e-7, 0.2), _log_uniform(p[2], 1e-7, 0.5)
    if case == InteractionCase.RC3:
        u_m = u_l + d1
        lo, hi = max(m.phi_sharp(u_m), pf_l), ps_l
        u_r = hi - d2 * (hi - lo)
    elif case == InteractionCase.CR4:
        u_m = ps_l + d1 * abs(ps_l)
        u_r = ps_l - d2 * (ps_l - pf_l)
    elif case == InteractionCase.CC3:
        u_m = u_l * (1 - d1)
        lo = m.phi_sharp(u_m)
        u_r = lo + p[2] * (u_m - lo)
    elif case == InteractionCase.CN3:
        u_m = u_l * (1.0 - p[1])
        u_r = m.phi_flat(u_m)
    else:
        raise ValueError(f"{case} is not an exceptional case")
    return u_l, u_m, u_r


def _collides(m: KineticModel, u_l, u_m, u_r) -> bool:
    f = m.flux.eval
    s1 = (f(u_m) - f(u_l)) / (u_m - u_l)
    s2 = (f(u_r) - f(u_m)) / (u_r - u_m)
    return s1 > s2


def replay_config(m: KineticModel, states: tuple[float, float, float]) -> dict:
    """Two-wave initial data whose first interaction is the given triple."""
    u_l, u_m, u_r = states
    f = m.flux.eval
    s1 = (f(u_m) - f(u_l)) / (u_m - u_l)
    s2 = (f(u_r) - f(u_m)) / (u_r - u_m)
    t_hit = 1.0 / (s1 - s2)
    big = 2.0 * (abs(u_l) + abs(u_m) + abs(u_r)) + 1.0
    return {
        "kinetic": model_to_config(m),
        "initial_data": [[-1.0, u_l], [0.0, u_m], [1.0, u_r]],
        "eps": big,
        "t_end": 1.5 * t_hit,
        "c_star": 1.0,
    }


def search_Qweak_increase(case, m: KineticModel, c0_values: Iterable[float] = DEFAULT_C0,
                          n_samples: int = 10_000, seed: int = 0) -> Optional[Witness]:
    """Quasi-random search for an interaction with ``dV + C0 dQ_weak > 0`` for all ``C0``.

    Candidates are drawn from a scrambled Sobol sequence mapped onto the guard
    inequalities of ``case``; only candidates that the classifier assigns to
    ``case`` are kept.  The witness with the largest worst-case margin is
    returned, or ``None``.
    """
    case = InteractionCase(case)
    if case not in EXCEPTIONAL_CASES:
        raise ValueError(f"{case.value} is not one of the exceptional cases")
    c0 = tuple(float(c) for c in c0_values)
    sampler = qmc.Sobol(d=3, scramble=True, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        pts = sampler.random(n_samples)
    best, best_margin = None, 0.0
    for p in pts:
        states = _candidate(case, m, p)
        u_l, u_m, u_r = states
        if u_l == u_m or u_m == u_r or max(map(abs, states)) > m.range_bound:
            continue
        if not _collides(m, *states):
            continue
        lw = (u_l, u_m, classify_wave(m, u_l, u_m))
        rw = (u_m, u_r, classify_wave(m, u_m, u_r))
        try:
            got = classify_interaction(m, lw, rw)
        except ValueError:
            continue
        if got != case:
            continue
        dV, dQ = pair_deltas(m, *states)
        margin = min(dV + c * dQ for c in c0)
        if margin > best_margin:
            best_margin = margin
            best = Witness(case.value, tuple(float(s) for s in states), float(dV), float(dQ),
                           {c: float(dV + c * dQ) for c in c0}, seed, n_samples, replay_config(m, states))
    return best


def replay_witness(w: Witness | dict) -> tuple[float, float]:
    """Re-run the replay config and return ``(dV, dQ_weak)`` of its first interaction."""
    d = w.to_dict() if isinstance(w, Witness) else w
    res = run_config(d["replay"])
    if not res.records:
        raise EpisodeError("replay produced no interaction")
    rec = res.records[0]
    return rec.dV, rec.dQ_weak
