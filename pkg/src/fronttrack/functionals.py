"""Total variation functionals and interaction potentials over snapshots.

All functionals are piecewise constant in time for a front-tracking
solution, so they are only evaluated on :class:`Snapshot` objects taken at
interaction times or at requested sample times.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple, Optional

import numpy as np

from .kinetics import KineticModel
from .waves import WaveLabel, classify_wave, normalized_state, wave_strength

__all__ = [
    "SnapFront", "Snapshot", "FunctionalReport", "WaveArrays",
    "total_V", "total_TV", "weakly_approaching", "Q_weak", "normalized_state",
    "normalized_speed", "theta_weight", "Q_pos", "interaction_delta",
    "bystander_sum", "isometry_image", "secant_lipschitz", "auto_c_star",
    "evaluate",
]


class SnapFront(NamedTuple):
    position: float
    u_left: float
    u_right: float
    label: WaveLabel
    speed: float
    id: Optional[int] = None


@dataclass(frozen=True)
class Snapshot:
    time: float
    fronts: tuple[SnapFront, ...] = ()

    def __post_init__(self):
        fr = tuple(f if isinstance(f, SnapFront) else SnapFront(*f) for f in self.fronts)
        object.__setattr__(self, "fronts", fr)

    def __len__(self) -> int:
        return len(self.fronts)

    def validate(self, tol: float = 1e-12) -> None:
        """Raise if positions are not increasing or states do not chain."""
        for a, b in zip(self.fronts, self.fronts[1:]):
            if not b.position >= a.position:
                raise ValueError(f"positions not ordered at x={b.position!r}")
            if abs(a.u_right - b.u_left) > tol * (1 + abs(a.u_right)):
                raise ValueError(f"states do not chain at x={b.position!r}")

    def index_of(self, front_id: int) -> int:
        for i, f in enumerate(self.fronts):
            if f.id == front_id:
                return i
        raise KeyError(front_id)


@dataclass(frozen=True)
class FunctionalReport:
    V: float
    TV: float
    Q_weak: float
    Q_pos: float
    mass: float = math.nan
    # same-monotonicity rarefaction pairs inside Q_pos, reported separately
    Q_pos_rarefaction_pairs: float = 0.0


# ---------------------------------------------------------------------------
# Vectorized per-wave data


@dataclass
class WaveArrays:
    """Per-wave strength, normalized speed and monotonicity, in spatial order."""

    sigma: np.ndarray
    ahat: np.ndarray
    increasing: np.ndarray
    rarefaction: np.ndarray

    @classmethod
    def from_waves(cls, m: KineticModel, waves: Iterable) -> "WaveArrays":
        rows = [_wave_data(m, w.u_left, w.u_right) for w in waves]
        if not rows:
            e = np.zeros(0)
            return cls(e, e.copy(), e.astype(bool), e.astype(bool))
        sig, ah, inc, rar = zip(*rows)
        return cls(np.array(sig), np.array(ah), np.array(inc, dtype=bool), np.array(rar, dtype=bool))

    def subset(self, idx) -> "WaveArrays":
        idx = np.asarray(idx, dtype=int)
        return WaveArrays(self.sigma[idx], self.ahat[idx], self.increasing[idx], self.rarefaction[idx])


def _wave_data(m: KineticModel, u_left: float, u_right: float):
    a, b = normalized_state(m, u_left), normalized_state(m, u_right)
    return (
        abs(a - b),
        _secant(m, a, b),
        b > a,
        classify_wave(m, u_left, u_right).is_rarefaction,
    )


def _secant(m: KineticModel, a: float, b: float) -> float:
    if a == b:
        return m.flux.deriv(a)
    f = m.flux.eval
    return (f(b) - f(a)) / (b - a)


# ---------------------------------------------------------------------------
# Functionals


def total_V(s: Snapshot, m: KineticModel) -> float:
    return float(sum(wave_strength(m, f.u_left, f.u_right) for f in s.fronts))


def total_TV(s: Snapshot) -> float:
    return float(sum(abs(f.u_left - f.u_right) for f in s.fronts))


def weakly_approaching(a: WaveLabel, b: WaveLabel) -> bool:
    """Every pair approaches unless both waves are rarefactions."""
    return not (WaveLabel(a).is_rarefaction and WaveLabel(b).is_rarefaction)


def q_weak_arrays(w: WaveArrays) -> float:
    """Sum of ``sigma_x sigma_y`` over pairs that are not both rarefactions."""
    s_all, s_r = w.sigma, w.sigma[w.rarefaction]
    pairs_all = 0.5 * (s_all.sum() ** 2 - (s_all ** 2).sum())
    pairs_r = 0.5 * (s_r.sum() ** 2 - (s_r ** 2).sum())
    return float(max(pairs_all - pairs_r, 0.0))


def Q_weak(s: Snapshot, m: KineticModel) -> float:
    return q_weak_arrays(WaveArrays.from_waves(m, s.fronts))


def normalized_speed(m: KineticModel, u_left: float, u_right: float) -> float:
    """Secant speed between normalized states, ``f'`` when they coincide."""
    return _secant(m, normalized_state(m, u_left), normalized_state(m, u_right))


def _as_states(w):
    if hasattr(w, "u_left"):
        return w.u_left, w.u_right
    return w[0], w[1]


def theta_weight(m: KineticModel, x_wave, y_wave, c_star: float) -> float:
    """Weight of the pair ``x`` (left) and ``y`` (right) inside ``Q_pos``."""
    xl, xr = _as_states(x_wave)
    yl, yr = _as_states(y_wave)
    inc_x = normalized_state(m, xr) > normalized_state(m, xl)
    inc_y = normalized_state(m, yr) > normalized_state(m, yl)
    if inc_x != inc_y:
        return 1.0
    return c_star * max(normalized_speed(m, xl, xr) - normalized_speed(m, yl, yr), 0.0)


def theta_matrix(w: WaveArrays, c_star: float) -> np.ndarray:
    same = w.increasing[:, None] == w.increasing[None, :]
    weighted = c_star * np.maximum(w.ahat[:, None] - w.ahat[None, :], 0.0)
    return np.where(same, weighted, 1.0)


def q_pos_arrays(w: WaveArrays, c_star: float, split: bool = False):
    n = w.sigma.size
    if n < 2:
        return (0.0, 0.0) if split else 0.0
    terms = theta_matrix(w, c_star) * np.outer(w.sigma, w.sigma)
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    total = float(terms[upper].sum())
    if not split:
        return total
    rr = upper & w.rarefaction[:, None] & w.rarefaction[None, :]
    return total, float(terms[rr].sum())


def secant_lipschitz(m: KineticModel, grid_points: int = 2001) -> float:
    """Largest difference quotient of ``f'`` on the working range."""
    u = np.linspace(-m.range_bound, m.range_bound, grid_points)
    fp = np.asarray(m.flux.deriv(u), dtype=float)
    return float(np.max(np.abs(np.diff(fp) / np.diff(u))))


def auto_c_star(m: KineticModel, tv0: float) -> float:
    """Default weight ``0.5 / (C * TV(u0))``; ``1.0`` for data without jumps."""
    if tv0 <= 0:
        return 1.0
    return 0.5 / (secant_lipschitz(m) * tv0)


def c_star_condition(m: KineticModel, c_star: float, tv: float, lipschitz: float | None = None) -> bool:
    C = secant_lipschitz(m) if lipschitz is None else lipschitz
    return c_star * C * tv < 1.0


def Q_pos(s: Snapshot, m: KineticModel, c_star: float, lipschitz: float | None = None) -> float:
    """Weighted potential ``sum_{x<y} theta(x, y) sigma_x sigma_y``.

    A warning is issued when ``c_star * C * TV >= 1``; the value is computed
    regardless.
    """
    if not c_star > 0:
        raise ValueError("c_star must be positive")
    if not c_star_condition(m, c_star, total_TV(s), lipschitz):
        warnings.warn("c_star * C * TV >= 1: smallness condition violated", RuntimeWarning, stacklevel=2)
    return q_pos_arrays(WaveArrays.from_waves(m, s.fronts), c_star)


def evaluate(s: Snapshot, m: KineticModel, c_star: float, domain=None) -> FunctionalReport:
    w = WaveArrays.from_waves(m, s.fronts)
    qp, qrr = q_pos_arrays(w, c_star, split=True)
    mass = math.nan
    if domain is not None:
        from .engine import snapshot_mass

        mass = snapshot_mass(s, domain)
    return FunctionalReport(
        V=float(w.sigma.sum()), TV=total_TV(s), Q_weak=q_weak_arrays(w), Q_pos=qp,
        mass=mass, Q_pos_rarefaction_pairs=qrr,
    )


# ---------------------------------------------------------------------------
# Decomposition around one interaction


@dataclass(frozen=True)
class InteractionSite:
    """Ids of the fronts that entered and left one interaction."""

    incoming: tuple[int, ...]
    outgoing: tuple[int, ...]


def _functional(which: str, m: KineticModel, c_star: Optional[float]):
    if which in ("Q_weak", "Qweak"):
        return q_weak_arrays
    if which in ("Q_pos", "Qpos"):
        if c_star is None:
            raise ValueError("Q_pos needs c_star")
        return lambda w: q_pos_arrays(w, c_star)
    raise ValueError(f"unknown functional {which!r}")


def interaction_delta(before: Snapshot, after: Snapshot, site: InteractionSite, which: str,
                      m: KineticModel, c_star: Optional[float] = None) -> tuple[float, float]:
    """Split the change of a quadratic potential into ``(delta_1, delta_2)``.

    ``delta_1`` is the change over pairs of waves that both took part in the
    interaction, ``delta_2`` the change over pairs with one participant; pairs
    of bystanders do not change.
    """
    fn = _functional(which, m, c_star)
    inc, out = set(site.incoming), set(site.outgoing)
    by_before = [f for f in before.fronts if f.id not in inc]
    by_after = [f for f in after.fronts if f.id not in out]
    if [(f.id, f.u_left, f.u_right) for f in by_before] != [(f.id, f.u_left, f.u_right) for f in by_after]:
        raise ValueError("snapshots differ away from the interaction site")
    wb = WaveArrays.from_waves(m, before.fronts)
    wa = WaveArrays.from_waves(m, after.fronts)
    idx_in = [i for i, f in enumerate(before.fronts) if f.id in inc]
    idx_out = [i for i, f in enumerate(after.fronts) if f.id in out]
    delta_1 = fn(wa.subset(idx_out)) - fn(wb.subset(idx_in))
    total = fn(wa) - fn(wb)
    return float(delta_1), float(total - delta_1)


def bystander_sum(s: Snapshot, target, m: KineticModel, exclude: Iterable[int] = ()) -> float:
    """Strength of the waves approaching ``target`` that are not excluded.

    ``target`` is a front id or an index into the snapshot.
    """
    idx = s.index_of(target) if any(f.id == target for f in s.fronts) else int(target)
    t = s.fronts[idx]
    skip = set(exclude)
    total = 0.0
    for i, f in enumerate(s.fronts):
        if i == idx or (f.id is not None and f.id in skip):
            continue
        if weakly_approaching(f.label, t.label):
            total += wave_strength(m, f.u_left, f.u_right)
    return total


def isometry_image(s: Snapshot, m: KineticModel) -> Snapshot:
    """Map every state through ``phi_flat_zero``; positions are kept."""
    p0 = m.phi_flat_zero
    f = m.flux.eval
    out = []
    for fr in s.fronts:
        a, b = p0(fr.u_left), p0(fr.u_right)
        speed = (f(b) - f(a)) / (b - a) if a != b else m.flux.deriv(a)
        out.append(SnapFront(fr.position, a, b, classify_wave(m, a, b), speed, fr.id))
    return replace(s, fronts=tuple(out))
