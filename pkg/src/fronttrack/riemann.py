"""Nonclassical Riemann solver and rarefaction discretization."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .kinetics import KineticError, KineticModel, rankine_hugoniot_speed
from .waves import Branch, WaveLabel, classify_wave, normalized_state, riemann_branch, wave_strength


@dataclass(frozen=True)
class Wave:
    """One wave of a Riemann fan.

    For shocks ``speed`` is the Rankine-Hugoniot speed and ``speed_right``
    equals it; for a rarefaction the two are the characteristic speeds at the
    left and right state.
    """

    u_left: float
    u_right: float
    kind: WaveLabel
    speed: float
    speed_right: float

    @property
    def is_rarefaction(self) -> bool:
        return self.kind.is_rarefaction


@dataclass(frozen=True)
class WaveFan:
    u_left: float
    u_right: float
    waves: tuple[Wave, ...]
    branch: Branch

    def __len__(self) -> int:
        return len(self.waves)

    def __iter__(self):
        return iter(self.waves)

    def __getitem__(self, i):
        return self.waves[i]

    @property
    def labels(self) -> list[str]:
        return [w.kind.value for w in self.waves]


def _check_range(m: KineticModel, *states: float) -> None:
    for u in states:
        if not math.isfinite(u):
            raise KineticError(f"non-finite state {u!r}")
        if abs(u) > m.range_bound * (1 + 1e-12):
            raise KineticError(f"state {u!r} outside range_bound {m.range_bound!r}")


def _shock(m: KineticModel, a: float, b: float) -> Wave:
    s = rankine_hugoniot_speed(m, a, b)
    return Wave(a, b, classify_wave(m, a, b), s, s)


def _rarefaction(m: KineticModel, a: float, b: float) -> Wave:
    fp = m.flux.deriv
    return Wave(a, b, classify_wave(m, a, b), fp(a), fp(b))


def solve_riemann(m: KineticModel, u_l: float, u_r: float) -> WaveFan:
    """Self-similar solution of the Riemann problem ``(u_l, u_r)``.

    The nonclassical shock always reaches exactly ``phi_flat(u_l)``, so the
    kinetic relation holds to machine precision on every nonclassical wave.
    """
    _check_range(m, u_l, u_r)
    branch = riemann_branch(m, u_l, u_r)
    if branch == Branch.EMPTY:
        waves: tuple[Wave, ...] = ()
    elif branch == Branch.RAREFACTION:
        waves = (_rarefaction(m, u_l, u_r),)
    elif branch == Branch.SHOCK:
        waves = (_shock(m, u_l, u_r),)
    else:
        u_m = m.phi_flat(u_l)
        n = _shock(m, u_l, u_m)
        n = Wave(n.u_left, n.u_right, WaveLabel.N_PM if u_l > 0 else WaveLabel.N_MP, n.speed, n.speed)
        if branch == Branch.NONCLASSICAL:
            # absorb the sub-tolerance remainder into the nonclassical state
            waves = (n,) if u_r == u_m else (n, _shock(m, u_m, u_r))
        elif branch == Branch.NONCLASSICAL_SHOCK:
            waves = (n, _shock(m, u_m, u_r))
        else:
            waves = (n, _rarefaction(m, u_m, u_r))
    return WaveFan(u_l, u_r, waves, branch)


def _denormalize(m: KineticModel, w: float, negative: bool) -> float:
    # phi_flat_zero is an involution, so it also inverts the normalization
    return m.phi_flat_zero(w) if negative else w


def discretize_rarefaction(m: KineticModel, u_left: float, u_right: float, eps: float) -> list[Wave]:
    """Split a rarefaction into equal-strength jumps of strength at most ``eps``.

    The split is uniform in the generalized strength, so on the concave side it
    is uniform in the ``phi_flat_zero`` image of the states.  Each jump moves at
    its Rankine-Hugoniot speed.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if u_left == u_right:
        return []
    label = classify_wave(m, u_left, u_right)
    if not label.is_rarefaction:
        raise ValueError(f"({u_left!r}, {u_right!r}) is not a rarefaction")
    sigma = wave_strength(m, u_left, u_right)
    n = max(1, math.ceil(sigma / eps - 1e-9))
    negative = label == WaveLabel.R_MINUS
    a, b = normalized_state(m, u_left), normalized_state(m, u_right)
    states = [u_left]
    for k in range(1, n):
        states.append(_denormalize(m, a + (b - a) * k / n, negative))
    states.append(u_right)
    return [_shock_piece(m, states[k], states[k + 1], label) for k in range(n)]


def _shock_piece(m: KineticModel, a: float, b: float, label: WaveLabel) -> Wave:
    s = rankine_hugoniot_speed(m, a, b)
    return Wave(a, b, label, s, s)


def fan_fronts(m: KineticModel, u_l: float, u_r: float, eps: float) -> list[Wave]:
    """Riemann fan with every rarefaction replaced by its discretization."""
    out: list[Wave] = []
    for w in solve_riemann(m, u_l, u_r):
        if w.is_rarefaction:
            out.extend(discretize_rarefaction(m, w.u_left, w.u_right, eps))
        else:
            out.append(w)
    return out
