"""Wave taxonomy, generalized strength and the interaction classifier."""
from __future__ import annotations

import enum
import weakref
from typing import NamedTuple

from .kinetics import KineticModel, mirror_model

# Relative tolerance for the kinetic-graph test and all Riemann case boundaries.
TIE_RTOL = 1e-9


class WaveLabel(str, enum.Enum):
    C_PLUS = "C+"
    C_MINUS = "C-"
    C_PM = "C+-"
    C_MP = "C-+"
    N_PM = "N+-"
    N_MP = "N-+"
    R_PLUS = "R+"
    R_MINUS = "R-"

    def __str__(self) -> str:
        return self.value

    @property
    def is_rarefaction(self) -> bool:
        return self in (WaveLabel.R_PLUS, WaveLabel.R_MINUS)

    @property
    def is_nonclassical(self) -> bool:
        return self in (WaveLabel.N_PM, WaveLabel.N_MP)


class InteractionCase(str, enum.Enum):
    RC1 = "RC-1"
    RC2 = "RC-2"
    RC3 = "RC-3"
    RN = "RN"
    CR1 = "CR-1"
    CR2 = "CR-2"
    CR3 = "CR-3"
    CR4 = "CR-4"
    CC1 = "CC-1"
    CC2 = "CC-2"
    CC3 = "CC-3"
    CN1 = "CN-1"
    CN2 = "CN-2"
    CN3 = "CN-3"
    NC = "NC"
    NN = "NN"

    def __str__(self) -> str:
        return self.value


# Interactions in which a small wave meets a crossing shock and may create a
# nonclassical shock; the quadratic potentials can increase there.
EXCEPTIONAL_CASES = frozenset(
    {InteractionCase.RC3, InteractionCase.CR4, InteractionCase.CC3, InteractionCase.CN3}
)
BIRTH_CASES = EXCEPTIONAL_CASES - {InteractionCase.CN3}


class InteractionError(ValueError):
    """Raised for pairs that are not adjacent, not colliding or unclassifiable."""


class WaveSpec(NamedTuple):
    u_left: float
    u_right: float
    label: WaveLabel


def _tie(u: float) -> float:
    return TIE_RTOL * abs(u)


def on_kinetic_graph(m: KineticModel, u_left: float, u_right: float) -> bool:
    return abs(u_right - m.phi_flat(u_left)) <= _tie(u_left)


def classify_wave(m: KineticModel, u_left: float, u_right: float) -> WaveLabel:
    """Label of the front ``(u_left, u_right)``; zero counts on both sides."""
    if u_left == u_right:
        raise ValueError("zero-strength wave has no label")
    if u_left >= 0 and u_right >= 0:
        return WaveLabel.R_PLUS if u_right > u_left else WaveLabel.C_PLUS
    if u_left <= 0 and u_right <= 0:
        return WaveLabel.R_MINUS if u_right < u_left else WaveLabel.C_MINUS
    if u_left > 0:
        return WaveLabel.N_PM if on_kinetic_graph(m, u_left, u_right) else WaveLabel.C_PM
    return WaveLabel.N_MP if on_kinetic_graph(m, u_left, u_right) else WaveLabel.C_MP


def normalized_state(m: KineticModel, u: float) -> float:
    """``u`` itself on the convex side, ``phi_flat_zero(u)`` on the concave side."""
    return u if u >= 0 else m.phi_flat_zero(u)


def wave_strength(m: KineticModel, u_minus: float, u_plus: float) -> float:
    """Generalized strength: negative states are mapped through ``phi_flat_zero``."""
    if u_minus == u_plus:
        return 0.0
    return abs(normalized_state(m, u_minus) - normalized_state(m, u_plus))


def norm_equivalence_constants(m: KineticModel) -> tuple[float, float]:
    """``(C', C'')`` with ``C'|du| <= sigma <= C''|du|`` on admissible waves.

    The lower constant is the worst of the same-sign bound (Lipschitz bound of
    ``phi_flat_zero``) and the crossing/nonclassical bound obtained from the gap
    inequality and ``|phi_sharp(u)| < |phi_flat(u)|``.
    """
    lower = min(1.0, m.lip_lower_phi_zero, m.lip_lower_gap / (1.0 + m.lip_phi_flat))
    # crossing waves: |u - phi0(v)| <= |u| + Lip(phi0)|v|
    upper_phi0 = max(1.0, abs(m.phi_flat_zero(m.range_bound)) / m.range_bound,
                     abs(m.phi_flat_zero(-m.range_bound)) / m.range_bound)
    return lower, upper_phi0


# ---------------------------------------------------------------------------
# Riemann branches


class Branch(str, enum.Enum):
    EMPTY = "empty"
    RAREFACTION = "rarefaction"
    SHOCK = "shock"
    NONCLASSICAL = "N"
    NONCLASSICAL_SHOCK = "N+C"
    NONCLASSICAL_RAREFACTION = "N+R"


def riemann_branch(m: KineticModel, u_l: float, u_r: float) -> Branch:
    """Which wave pattern solves the Riemann problem ``(u_l, u_r)``.

    Ties within the relative tolerance resolve to the pattern with fewer
    fronts: ``u_r = phi_sharp(u_l)`` gives one classical shock and
    ``u_r = phi_flat(u_l)`` one nonclassical shock.
    """
    if u_r == u_l:
        return Branch.EMPTY
    if u_l == 0.0:
        return Branch.RAREFACTION
    s = 1.0 if u_l > 0 else -1.0
    # in reflected coordinates the solver reads as for u_l > 0
    if s * u_r > s * u_l:
        return Branch.RAREFACTION
    tie = _tie(u_l)
    if s * u_r >= s * m.phi_sharp(u_l) - tie:
        return Branch.SHOCK
    pf = s * m.phi_flat(u_l)
    if s * u_r > pf + tie:
        return Branch.NONCLASSICAL_SHOCK
    if s * u_r >= pf - tie:
        return Branch.NONCLASSICAL
    return Branch.NONCLASSICAL_RAREFACTION


# ---------------------------------------------------------------------------
# Interaction taxonomy

_mirrors: "weakref.WeakKeyDictionary[KineticModel, KineticModel]" = weakref.WeakKeyDictionary()


def _mirrored(m: KineticModel) -> KineticModel:
    mm = _mirrors.get(m)
    if mm is None:
        mm = _mirrors[m] = mirror_model(m)
    return mm


def _normalize(m: KineticModel, u_l: float, u_m: float, u_r: float):
    if u_l < 0 or (u_l == 0 and u_m < 0):
        return _mirrored(m), -u_l, -u_m, -u_r, True
    return m, u_l, u_m, u_r, False


def _as_spec(w) -> WaveSpec:
    return w if isinstance(w, WaveSpec) else WaveSpec(*w)


def _speed(m: KineticModel, a: float, b: float) -> float:
    f = m.flux.eval
    return (f(b) - f(a)) / (b - a)


def classify_interaction(m: KineticModel, left_wave, right_wave, check_speeds: bool = True) -> InteractionCase:
    """Case label of a colliding pair of adjacent waves.

    The pair is reflected so that the leftmost state is positive; the case is
    then decided by the state inequalities of each case together with the
    Riemann branch of the outer states.  Two configurations fall outside the
    sixteen listed ones because the outgoing wave is a rarefaction (a weak
    classical shock absorbed by a stronger rarefaction); they are reported as
    RC-1 and CR-2, whose incoming signatures they share.
    """
    lw, rw = _as_spec(left_wave), _as_spec(right_wave)
    u_l, u_m, u_r = lw.u_left, lw.u_right, rw.u_right
    if abs(lw.u_right - rw.u_left) > 1e-12 * (1.0 + abs(u_m)):
        raise InteractionError("waves are not adjacent")
    if u_l == u_m or u_m == u_r:
        raise InteractionError("zero-strength wave in pair")
    if check_speeds and not _speed(m, u_l, u_m) > _speed(m, u_m, u_r):
        raise InteractionError("waves do not approach each other")

    mm, ul, um, ur, _ = _normalize(m, u_l, u_m, u_r)
    tie_l = _tie(ul)
    on_graph_right = um != 0 and abs(ur - mm.phi_flat(um)) <= _tie(um) and um * ur < 0
    branch = riemann_branch(mm, ul, ur)

    if um > ul:  # R+ on the left
        if ur >= um:
            raise InteractionError("two rarefactions never collide")
        if on_graph_right:
            return InteractionCase.RN
        if branch in (Branch.SHOCK, Branch.EMPTY, Branch.RAREFACTION):
            return InteractionCase.RC1
        if branch == Branch.NONCLASSICAL_SHOCK:
            return InteractionCase.RC3
        return InteractionCase.RC2

    if um >= 0:  # C+ on the left (um < ul)
        if ur > um:
            if branch in (Branch.SHOCK, Branch.EMPTY, Branch.RAREFACTION):
                return InteractionCase.CR2
            raise InteractionError(f"C+ R+ with branch {branch.value}")
        if um == 0:  # right wave is R- from the origin
            return _cr_case(branch)
        if on_graph_right:
            if branch == Branch.SHOCK:
                return InteractionCase.CN1
            if branch == Branch.NONCLASSICAL_SHOCK:
                return InteractionCase.CN3
            raise InteractionError(f"C+ N+- with branch {branch.value}")
        if branch == Branch.SHOCK:
            return InteractionCase.CC1
        if branch == Branch.NONCLASSICAL_SHOCK:
            return InteractionCase.CC3
        raise InteractionError(f"C+ C with branch {branch.value}")

    # um < 0: crossing shock on the left
    left_is_n = abs(um - mm.phi_flat(ul)) <= tie_l
    if left_is_n:
        if ur < um:
            raise InteractionError("a nonclassical shock moves away from its trailing rarefaction")
        if on_graph_right:
            return InteractionCase.NN
        if branch == Branch.SHOCK:
            return InteractionCase.NC
        raise InteractionError(f"N+- C with branch {branch.value}")
    if ur < um:
        return _cr_case(branch)
    if on_graph_right:
        if branch == Branch.SHOCK:
            return InteractionCase.CN2
        raise InteractionError(f"C+- N-+ with branch {branch.value}")
    if branch == Branch.SHOCK:
        return InteractionCase.CC2
    raise InteractionError(f"C+- C with branch {branch.value}")


def _cr_case(branch: Branch) -> InteractionCase:
    if branch == Branch.SHOCK:
        return InteractionCase.CR1
    if branch == Branch.NONCLASSICAL_SHOCK:
        return InteractionCase.CR4
    if branch in (Branch.NONCLASSICAL, Branch.NONCLASSICAL_RAREFACTION):
        return InteractionCase.CR3
    raise InteractionError(f"C+- R- with branch {branch.value}")


_C1_CASES = {InteractionCase.RC1, InteractionCase.RC3, InteractionCase.CR1,
             InteractionCase.CR2, InteractionCase.CR4}
_C2_CASES = {InteractionCase.RC2, InteractionCase.RN}


def incoming_rarefaction(case: InteractionCase, left_wave, right_wave) -> WaveSpec | None:
    """The incoming rarefaction of an ``R*`` or ``*R`` interaction."""
    lw, rw = _as_spec(left_wave), _as_spec(right_wave)
    if case.value.startswith("R"):
        return lw
    if case.value.startswith("CR"):
        return rw
    return None


def predicted_V_bound(case: InteractionCase, incoming, m: KineticModel) -> float:
    """Upper bound on the change of the generalized total variation.

    When the outgoing wave of an RC-1 or CR-2 pair is itself a rarefaction the
    exact change is ``-2 (sigma(R_in) - sigma(R_out))``, the form used for
    CR-3, and that value is returned instead of the ``c1`` bound.
    """
    left_wave, right_wave = (_as_spec(w) for w in incoming)
    r_in = incoming_rarefaction(case, left_wave, right_wave)
    sig_in = wave_strength(m, r_in.u_left, r_in.u_right) if r_in is not None else 0.0
    u_l, u_r = left_wave.u_left, right_wave.u_right
    if case in (InteractionCase.RC1, InteractionCase.CR2):
        if riemann_branch(m, u_l, u_r) == Branch.RAREFACTION:
            return -2.0 * (sig_in - wave_strength(m, u_l, u_r))
    if case in _C1_CASES:
        return -m.c1 * sig_in
    if case in _C2_CASES:
        return -m.c2 * sig_in
    if case == InteractionCase.CR3:
        sig_out = wave_strength(m, m.phi_flat(u_l), u_r)
        return -2.0 * (sig_in - sig_out)
    return 0.0
