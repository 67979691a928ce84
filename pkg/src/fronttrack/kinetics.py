"""Concave-convex fluxes and kinetic functions.

A :class:`KineticModel` bundles the flux with the kinetic map ``phi_flat``
(right state of an admissible nonclassical shock), the zero-dissipation map
``phi_flat_zero`` and the threshold map ``phi_sharp``, together with the
Lipschitz-type constants the rest of the package relies on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import PchipInterpolator

ScalarMap = Callable[[float], float]

# Absolute tolerance for the bracketed root solves.
ROOT_XTOL = 1e-14


class KineticError(ValueError):
    """Raised for invalid kinetic/flux input."""


@dataclass(frozen=True)
class Flux:
    """A concave-convex flux ``f`` with its first two derivatives.

    ``chord_root(u, v)`` optionally returns the third intersection of the
    chord through ``(u, f(u))`` and ``(v, f(v))`` with the graph of ``f``;
    ``zero_dissipation`` optionally gives the closed-form zero-dissipation map
    for the quadratic entropy.  Both are shortcuts; generic code falls back
    to root finding.
    """

    eval: ScalarMap
    deriv: ScalarMap
    second_deriv: ScalarMap
    chord_root: Optional[Callable[[float, float], float]] = None
    zero_dissipation: Optional[ScalarMap] = None
    params: dict = field(default_factory=dict)

    def __call__(self, u):
        return self.eval(u)


def cubic_flux(a: float = 0.0) -> Flux:
    """``f(u) = u**3 - a*u``; odd, with an inflection point at the origin."""
    return Flux(
        eval=lambda u: u * u * u - a * u,
        deriv=lambda u: 3.0 * u * u - a,
        second_deriv=lambda u: 6.0 * u,
        # the three roots of f(w) - chord(w) sum to zero
        chord_root=lambda u, v: -(u + v),
        zero_dissipation=lambda u: -u,
        params={"family": "cubic", "a": a},
    )


def mirror_flux(flux: Flux) -> Flux:
    """Flux of the reflected problem ``v = -u``: ``g(v) = -f(-v)``."""
    chord = None
    if flux.chord_root is not None:
        chord = lambda u, v: -flux.chord_root(-u, -v)  # noqa: E731
    zero = None
    if flux.zero_dissipation is not None:
        zero = lambda u: -flux.zero_dissipation(-u)  # noqa: E731
    return Flux(
        eval=lambda v: -flux.eval(-v),
        deriv=lambda v: flux.deriv(-v),
        second_deriv=lambda v: -flux.second_deriv(-v),
        chord_root=chord,
        zero_dissipation=zero,
        params={**flux.params, "mirrored": not flux.params.get("mirrored", False)},
    )


@dataclass(frozen=True, eq=False)
class KineticModel:
    """Flux plus the kinetic triple and its verified constants.

    ``lip_phi_flat`` (an upper Lipschitz bound of ``phi_flat``) is carried in
    addition to the constants of the admissibility inequalities; it enters the
    norm-equivalence constants of the wave strength.
    """

    flux: Flux
    phi_flat: ScalarMap
    phi_flat_zero: ScalarMap
    phi_sharp: ScalarMap
    contraction_K: float
    lip_lower_gap: float
    lip_upper_gap: float
    lip_lower_phi_zero: float
    range_bound: float
    lip_phi_flat: float = 1.0
    config: dict = field(default_factory=dict)
    odd: bool = False

    def with_range(self, range_bound: float) -> "KineticModel":
        if not range_bound > 0:
            raise KineticError("range_bound must be positive")
        return replace(self, range_bound=float(range_bound))

    @property
    def c1(self) -> float:
        return min(1.0, self.lip_lower_phi_zero)

    @property
    def c2(self) -> float:
        return self.lip_lower_gap


def cubic_kinetic(beta: float, range_bound: float = 2.0, a: float = 0.0) -> KineticModel:
    """Linear kinetic function ``phi_flat(u) = -beta*u`` for the cubic flux.

    For ``f(u) = u**3 - a*u`` and ``U = u**2/2`` the zero-dissipation map is
    ``-u`` and the chord through ``u`` and ``-beta*u`` meets the graph again
    at ``-(1 - beta)*u``.
    """
    if not 0.5 < beta < 1.0:
        raise KineticError(f"beta must lie in (1/2, 1), got {beta!r}")
    gap = 1.0 - beta
    return KineticModel(
        flux=cubic_flux(a),
        phi_flat=lambda u: -beta * u,
        phi_flat_zero=lambda u: -u,
        phi_sharp=lambda u: -gap * u,
        contraction_K=beta * beta,
        # |u - phi0(phi(u))| = (1 - beta)|u| exactly, so both bounds coincide
        lip_lower_gap=gap,
        lip_upper_gap=gap,
        lip_lower_phi_zero=1.0,
        range_bound=float(range_bound),
        lip_phi_flat=beta,
        config={"family": "cubic", "beta": beta, "a": a},
        odd=True,
    )


def mirror_model(m: KineticModel) -> KineticModel:
    """The model seen through ``u -> -u``.

    States ``u`` of ``m`` correspond to states ``-u`` of the mirrored model;
    the Riemann solution and the wave taxonomy commute with the reflection.
    """
    pf, p0, ps = m.phi_flat, m.phi_flat_zero, m.phi_sharp
    return replace(
        m,
        flux=mirror_flux(m.flux),
        phi_flat=lambda v: -pf(-v),
        phi_flat_zero=lambda v: -p0(-v),
        phi_sharp=lambda v: -ps(-v),
        config={**m.config, "mirrored": not m.config.get("mirrored", False)},
    )


# ---------------------------------------------------------------------------
# Entropy and jump relations


def rankine_hugoniot_speed(m: KineticModel, u_minus: float, u_plus: float) -> float:
    if u_minus == u_plus:
        raise KineticError("Rankine-Hugoniot speed undefined for coincident states")
    f = m.flux.eval
    return (f(u_plus) - f(u_minus)) / (u_plus - u_minus)


def quadratic_entropy(flux: Flux) -> tuple[ScalarMap, ScalarMap]:
    """Entropy pair ``U = u**2/2``, ``F(u) = int_0^u v f'(v) dv``."""
    if flux.params.get("family") == "cubic" and not flux.params.get("mirrored"):
        a = flux.params.get("a", 0.0)
        return (lambda u: 0.5 * u * u, lambda u: 0.75 * u ** 4 - 0.5 * a * u * u)

    def entropy_flux(u):
        return integrate.quad(lambda v: v * flux.deriv(v), 0.0, u, epsabs=1e-14)[0]

    return (lambda u: 0.5 * u * u, entropy_flux)


def entropy_dissipation(m: KineticModel, entropy, u_minus: float, u_plus: float) -> float:
    """``-s [U] + [F]`` across the jump; admissible jumps give a value <= 0."""
    U, F = entropy
    s = rankine_hugoniot_speed(m, u_minus, u_plus)
    return -s * (U(u_plus) - U(u_minus)) + (F(u_plus) - F(u_minus))


def zero_dissipation_state(flux: Flux, u: float, entropy=None) -> float:
    """State ``v`` of opposite sign with zero entropy dissipation from ``u``.

    Solved by bracket expansion plus Brent's method; used for fluxes without a
    closed-form zero-dissipation map.
    """
    if u == 0.0:
        return 0.0
    U, F = entropy if entropy is not None else quadratic_entropy(flux)

    def dissipation(v):
        s = (flux.eval(v) - flux.eval(u)) / (v - u)
        return -s * (U(v) - U(u)) + (F(v) - F(u))

    sign = -math.copysign(1.0, u)
    near = sign * 1e-9 * abs(u)
    far = sign * abs(u)
    d_near = dissipation(near)
    for _ in range(60):
        if dissipation(far) * d_near < 0:
            break
        far *= 2.0
    else:
        raise KineticError(f"no zero-dissipation state found for u={u!r}")
    lo, hi = sorted((near, far))
    return optimize.brentq(dissipation, lo, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)


# ---------------------------------------------------------------------------
# Threshold function


def compute_phi_sharp(m: KineticModel, u: float) -> float:
    """Root-find the third chord intersection through ``u`` and ``phi_flat(u)``.

    The chord residual ``g(v) = secant(u, v) - secant(u, phi_flat(u))``
    vanishes at ``phi_flat(u)`` and at the threshold value, is negative between
    them and positive at ``v = u``.  The interior minimum of ``g`` on the open
    interval between ``phi_flat(u)`` and ``u`` therefore brackets the root
    together with ``u``.
    """
    if u == 0.0:
        return 0.0
    if abs(u) > m.range_bound * (1 + 1e-12):
        raise KineticError(f"|u|={abs(u)!r} exceeds range_bound={m.range_bound!r}")
    f = m.flux.eval
    fu = f(u)
    w = m.phi_flat(u)
    slope = (fu - f(w)) / (u - w)

    def g(v):
        if v == u:
            return m.flux.deriv(u) - slope
        return (fu - f(v)) / (u - v) - slope

    lo, hi = sorted((w, u))
    span = hi - lo
    res = optimize.minimize_scalar(
        g, bounds=(lo + 1e-12 * span, hi - 1e-12 * span), method="bounded",
        options={"xatol": 1e-10 * span},
    )
    v_min = res.x
    if not g(v_min) < 0 or not g(u) > 0:
        raise KineticError(f"no bracketing interval for phi_sharp at u={u!r}")
    a, b = sorted((v_min, u))
    return optimize.brentq(g, a, b, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)


def chord_residual(m: KineticModel, u: float, v: float) -> float:
    """Difference of the two secant slopes defining ``phi_sharp(u) = v``."""
    f = m.flux.eval
    w = m.phi_flat(u)
    return (f(u) - f(w)) / (u - w) - (f(u) - f(v)) / (u - v)


# ---------------------------------------------------------------------------
# Tabulated kinetics


def _vectorized(fn: ScalarMap) -> ScalarMap:
    vec = np.vectorize(fn, otypes=[float])

    def call(u):
        if np.ndim(u) == 0:
            return float(fn(float(u)))
        return vec(u)

    return call


def _phi_sharp_map(flux: Flux, phi_flat: ScalarMap, probe: Callable) -> ScalarMap:
    if flux.chord_root is not None:
        root = flux.chord_root
        return lambda u: root(u, phi_flat(u))
    return _vectorized(probe)


def estimate_constants(phi_flat, phi_flat_zero, range_bound: float, grid_points: int = 1000) -> dict:
    """Empirical contraction and Lipschitz constants on ``|u| <= range_bound``."""
    u = np.linspace(-range_bound, range_bound, max(int(grid_points), 2))
    u = u[u != 0.0]
    pf = np.asarray(phi_flat(u), dtype=float)
    ratio_k = np.abs(np.asarray(phi_flat(pf), dtype=float)) / np.abs(u)
    gap = np.abs(u - np.asarray(phi_flat_zero(pf), dtype=float)) / np.abs(u)
    full = np.sort(np.append(u, 0.0))
    du = np.diff(full)
    dq_zero = np.abs(np.diff(np.asarray(phi_flat_zero(full), dtype=float))) / du
    dq_flat = np.abs(np.diff(np.asarray(phi_flat(full), dtype=float))) / du
    return {
        "contraction_K": float(ratio_k.max()),
        "lip_lower_gap": float(gap.min()),
        "lip_upper_gap": float(gap.max()),
        "lip_lower_phi_zero": float(dq_zero.min()),
        "lip_phi_flat": float(dq_flat.max()),
    }


def tabulated_kinetic(samples, flux: Flux | None = None, range_bound: float | None = None) -> KineticModel:
    """Kinetic function given as samples ``(u, phi_flat(u))``.

    Interpolation is monotone (PCHIP), so monotone data stays monotone.  The
    constants are estimated by sampling; run :func:`verify_axioms` before use.
    """
    pts = sorted((float(a), float(b)) for a, b in samples)
    if len(pts) < 2:
        raise KineticError("tabulated kinetic function needs at least two samples")
    xs = np.array([p[0] for p in pts])
    if np.any(np.diff(xs) <= 0):
        raise KineticError("tabulated abscissae must be distinct")
    ys = np.array([p[1] for p in pts])
    flux = flux or cubic_flux()
    interp = PchipInterpolator(xs, ys, extrapolate=True)

    def phi_flat(u):
        if np.ndim(u) == 0:
            return float(interp(float(u)))
        return interp(u)

    if flux.zero_dissipation is not None:
        phi_flat_zero = flux.zero_dissipation
    else:
        entropy = quadratic_entropy(flux)
        phi_flat_zero = _vectorized(lambda u: zero_dissipation_state(flux, u, entropy))

    bound = float(range_bound) if range_bound is not None else float(np.max(np.abs(xs)))
    consts = estimate_constants(phi_flat, phi_flat_zero, bound)
    model = KineticModel(
        flux=flux,
        phi_flat=phi_flat,
        phi_flat_zero=phi_flat_zero,
        phi_sharp=lambda u: u,  # placeholder until the model exists
        range_bound=bound,
        config={"family": "tabulated", "samples": [list(p) for p in pts]},
        odd=bool(np.allclose(np.interp(-xs[::-1], xs, ys), -ys[::-1], atol=1e-14)),
        **consts,
    )
    probe = lambda u: compute_phi_sharp(model, u)  # noqa: E731
    return replace(model, phi_sharp=_phi_sharp_map(flux, phi_flat, probe))


# ---------------------------------------------------------------------------
# Axiom verification


@dataclass
class AxiomCheck:
    name: str
    passed: bool
    witness: Optional[float] = None
    detail: str = ""


@dataclass
class AxiomReport:
    checks: list[AxiomCheck]
    constants: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> AxiomCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[AxiomCheck]:
        return [c for c in self.checks if not c.passed]

    def format(self) -> str:
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            extra = "" if c.passed else f"  witness u={c.witness!r} {c.detail}"
            lines.append(f"{status:4s}  {c.name}{extra}")
        for k, v in self.constants.items():
            lines.append(f"      {k} = {v:.16g}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "witness": c.witness, "detail": c.detail}
                for c in self.checks
            ],
            "constants": self.constants,
        }


def _first(mask: np.ndarray, u: np.ndarray) -> Optional[float]:
    idx = np.flatnonzero(mask)
    return None if idx.size == 0 else float(u[idx[0]])


def _check(name: str, bad: np.ndarray, u: np.ndarray, detail: str = "") -> AxiomCheck:
    w = _first(bad, u)
    return AxiomCheck(name, w is None, w, detail if w is not None else "")


def verify_axioms(m: KineticModel, grid_points: int = 1000) -> AxiomReport:
    """Check the flux conditions, (A1)-(A3) and the derived inequalities.

    Every check is evaluated on a uniform grid of ``|u| <= range_bound``;
    failures carry the first offending grid point.
    """
    if grid_points < 2:
        raise KineticError("grid_points must be >= 2")
    M = m.range_bound
    u = np.linspace(-M, M, int(grid_points))
    u = u[u != 0.0]
    au = np.abs(u)
    slack = 1e-12
    checks = []

    f2 = np.asarray(m.flux.second_deriv(u), dtype=float)
    checks.append(_check("flux_concave_convex", ~(u * f2 > 0), u, "u*f''(u) <= 0"))
    fp = m.flux.deriv
    growth_ok = fp(M) > fp(M / 2) and fp(-M) > fp(-M / 2)
    checks.append(AxiomCheck("flux_growth", bool(growth_ok), None if growth_ok else M,
                             "" if growth_ok else "f' does not grow with |u|"))

    full = np.sort(np.append(u, 0.0))
    pf_full = np.asarray(m.phi_flat(full), dtype=float)
    dq = np.diff(pf_full) / np.diff(full)
    finite = np.isfinite(dq)
    checks.append(_check("A1_lipschitz_one_to_one", ~finite | (dq == 0), full[:-1],
                         "non-finite or vanishing difference quotient"))
    zero_ok = abs(float(m.phi_flat(0.0))) <= 1e-14
    a2 = _check("A2_decreasing", ~(dq < 0), full[:-1], "phi_flat not strictly decreasing")
    if not zero_ok and a2.passed:
        a2 = AxiomCheck("A2_decreasing", False, 0.0, "phi_flat(0) != 0")
    checks.append(a2)

    pf = np.asarray(m.phi_flat(u), dtype=float)
    ppf = np.asarray(m.phi_flat(pf), dtype=float)
    consts = estimate_constants(m.phi_flat, m.phi_flat_zero, M, grid_points)
    K_emp = consts["contraction_K"]
    bad_a3 = np.abs(ppf) > min(m.contraction_K, 1.0) * au * (1 + slack)
    bad_a3 |= np.abs(ppf) >= au
    checks.append(_check("A3_contraction", bad_a3, u,
                         f"|phi(phi(u))|/|u| reaches {K_emp:.6g}"))

    p0 = np.asarray(m.phi_flat_zero(u), dtype=float)
    pp0 = np.asarray(m.phi_flat_zero(p0), dtype=float)
    checks.append(_check("zero_dissipation_involution", np.abs(pp0 - u) > 1e-10 * (1 + au), u))
    checks.append(_check("phi_flat_below_phi_zero", ~(np.abs(pf) < np.abs(p0)), u))

    gap = np.abs(u - np.asarray(m.phi_flat_zero(pf), dtype=float))
    lo_ok = m.lip_lower_gap > 0 and m.lip_upper_gap < 1
    bad_gap = (gap < m.lip_lower_gap * au * (1 - slack)) | (gap > m.lip_upper_gap * au * (1 + slack))
    if not lo_ok:
        bad_gap = np.ones_like(u, dtype=bool)
    checks.append(_check("gap_lipschitz_sandwich", bad_gap, u))

    try:
        ps = np.asarray(m.phi_sharp(u), dtype=float)
        pos = u > 0
        bad_order = np.where(pos, ~((pf < ps) & (ps < u)), ~((u < ps) & (ps < pf)))
        checks.append(_check("sharp_ordering", bad_order, u))
    except KineticError as exc:
        checks.append(AxiomCheck("sharp_ordering", False, None, str(exc)))

    consts["phi_sharp_monotone_decreasing_positive"] = _sharp_monotone(m, u)
    return AxiomReport(checks, consts)


def _sharp_monotone(m: KineticModel, u: np.ndarray) -> bool:
    pos = u[u > 0]
    try:
        vals = np.asarray(m.phi_sharp(pos), dtype=float)
    except KineticError:
        return False
    return bool(np.all(np.diff(vals) < 0))


# ---------------------------------------------------------------------------
# Config round trip


def model_from_config(block: dict, range_bound: float | None = None) -> KineticModel:
    """Build a model from ``{family: cubic, beta}`` or ``{family: tabulated, samples}``."""
    family = block.get("family")
    flux = cubic_flux(float(block.get("a", 0.0)))
    if family == "cubic":
        if "beta" not in block:
            raise KineticError("cubic kinetic block needs 'beta'")
        return cubic_kinetic(float(block["beta"]), range_bound or 2.0, float(block.get("a", 0.0)))
    if family == "tabulated":
        if "samples" not in block:
            raise KineticError("tabulated kinetic block needs 'samples'")
        return tabulated_kinetic(block["samples"], flux, range_bound)
    raise KineticError(f"unknown kinetic family {family!r}")


def model_to_config(m: KineticModel) -> dict:
    return {k: v for k, v in m.config.items() if k != "mirrored"}
