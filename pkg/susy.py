"""
Shape invariance for the six effective-potential classes.

An effective problem -Φ'' + V_eff Φ = λ Φ is matched to a class, written as
H = a⁺a⁻ + e with a^∓ = ±d/dy + W, and solved by the ladder
E_n = e(shifted n times) + n·R. Two-step problems carry the energy inside
V_eff; their level condition is a quadratic in E.
"""

import logging
import math
from fractions import Fraction
from typing import Callable, Dict, Mapping, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr

from catalog import FamilyId, ParameterError, PotentialClass, Route, build_system, get_entry, validate_params
from reduction import ClassFit, EffectiveProblem, ReductionError, classify_effective, fit_class, liouville_direct, reduce_family
from numsolve import inner_product
from special import SpecialFunctionError, chf_poly, jacobi, laguerre
from symexpr import (
    ALPHA_NAME,
    ENERGY_NAME,
    KAPPA_NAME,
    Y,
    Expr,
    as_expr,
    cos,
    cosh,
    cot,
    coth,
    csc,
    csch,
    diff,
    evaluate,
    exp,
    free_symbols,
    sec,
    sech,
    sin,
    sinh,
    tan,
    tanh,
)

logger = logging.getLogger(__name__)

PC = PotentialClass

__all__ = [
    "SusyError",
    "ShapeMismatchError",
    "SpecialFunctionError",
    "SuperPotential",
    "LadderState",
    "SpectrumResult",
    "ClosedFormState",
    "superpotential_for",
    "ladder_state",
    "spectrum",
    "eigenfunction",
    "normalize",
    "double_shape_invariance",
    "NAMED_LEVELS",
]


class SusyError(Exception):
    """No bound state, or a problem outside the shape-invariant classes."""


class ShapeMismatchError(SusyError):
    """The effective potential does not fit the expected class."""


def _snap(value: float, tol: float = 1e-8) -> Union[Fraction, float]:
    """Nearest fraction with a small denominator, when within tol."""
    q = Fraction(value).limit_denominator(1000)
    return q if abs(float(q) - value) < tol else value


def _num(value: float) -> Expr:
    return as_expr(_snap(value))


def _exponent(value: float) -> Fraction:
    return Fraction(_snap(value))


# ---------------------------------------------------------------- superpotentials

class SuperPotential(BaseModel):
    """
    One member of a shape-invariant class.

    A is the index (L+1 for Coulomb and oscillator), B the strength (g, ω or
    the class constant) and ``offset`` the constant the effective potential
    adds to the class form U.
    """

    model_config = ConfigDict(frozen=True)

    tag: PotentialClass
    period: float = 1.0
    A: float
    B: float
    offset: float = 0.0
    l_slope: Optional[float] = None

    # ---- class table

    @property
    def step(self) -> Tuple[float, float]:
        """Change of (A, B) per ladder step."""
        c = self.period
        if self.tag in (PC.COULOMB, PC.OSCILLATOR):
            return 1.0, 0.0
        if self.tag == PC.PT_HYP:
            return c, -c
        if self.tag == PC.PT_TRIG:
            return c, c
        return c, 0.0

    @property
    def remainder(self) -> float:
        return self.B if self.tag == PC.OSCILLATOR else 0.0

    @property
    def ground_energy(self) -> float:
        A, B = self.A, self.B
        if self.tag == PC.COULOMB:
            return -B**2 / (4 * A**2)
        if self.tag == PC.OSCILLATOR:
            return B * (A + 0.5)
        if self.tag == PC.ROSEN_MORSE:
            return A**2 - B**2 / A**2
        if self.tag == PC.ECKART:
            return -(A**2 + B**2 / A**2)
        if self.tag == PC.PT_HYP:
            return -((A - B) ** 2)
        return (A + B) ** 2

    @property
    def W(self) -> Expr:
        A, B = _num(self.A), _num(self.B)
        t = _num(self.period) * Y
        if self.tag == PC.COULOMB:
            return -B / (2 * A) - A / Y
        if self.tag == PC.OSCILLATOR:
            return B * Y / 2 - A / Y
        if self.tag == PC.ROSEN_MORSE:
            return -A * cot(t) - B / A
        if self.tag == PC.ECKART:
            return -A * coth(t) + B / A
        if self.tag == PC.PT_HYP:
            return -A * coth(t) + B * tanh(t)
        return -A * cot(t) + B * tan(t)

    @property
    def U(self) -> Expr:
        """The class potential, without the constant offset."""
        A, B, c = _num(self.A), _num(self.B), _num(self.period)
        t = c * Y
        if self.tag == PC.COULOMB:
            return A * (A - 1) / Y**2 + B / Y
        if self.tag == PC.OSCILLATOR:
            return A * (A - 1) / Y**2 + B**2 * Y**2 / 4
        if self.tag == PC.ROSEN_MORSE:
            return A * (A - c) * csc(t) ** 2 + 2 * B * cot(t)
        if self.tag == PC.ECKART:
            return A * (A - c) * csch(t) ** 2 - 2 * B * coth(t)
        if self.tag == PC.PT_HYP:
            return A * (A - c) * csch(t) ** 2 - B * (B + c) * sech(t) ** 2
        return A * (A - c) * csc(t) ** 2 + B * (B - c) * sec(t) ** 2

    @property
    def ground_state(self) -> Expr:
        """exp(-∫W dy), unnormalized."""
        A, B, c = self.A, self.B, self.period
        t = _num(c) * Y
        a = _exponent(A / c)
        if self.tag == PC.COULOMB:
            return Y ** _exponent(A) * exp(_num(B / (2 * A)) * Y)
        if self.tag == PC.OSCILLATOR:
            return Y ** _exponent(A) * exp(-_num(B / 4) * Y**2)
        if self.tag == PC.ROSEN_MORSE:
            return sin(t) ** a * exp(_num(B / A) * Y)
        if self.tag == PC.ECKART:
            return sinh(t) ** a * exp(-_num(B / A) * Y)
        if self.tag == PC.PT_HYP:
            return sinh(t) ** a * cosh(t) ** (-_exponent(B / c))
        return sin(t) ** a * cos(t) ** _exponent(B / c)

    # ---- ladder

    def shifted(self, k: int = 1) -> "SuperPotential":
        dA, dB = self.step
        return self.model_copy(update={"A": self.A + k * dA, "B": self.B + k * dB})

    def level(self, n: int) -> float:
        """Eigenvalue of -d²/dy² + U + offset for the n-th state."""
        return self.shifted(n).ground_energy + n * self.remainder + self.offset

    def bound(self, n: int) -> bool:
        """Whether the n-th ladder state is normalizable."""
        s = self.shifted(n)
        if not (np.isfinite(s.A) and np.isfinite(s.B)) or s.A <= 0:
            return False
        if self.tag == PC.COULOMB:
            return s.B < 0
        if self.tag == PC.OSCILLATOR:
            return s.B > 0
        if self.tag == PC.ECKART:
            return s.B > s.A**2
        if self.tag == PC.PT_HYP:
            return s.B > s.A
        if self.tag == PC.PT_TRIG:
            return s.B > 0
        return True

    def virtual(self, n: int) -> bool:
        """The tower for n >= 1 uses indices that belong to no integer l."""
        if n == 0 or not self.l_slope:
            return False
        ratio = self.step[0] / self.l_slope
        return abs(ratio - round(ratio)) > 1e-9

    # ---- checks

    def samples(self, points: int = 30, seed: int = 0) -> np.ndarray:
        rng = np.random.default_rng(seed)
        if self.tag in (PC.ROSEN_MORSE, PC.PT_TRIG):
            edge = math.pi / self.period / (2 if self.tag == PC.PT_TRIG else 1)
            return rng.uniform(0.05 * edge, 0.95 * edge, points)
        return rng.uniform(0.2, 3.0, points)

    def _relative(self, lhs: Expr, rhs: Expr, points: int, seed: int) -> float:
        env = {"y": self.samples(points, seed)}
        a = np.broadcast_to(evaluate(lhs, env), (points,))
        b = np.broadcast_to(evaluate(rhs, env), (points,))
        return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a) + np.abs(b))))

    def factorization_residual(self, points: int = 30, seed: int = 0) -> float:
        """U = W² - W' + e at random y."""
        W = self.W
        return self._relative(self.U, W**2 - diff(W, Y) + self.ground_energy, points, seed)

    def shape_invariance_residual(self, points: int = 30, seed: int = 0) -> float:
        """W² + W' + e = U(shifted) + R at random y."""
        W = self.W
        partner = W**2 + diff(W, Y) + self.ground_energy
        return self._relative(partner, self.shifted().U + self.remainder, points, seed)

    def annihilation_residual(self, points: int = 30, seed: int = 0) -> float:
        """a⁻ Φ⁰ = 0 relative to |Φ⁰'| + |WΦ⁰|."""
        phi = self.ground_state
        d = diff(phi, Y)
        env = {"y": self.samples(points, seed)}
        lhs = np.abs(evaluate(d + self.W * phi, env))
        scale = np.abs(evaluate(d, env)) + np.abs(evaluate(self.W * phi, env))
        return float(np.max(lhs / np.maximum(scale, 1e-300)))


def _root_index(w1: float, c: float) -> float:
    """Larger root A of A(A - c) = w1."""
    disc = c * c + 4 * w1
    if disc < 0:
        raise ShapeMismatchError(f"singular weight {w1} admits no real index")
    return (c + math.sqrt(disc)) / 2


def from_weights(tag: PotentialClass, period: float, weights, l_slope: Optional[float] = None) -> SuperPotential:
    """Class parameters read off the basis weights (singular, second, constant)."""
    w1, w2, w3 = (float(w) for w in weights)
    c = float(period) if tag not in (PC.COULOMB, PC.OSCILLATOR) else 1.0
    A = _root_index(w1, c)
    if tag == PC.COULOMB:
        B = w2
    elif tag == PC.OSCILLATOR:
        B = 2 * math.sqrt(w2) if w2 > 0 else float("nan")
    elif tag == PC.ROSEN_MORSE:
        B = w2 / 2
    elif tag == PC.ECKART:
        B = -w2 / 2
    elif tag == PC.PT_HYP:
        disc = c * c - 4 * w2
        if disc < 0:
            raise ShapeMismatchError(f"sech² weight {w2} admits no real strength")
        B = (-c + math.sqrt(disc)) / 2
    else:
        B = _root_index(w2, c)
    return SuperPotential(tag=tag, period=c, A=A, B=B, offset=w3, l_slope=l_slope)


def _index_slope(e: EffectiveProblem, fit: ClassFit) -> Optional[float]:
    """dA/dl from a second reduction at l + 1."""
    try:
        nxt = liouville_direct(e.radial.model_copy(update={"l": e.l + 1}), e.route)
        fit2 = fit_class(nxt, fit.tag, fit.period)
    except ReductionError:
        return None
    c = fit.period if fit.tag not in (PC.COULOMB, PC.OSCILLATOR) else 1.0
    return _root_index(fit2.weights[0], c) - _root_index(fit.weights[0], c)


def superpotential_for(e: EffectiveProblem, energy: Optional[float] = None) -> SuperPotential:
    """
    Superpotential of an effective problem.

    Args:
        e: Effective problem from reduction
        energy: Required when V_eff contains the energy (two-step route)

    Returns:
        SuperPotential: with H_eff = a⁺a⁻ + e + offset

    Raises:
        ShapeMismatchError: If V_eff matches no class
        SusyError: If a two-step problem is given without an energy
    """
    try:
        fit = classify_effective(e)
    except ReductionError as err:
        raise ShapeMismatchError(str(err)) from err
    if any(fit.slopes) and energy is None and ENERGY_NAME in free_symbols(e.v_effective):
        raise SusyError("the effective potential depends on E; pass the energy")
    weights = np.array(fit.weights) + (energy or 0.0) * np.array(fit.slopes)
    return from_weights(fit.tag, fit.period, weights, _index_slope(e, fit))


# ---------------------------------------------------------------- ladder states

class LadderState(BaseModel):
    """Φⁿ = a⁺(A) a⁺(A₁) … a⁺(A_{n-1}) Φ⁰(A_n), as an expression in y."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int
    expr: Expr
    energy: float
    virtual: bool = False


def ladder_state(sp: SuperPotential, n: int) -> LadderState:
    """
    Build the n-th state by raising the ground state of the n-times shifted partner.

    The derivatives are taken symbolically.
    """
    if n < 0:
        raise SusyError(f"level must be non-negative, got {n}")
    psi = sp.shifted(n).ground_state
    for k in range(n - 1, -1, -1):
        psi = -diff(psi, Y) + sp.shifted(k).W * psi
    return LadderState(n=n, expr=psi, energy=sp.level(n), virtual=sp.virtual(n))


# ---------------------------------------------------------------- named level formulas

def t2_1_levels(alpha, l: int, n: int):
    """Coulomb route of the inverse-square mass: -α²/(4n+2l+3)²; exact for Fractions."""
    return -alpha**2 / (4 * n + 2 * l + 3) ** 2


def t2_1_oscillator_eigenvalue(omega, l: int, n: int):
    """Oscillator route of the same system: the swapped eigenvalue ω(2n + l + 3/2)."""
    return omega * (2 * n + l + Fraction(3, 2))


def t2_10_levels(alpha, kappa, l: int, n: int) -> float:
    N = 2 * l + 3 + 4 * n
    return N**2 * (kappa - math.sqrt(kappa**2 + 1 + (alpha - 4) / N**2))


def t2_9_levels(alpha, kappa, l: int, n: int) -> float:
    N = 2 * l + 3 + 4 * n
    return N**2 * (kappa + math.sqrt(kappa**2 - 1 + (alpha + 4) / N**2))


def t1_10_levels(alpha, kappa, l: int, n: int) -> float:
    M = n + l + 1
    return 4 * M**2 * (kappa - math.sqrt(kappa**2 + 1 + (alpha - 1) / (4 * M**2)))


def t1_9_levels(alpha, kappa, l: int, n: int) -> float:
    M = n + l + 1
    return 4 * M**2 * (kappa + math.sqrt(kappa**2 - 1 + (alpha + 1) / (4 * M**2)))


NamedLevels = Callable[[Mapping[str, float], int, int], float]

NAMED_LEVELS: Dict[str, Tuple[str, NamedLevels]] = {
    "T2.1": ("t2_1_levels", lambda p, l, n: t2_1_levels(p[ALPHA_NAME], l, n)),
    "T2.10": ("t2_10_levels", lambda p, l, n: t2_10_levels(p[ALPHA_NAME], p[KAPPA_NAME], l, n)),
    "T2.9": ("t2_9_levels", lambda p, l, n: t2_9_levels(p[ALPHA_NAME], p[KAPPA_NAME], l, n)),
    "T1.10": ("t1_10_levels", lambda p, l, n: t1_10_levels(p[ALPHA_NAME], p[KAPPA_NAME], l, n)),
    "T1.9": ("t1_9_levels", lambda p, l, n: t1_9_levels(p[ALPHA_NAME], p[KAPPA_NAME], l, n)),
}


class DoubleShapeInvariance(BaseModel):
    """Both factorizations of the inverse-square-mass system, in exact arithmetic."""

    l: int
    n: int
    alpha: Fraction
    omega: Fraction
    coulomb: Fraction
    oscillator: Fraction

    @property
    def agree(self) -> bool:
        return self.coulomb == self.oscillator


def double_shape_invariance(l: int, n: int, alpha) -> DoubleShapeInvariance:
    """
    Coulomb-route level against the oscillator route with ω solved from ω(2n+l+3/2) = -α.

    Raises:
        SusyError: If α >= 0, where neither route has bound states
    """
    alpha = Fraction(alpha)
    if alpha >= 0:
        raise SusyError("both routes need α < 0")
    omega = -alpha / (2 * n + l + Fraction(3, 2))
    return DoubleShapeInvariance(
        l=l,
        n=n,
        alpha=alpha,
        omega=omega,
        coulomb=t2_1_levels(alpha, l, n),
        oscillator=-(omega**2) / 4,
    )


# ---------------------------------------------------------------- spectra

class SpectrumResult(BaseModel):
    """A closed-form level with its provenance."""

    family: str
    params: Dict[str, float]
    l: int
    n: int
    energy: float
    route: Route
    tag: PotentialClass
    formula: Optional[str] = None
    formula_energy: Optional[float] = None
    slack: Optional[float] = None
    virtual: bool = False


def _prepare(family: Union[FamilyId, str], params: Mapping[str, object], l: int, n: int):
    if l < 0 or n < 0:
        raise SusyError(f"quantum numbers must be non-negative, got l={l}, n={n}")
    spectral = [v for v in validate_params(family, params) if v.kind in ("structural", "spectral")]
    if spectral:
        raise ParameterError(f"{family}: " + "; ".join(v.label for v in spectral), violations=spectral)
    entry = get_entry(family)
    classes = entry.route.classes
    if not classes:
        raise SusyError(f"{entry.id} has no discrete spectrum ({entry.route.note})")
    route = Route.DIRECT if Route.DIRECT in classes else Route.TWO_STEP
    system = build_system(entry.id, params)
    return entry, route, reduce_family(system, l, route)


def _level_polynomial(sp0: SuperPotential, fit: ClassFit, eigen: float, n: int) -> Callable[[float], float]:
    """Level condition with the denominators cleared, a polynomial of degree <= 2 in E."""
    K = sp0.shifted(n).A
    w = np.array(fit.weights)
    dw = np.array(fit.slopes)

    def value(E: float) -> float:
        _, w2, c0 = w + E * dw
        if fit.tag == PC.COULOMB:
            return -(w2**2) + 4 * K**2 * (c0 - eigen)
        if fit.tag == PC.OSCILLATOR:
            return (eigen - c0) ** 2 - 4 * w2 * (2 * n + sp0.A + 0.5) ** 2
        if fit.tag == PC.ROSEN_MORSE:
            return K**4 - (w2 / 2) ** 2 + K**2 * (c0 - eigen)
        if fit.tag == PC.ECKART:
            return -(K**4) - (w2 / 2) ** 2 + K**2 * (c0 - eigen)
        raise ShapeMismatchError(f"{fit.tag.value} does not arise on the two-step route")

    return value


def solve_two_step(e: EffectiveProblem, n: int) -> Tuple[float, SuperPotential, Optional[float]]:
    """
    Energy of the n-th state of a swapped problem.

    Returns:
        Tuple: (E, superpotential at E, slack of the square root for the
        trigonometric and hyperbolic classes)

    Raises:
        SusyError: If no root gives a normalizable state
    """
    fit = classify_effective(e)
    if abs(fit.slopes[0]) > 1e-9:
        raise ShapeMismatchError("the singular weight must not depend on E")
    eigen = float(np.real(evaluate(e.eigenvalue, e.radial.params)))
    slope = _index_slope(e, fit)
    sp0 = from_weights(fit.tag, fit.period, fit.weights, slope)
    value = _level_polynomial(sp0, fit, eigen, n)
    grid = np.array([-1.0, 0.0, 1.0])
    coeffs = np.polyfit(grid, [value(E) for E in grid], 2)
    scale = np.max(np.abs(coeffs))
    while len(coeffs) > 1 and abs(coeffs[0]) < 1e-12 * scale:
        coeffs = coeffs[1:]
    roots = [r.real for r in np.roots(coeffs) if abs(r.imag) <= 1e-9 * max(1.0, abs(r))]
    valid = []
    for E in roots:
        sp = from_weights(fit.tag, fit.period, np.array(fit.weights) + E * np.array(fit.slopes), slope)
        if sp.bound(n) and abs(sp.level(n) - eigen) <= 1e-6 * max(1.0, abs(eigen)):
            valid.append((E, sp))
    if not valid:
        raise SusyError(f"no normalizable state n={n} for {e.family}")
    E, sp = min(valid, key=lambda v: v[0]) if fit.tag == PC.ROSEN_MORSE else max(valid, key=lambda v: v[0])
    slack = None
    if len(coeffs) == 3 and fit.tag in (PC.ROSEN_MORSE, PC.ECKART):
        p, q, r = coeffs
        slack = float((q * q - 4 * p * r) / (4 * p * p * sp0.shifted(n).A ** 4))
    logger.debug("%s n=%d: roots %s, chose %.12g", e.family, n, roots, E)
    return float(E), sp, slack


def _solve(family, params, l, n):
    entry, route, e = _prepare(family, params, l, n)
    if route == Route.DIRECT:
        sp = superpotential_for(e)
        if not sp.bound(n):
            raise SusyError(f"no normalizable state n={n} for {entry.id} at {dict(params)}")
        return entry, route, e, sp, sp.level(n), None
    energy, sp, slack = solve_two_step(e, n)
    return entry, route, e, sp, energy, slack


def spectrum(family: Union[FamilyId, str], params: Mapping[str, object], l: int, n: int) -> SpectrumResult:
    """
    Closed-form energy of the state (l, n).

    The direct route is used when the family has one; otherwise the level
    condition of the swapped problem is solved for E. Rosen-Morse families
    take the lower root, the others the larger normalizable one.

    Raises:
        ParameterError: If a structural or spectral condition is violated
        SusyError: If the family or the level has no bound state
    """
    entry, route, e, sp, energy, slack = _solve(family, params, l, n)
    key = str(entry.id)
    floats = {k: float(v) for k, v in params.items()}
    result = SpectrumResult(
        family=key, params=floats, l=l, n=n, energy=energy, route=route, tag=sp.tag,
        slack=slack, virtual=sp.virtual(n),
    )
    if key in NAMED_LEVELS:
        name, formula = NAMED_LEVELS[key]
        result.formula = name
        result.formula_energy = float(formula(floats, l, n))
    return result


# ---------------------------------------------------------------- closed-form states

def class_state(sp: SuperPotential, n: int, y) -> np.ndarray:
    """
    n-th eigenfunction of -d²/dy² + U in terms of special functions.

    Complex for Rosen-Morse, real otherwise.
    """
    y = np.asarray(y, dtype=float)
    A, B, c = sp.A, sp.B, sp.period
    t = c * y
    if sp.tag == PC.COULOMB:
        k = -B / (2 * (A + n))
        return y**A * np.exp(-k * y) * chf_poly(n, 2 * A, 2 * k * y)
    if sp.tag == PC.OSCILLATOR:
        return y**A * np.exp(-B * y**2 / 4) * laguerre(n, A - 0.5, B * y**2 / 2)
    a, b = A / c, B / c
    if sp.tag in (PC.ROSEN_MORSE, PC.ECKART):
        N = a + n
        lam = B / c**2 / N
        if sp.tag == PC.ROSEN_MORSE:
            z = 1j / np.tan(t)
            return np.sin(t) ** N * np.exp(lam * t) * jacobi(n, -N - 1j * lam, -N + 1j * lam, z)
        return np.sinh(t) ** N * np.exp(-lam * t) * jacobi(n, lam - N, -lam - N, 1 / np.tanh(t))
    if sp.tag == PC.PT_HYP:
        return np.sinh(t) ** a * np.cosh(t) ** (-b) * jacobi(n, a - 0.5, -b - 0.5, np.cosh(2 * t))
    return np.sin(t) ** a * np.cos(t) ** b * jacobi(n, a - 0.5, b - 0.5, np.cos(2 * t))


def class_argument(sp: SuperPotential, y) -> np.ndarray:
    """Argument of the polynomial factor in class_state."""
    y = np.asarray(y, dtype=float)
    t = sp.period * y
    if sp.tag == PC.COULOMB:
        k = -sp.B / (2 * sp.A)
        return 2 * k * y
    if sp.tag == PC.OSCILLATOR:
        return sp.B * y**2 / 2
    if sp.tag == PC.ROSEN_MORSE:
        return 1j / np.tan(t)
    if sp.tag == PC.ECKART:
        return 1 / np.tanh(t)
    return np.cosh(2 * t) if sp.tag == PC.PT_HYP else np.cos(2 * t)


def _reference_y(e: EffectiveProblem, points: int = 64) -> np.ndarray:
    lo, hi = e.domain_y
    if math.isinf(lo):
        lo = -5.0
    if math.isinf(hi):
        hi = lo + 5.0
    span = hi - lo
    return np.linspace(lo + 0.02 * span, hi - 0.02 * span, points)


class ClosedFormState(BaseModel):
    """
    A bound state φ(x) = f^(1/4) Φ(y(x)) with its energy.

    On the two-step route f is the swapped mass; φ solves the original radial
    equation at ``energy`` as well.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    family: str
    params: Dict[str, float]
    l: int
    n: int
    energy: float
    route: Route
    tag: PotentialClass
    aux: Dict[str, float]
    virtual: bool = False

    _effective: EffectiveProblem = PrivateAttr()
    _sp: SuperPotential = PrivateAttr()
    _phase: complex = PrivateAttr(default=1.0)

    @property
    def effective(self) -> EffectiveProblem:
        return self._effective

    @property
    def superpotential(self) -> SuperPotential:
        return self._sp

    @property
    def problem(self):
        """The radial problem of the system itself, solved by ``radial`` at ``energy``."""
        e = self._effective
        return e.swapped.original if e.swapped is not None else e.radial

    @property
    def domain(self) -> Tuple[float, float]:
        return self._effective.domain_x

    def phi_y(self, y) -> np.ndarray:
        """Real representative of Φ in the Liouville variable."""
        values = class_state(self._sp, self.n, y)
        return np.real(values / self._phase)

    def complex_phi_y(self, y) -> np.ndarray:
        return np.asarray(class_state(self._sp, self.n, y), dtype=complex)

    def argument(self, x) -> np.ndarray:
        """Polynomial argument as a function of x."""
        return class_argument(self._sp, self._effective.y_at(np.asarray(x, dtype=float)))

    def radial(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        e = self._effective
        mass = e.radial.coefficients().f(x)
        return np.abs(mass) ** 0.25 * self.phi_y(e.y_at(x))

    __call__ = radial


def eigenfunction(family: Union[FamilyId, str], params: Mapping[str, object], l: int, n: int) -> ClosedFormState:
    """
    Closed-form radial state (l, n) of a family.

    Raises:
        ParameterError: As spectrum
        SusyError: As spectrum
    """
    entry, route, e, sp, energy, _ = _solve(family, params, l, n)
    s = sp.shifted(n)
    aux = {"index": s.A, "strength": s.B, "period": sp.period}
    if sp.tag in (PC.ROSEN_MORSE, PC.ECKART):
        aux["lambda"] = sp.B / sp.period**2 / (s.A / sp.period)
    state = ClosedFormState(
        family=str(entry.id),
        params={k: float(v) for k, v in params.items()},
        l=l, n=n, energy=energy, route=route, tag=sp.tag, aux=aux, virtual=sp.virtual(n),
    )
    state._effective = e
    state._sp = sp
    if sp.tag == PC.ROSEN_MORSE:
        ref = np.asarray(class_state(sp, n, _reference_y(e)), dtype=complex)
        peak = ref[np.argmax(np.abs(ref))]
        state._phase = peak / abs(peak)
    return state


def normalize(state: ClosedFormState, grid) -> np.ndarray:
    """
    State samples on the grid nodes scaled to unit norm under the weight 1/f.

    Args:
        state: Closed-form state
        grid: numsolve.Grid inside the state's domain

    Returns:
        np.ndarray: φ at the nodes with ⟨φ|φ⟩ = 1
    """
    x = grid.nodes()
    values = state.radial(x)
    weight = 1.0 / np.abs(state.effective.radial.coefficients().f(x))
    norm = inner_product(values, values, weight, grid)
    if norm <= 0:
        raise SusyError("state has zero norm on this grid")
    return values / math.sqrt(norm)
