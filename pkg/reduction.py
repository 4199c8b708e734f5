"""
From the 3d Hamiltonian to one-dimensional problems.

radial_reduce gives the radial equation -f φ'' + (f l(l+1)/x² + V) φ = E φ
with weight 1/f. liouville_direct turns it into -Φ'' + V_eff(y) Φ = E Φ
with dy/dx = f^(-1/2) and φ = f^(1/4) Φ. two_step swaps the roles of the
coupling α and the energy E before the Liouville map.
"""

import logging
import math
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from catalog import (
    EffectiveClass,
    PotentialClass,
    Route,
    SystemSpec,
    UnknownFamilyError,
    compact_to_tilde,
    get_entry,
)
from symexpr import (
    ALPHA,
    ALPHA_NAME,
    ENERGY,
    ENERGY_NAME,
    ONE,
    X,
    Y,
    Expr,
    PoleError,
    arctan,
    arctanh,
    as_expr,
    diff,
    equivalent,
    evaluate,
    exp,
    free_symbols,
    log,
    sample_points,
    sqrt,
    substitute,
    tan,
    tanh,
)

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]
INF = float("inf")


class ReductionError(Exception):
    """A reduction step does not apply to the given problem."""


# ---------------------------------------------------------------- radial problem

class RadialCoefficients(NamedTuple):
    """Numeric callables of x for the finite-difference pencil."""

    f: Callable[[np.ndarray], np.ndarray]
    V: Callable[[np.ndarray], np.ndarray]
    potential: Callable[[np.ndarray], np.ndarray]
    weight: Callable[[np.ndarray], np.ndarray]


class RadialProblem(BaseModel):
    """
    -f φ'' + (f l(l+1)/x² + V) φ = E φ on one domain component.

    V may contain the energy parameter ``E`` (swapped problems); ``eigenvalue``
    is then the constant the operator's eigenvalue must equal.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    family: Optional[str] = None
    f: Expr
    V: Expr
    l: int = Field(ge=0)
    domain: Interval = (0.0, INF)
    params: Dict[str, float] = Field(default_factory=dict)
    eigenvalue: Expr = ENERGY

    @property
    def centrifugal(self) -> Expr:
        return self.f * (self.l * (self.l + 1)) / X**2

    @property
    def potential_term(self) -> Expr:
        return self.centrifugal + self.V

    @property
    def weight(self) -> Expr:
        return ONE / self.f

    def bind(self, x, energy: Optional[float] = None) -> Dict[str, object]:
        env: Dict[str, object] = dict(self.params)
        env["x"] = x
        if energy is not None:
            env[ENERGY_NAME] = energy
        return env

    def coefficients(self, energy: Optional[float] = None) -> RadialCoefficients:
        """Vectorized f, V, f l(l+1)/x² + V and 1/f."""

        def numeric(e: Expr):
            def at(x):
                values = np.real(np.asarray(evaluate(e, self.bind(x, energy)), dtype=complex))
                return np.broadcast_to(values, np.shape(x)).astype(float)

            return at

        return RadialCoefficients(
            f=numeric(self.f),
            V=numeric(self.V),
            potential=numeric(self.potential_term),
            weight=numeric(self.weight),
        )

    def residual(self, phi: Expr, energy, points: int = 50, seed: int = 0) -> float:
        """
        Max relative residual of the radial equation for a state given as an expression.

        Each point is scaled by |f φ''| + |(f l(l+1)/x² + V) φ| + |E φ|.
        """
        phi = as_expr(phi)
        lo, hi = sample_range(self.domain)
        x = sample_points(points, seed, low=lo, high=hi)["x"]
        env = self.bind(x, energy if isinstance(energy, (int, float)) else None)
        kinetic = -self.f * diff(diff(phi, X), X)
        try:
            k = evaluate(kinetic, env)
            p = evaluate(self.potential_term * phi, env)
            e = evaluate(as_expr(energy) * phi, env)
        except PoleError as err:
            raise ReductionError(f"state has a pole at a sample point: {err.subexpr!r}") from err
        total = np.abs(k + p - e)
        scale = np.abs(k) + np.abs(p) + np.abs(e) + 1e-300
        return float(np.max(total / scale))


def sample_range(domain: Interval) -> Interval:
    lo, hi = domain
    if math.isinf(hi):
        return lo + 0.2, lo + 3.0
    if math.isinf(lo):
        return hi - 3.0, hi - 0.2
    span = hi - lo
    return lo + 0.05 * span, hi - 0.05 * span


def first_component(singular_radii: List[float], upper: float = INF) -> Interval:
    """(0, first singular radius) clipped to ``upper``."""
    inner = [r for r in singular_radii if 0.0 < r < upper]
    return (0.0, min(inner) if inner else upper)


def radial_reduce(s: SystemSpec, l: int, domain: Optional[Interval] = None) -> RadialProblem:
    """
    Radial equation of a system for angular momentum l.

    Args:
        s: The system
        l: Angular momentum, l >= 0
        domain: x-interval; defaults to the component next to the origin

    Returns:
        RadialProblem: with φ(0) = 0 and normalizability at the right end
    """
    if l < 0:
        raise ReductionError(f"angular momentum must be non-negative, got {l}")
    return RadialProblem(
        family=str(s.family),
        f=s.f,
        V=s.V,
        l=l,
        domain=domain or first_component(s.singular_radii),
        params=s.bindings(),
    )


# ---------------------------------------------------------------- Liouville maps

class YMap(BaseModel):
    """Closed-form y(x) with dy/dx = ±f^(-1/2), and its inverse."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mass: Expr
    y: Expr
    x_of_y: Expr
    domain_x: Interval
    domain_y: Interval
    orientation: int = 1


HALF_PI = math.pi / 2

MASS_MAPS: List[YMap] = [
    YMap(mass=ONE, y=X, x_of_y=Y, domain_x=(0.0, INF), domain_y=(0.0, INF)),
    YMap(mass=X, y=2 * sqrt(X), x_of_y=Y**2 / 4, domain_x=(0.0, INF), domain_y=(0.0, INF)),
    YMap(mass=X**2, y=log(X), x_of_y=exp(Y), domain_x=(0.0, INF), domain_y=(-INF, INF)),
    YMap(mass=X**3, y=2 / sqrt(X), x_of_y=4 / Y**2, domain_x=(0.0, INF), domain_y=(0.0, INF), orientation=-1),
    YMap(mass=X**4, y=ONE / X, x_of_y=ONE / Y, domain_x=(0.0, INF), domain_y=(0.0, INF), orientation=-1),
    YMap(mass=X**6, y=ONE / (2 * X**2), x_of_y=ONE / sqrt(2 * Y), domain_x=(0.0, INF), domain_y=(0.0, INF),
         orientation=-1),
    YMap(mass=ONE / X**2, y=X**2 / 2, x_of_y=sqrt(2 * Y), domain_x=(0.0, INF), domain_y=(0.0, INF)),
    YMap(mass=X * (X - 1) ** 2, y=2 * arctanh(sqrt(X)), x_of_y=tanh(Y / 2) ** 2,
         domain_x=(0.0, 1.0), domain_y=(0.0, INF)),
    YMap(mass=X * (X + 1) ** 2, y=2 * arctan(sqrt(X)), x_of_y=tan(Y / 2) ** 2,
         domain_x=(0.0, INF), domain_y=(0.0, math.pi)),
    YMap(mass=(1 + X**2) ** 2, y=arctan(X), x_of_y=tan(Y), domain_x=(0.0, INF), domain_y=(0.0, HALF_PI)),
    YMap(mass=(1 - X**2) ** 2, y=arctanh(X), x_of_y=tanh(Y), domain_x=(0.0, 1.0), domain_y=(0.0, INF)),
    YMap(mass=(X**4 - 1) ** 2 / X**2, y=arctanh(X**2) / 2, x_of_y=sqrt(tanh(2 * Y)),
         domain_x=(0.0, 1.0), domain_y=(0.0, INF)),
    YMap(mass=(X**4 + 1) ** 2 / X**2, y=arctan(X**2) / 2, x_of_y=sqrt(tan(2 * Y)),
         domain_x=(0.0, INF), domain_y=(0.0, HALF_PI / 2)),
]


def find_map(f: Expr, params: Optional[Dict[str, float]] = None) -> Optional[YMap]:
    """The closed-form map whose mass matches f, if any."""
    for ymap in MASS_MAPS:
        try:
            if equivalent(f, ymap.mass, params=params, avoid=[1.0]):
                return ymap
        except PoleError:
            continue
    return None


def _map_end(ymap: YMap, x: float) -> float:
    """y at an endpoint of the x-domain; the map's own ends use the limits."""
    first, last = ymap.domain_y if ymap.orientation > 0 else ymap.domain_y[::-1]
    if x == ymap.domain_x[0]:
        return first
    if x == ymap.domain_x[1]:
        return last
    return float(np.real(evaluate(ymap.y, {"x": x})))


def _clip(domain: Interval, inner: Interval) -> Interval:
    return (max(domain[0], inner[0]), min(domain[1], inner[1]))


class EffectiveProblem(BaseModel):
    """
    -Φ'' + V_eff Φ = eigenvalue · Φ in the Liouville variable y.

    ``v_effective`` is written in x; ``v_effective_y`` in y when the
    inverse map is closed-form. Without a closed form the maps are tabulated
    by quadrature and inverted by monotone interpolation.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    family: Optional[str] = None
    route: Route = Route.DIRECT
    radial: RadialProblem
    y_of_x: Optional[Expr] = None
    x_of_y: Optional[Expr] = None
    domain_x: Interval
    domain_y: Interval
    orientation: int = 1
    v_effective: Expr
    v_effective_y: Optional[Expr] = None
    swapped: Optional["SwappedProblem"] = None

    _table: Optional[Tuple[np.ndarray, np.ndarray]] = PrivateAttr(default=None)

    @property
    def l(self) -> int:
        return self.radial.l

    @property
    def mass(self) -> Expr:
        return self.radial.f

    @property
    def eigenvalue(self) -> Expr:
        return self.radial.eigenvalue

    def y_at(self, x) -> np.ndarray:
        if self.y_of_x is not None:
            return np.real(evaluate(self.y_of_x, self.radial.bind(np.asarray(x, dtype=float))))
        xs, ys = self._table
        return PchipInterpolator(xs, ys)(x)

    def x_at(self, y) -> np.ndarray:
        if self.x_of_y is not None:
            env = dict(self.radial.params)
            env["y"] = np.asarray(y, dtype=float)
            return np.real(evaluate(self.x_of_y, env))
        xs, ys = self._table
        order = np.argsort(ys)
        return PchipInterpolator(ys[order], xs[order])(y)

    def v_eff_at(self, y, energy: Optional[float] = None) -> np.ndarray:
        """V_eff at y-values (through x(y))."""
        x = self.x_at(y)
        values = np.real(np.asarray(evaluate(self.v_effective, self.radial.bind(x, energy)), dtype=complex))
        return np.broadcast_to(values, np.shape(x))


def effective_potential(f: Expr, V: Expr, l: int) -> Expr:
    """V + f (l(l+1)/x² - g² - g') with g = f'/(4f)."""
    g = diff(f, X) / (4 * f)
    return V + f * ((l * (l + 1)) / X**2 - g**2 - diff(g, X))


def _quadrature_table(r: RadialProblem, domain: Interval, nodes: int = 400) -> Tuple[np.ndarray, np.ndarray]:
    lo = max(domain[0], 1e-6)
    hi = min(domain[1], 50.0) if math.isinf(domain[1]) else domain[1] * (1 - 1e-6)
    xs = np.geomspace(lo, hi, nodes) if hi / lo > 100 else np.linspace(lo, hi, nodes)
    fnum = r.coefficients().f

    def integrand(t):
        return 1.0 / math.sqrt(float(np.real(fnum(np.array([t]))[0])))

    ys = np.zeros_like(xs)
    for i in range(1, len(xs)):
        piece, _ = quad(integrand, xs[i - 1], xs[i], epsabs=1e-10, epsrel=1e-10)
        ys[i] = ys[i - 1] + piece
    return xs, ys


def _check_positive(r: RadialProblem, domain: Interval):
    lo, hi = sample_range(domain)
    x = sample_points(64, 1, low=lo, high=hi, avoid=[1.0])["x"]
    values = r.coefficients().f(x)
    if np.any(values <= 0):
        raise ReductionError(f"f is not positive on {domain}; use the two-step route")


def liouville_direct(r: RadialProblem, route: Route = Route.DIRECT) -> EffectiveProblem:
    """
    Liouville transform of a radial problem.

    Args:
        r: Radial problem with f > 0 on its domain
        route: Recorded on the result

    Returns:
        EffectiveProblem: with a closed-form y(x) for catalog masses

    Raises:
        ReductionError: If f vanishes or changes sign inside the domain
    """
    ymap = find_map(r.f, r.params)
    domain = r.domain if ymap is None else _clip(r.domain, ymap.domain_x)
    _check_positive(r, domain)
    v_eff = effective_potential(r.f, r.V, r.l)
    if ymap is None:
        logger.debug("no closed-form map for f = %r, tabulating y(x)", r.f)
        xs, ys = _quadrature_table(r, domain)
        problem = EffectiveProblem(
            family=r.family, route=route, radial=r, domain_x=domain,
            domain_y=(0.0, float(ys[-1])), v_effective=v_eff,
        )
        problem._table = (xs, ys)
        return problem
    ends = [_map_end(ymap, v) for v in domain]
    domain_y = (min(ends), max(ends))
    return EffectiveProblem(
        family=r.family,
        route=route,
        radial=r,
        y_of_x=ymap.y,
        x_of_y=ymap.x_of_y,
        domain_x=domain,
        domain_y=domain_y,
        orientation=ymap.orientation,
        v_effective=v_eff,
        v_effective_y=substitute(v_eff, {"x": ymap.x_of_y}),
    )


def check_map(e: EffectiveProblem, points: int = 50, seed: int = 0, tol: float = 1e-9) -> bool:
    """dy/dx · √f = orientation at random interior points."""
    if e.y_of_x is None:
        return True
    lo, hi = sample_range(e.domain_x)
    x = sample_points(points, seed, low=lo, high=hi)["x"]
    slope = evaluate(diff(e.y_of_x, X) * sqrt(e.mass), e.radial.bind(x))
    return bool(np.all(np.abs(slope - e.orientation) < tol))


def radial_from_effective(Phi: Expr, e: EffectiveProblem) -> Expr:
    """φ(x) = f^(1/4) Φ(y(x)) for Φ written in y."""
    if e.y_of_x is None:
        raise ReductionError("no closed-form y(x) to substitute")
    return e.mass ** (ONE / 4) * substitute(Phi, {"y": e.y_of_x})


# ---------------------------------------------------------------- two-step

class SwappedProblem(BaseModel):
    """
    The radial equation multiplied by σα/V.

    f̃ = σαf/V, Ṽ = -σαE/V and eigenvalue -σα; σ = ±1 makes f̃ > 0.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    original: RadialProblem
    sigma: int
    f_tilde: Expr
    v_swap: Expr
    eigenvalue: Expr

    def as_radial(self, domain: Optional[Interval] = None) -> RadialProblem:
        return self.original.model_copy(update={
            "f": self.f_tilde,
            "V": self.v_swap,
            "domain": domain or self.original.domain,
            "eigenvalue": self.eigenvalue,
        })

    def consistency_residual(self, points: int = 50, seed: int = 0) -> float:
        """V/(σα) times the swapped operator minus the original one, at random x and E."""
        o = self.original
        alpha = as_expr(self.sigma) * ALPHA
        scale = o.V / alpha
        lhs_f = scale * self.f_tilde
        lhs_p = scale * (self.f_tilde * (o.l * (o.l + 1)) / X**2 + self.v_swap - self.eigenvalue)
        rhs_p = o.potential_term - ENERGY
        lo, hi = sample_range(o.domain)
        env = o.bind(sample_points(points, seed, low=lo, high=hi)["x"])
        env[ENERGY_NAME] = np.random.default_rng(seed).uniform(-3, 3, points)
        gap_f = np.abs(evaluate(lhs_f - o.f, env)) / np.maximum(1, np.abs(evaluate(o.f, env)))
        gap_p = np.abs(evaluate(lhs_p - rhs_p, env)) / np.maximum(1, np.abs(evaluate(rhs_p, env)))
        return float(max(gap_f.max(), gap_p.max()))


EffectiveProblem.model_rebuild()


def two_step(r: RadialProblem) -> SwappedProblem:
    """
    Swap the roles of α and E.

    Raises:
        ReductionError: If V vanishes identically or α is not bound
    """
    if ALPHA_NAME not in r.params:
        raise ReductionError("the two-step route needs a bound coupling α")
    lo, hi = sample_range(r.domain)
    x = sample_points(64, 0, low=lo, high=hi, avoid=[1.0])["x"]
    V = np.real(np.asarray(evaluate(r.V, r.bind(x)), dtype=complex))
    if np.all(np.abs(V) < 1e-14):
        raise ReductionError("V vanishes identically; nothing to swap")
    alpha = ALPHA
    ratio = alpha * r.f / r.V
    probe = np.real(np.asarray(evaluate(ratio, r.bind(x)), dtype=complex))
    probe = probe[np.isfinite(probe)]
    sigma = 1 if np.median(probe) > 0 else -1
    f_tilde = sigma * ratio
    ymap = find_map(f_tilde, r.params)
    if ymap is not None:
        f_tilde = ymap.mass
    logger.debug("two-step: sigma = %d, f~ = %r", sigma, f_tilde)
    return SwappedProblem(
        original=r,
        sigma=sigma,
        f_tilde=f_tilde,
        v_swap=-sigma * alpha * ENERGY / r.V,
        eigenvalue=-sigma * alpha,
    )


def swapped_effective(sp: SwappedProblem, domain: Optional[Interval] = None) -> EffectiveProblem:
    """Liouville transform of the swapped problem."""
    eff = liouville_direct(sp.as_radial(domain), Route.TWO_STEP)
    return eff.model_copy(update={"swapped": sp})


# ---------------------------------------------------------------- catalog routes

def route_class(family: str, route: Route) -> EffectiveClass:
    entry = get_entry(family)
    try:
        return entry.route.classes[route]
    except KeyError:
        raise ReductionError(f"{entry.id} has no {route.value} route") from None


def reduce_family(s: SystemSpec, l: int, route: Route = Route.DIRECT) -> EffectiveProblem:
    """
    Radial reduction and Liouville map along a catalog route.

    The direct route works on the component next to the origin; the
    two-step route on the domain of its effective class.
    """
    cls = route_class(str(s.family), route)
    if route == Route.DIRECT:
        r = radial_reduce(s, l, first_component(s.singular_radii, cls.domain[1]))
        return liouville_direct(r, Route.DIRECT)
    r = radial_reduce(s, l, tuple(cls.domain))
    return swapped_effective(two_step(r))


# ---------------------------------------------------------------- classification

def _class_basis(tag: PotentialClass, c: float, y: np.ndarray) -> np.ndarray:
    t = c * y
    one = np.ones_like(y)
    if tag == PotentialClass.COULOMB:
        cols = [1 / y**2, 1 / y, one]
    elif tag == PotentialClass.OSCILLATOR:
        cols = [1 / y**2, y**2, one]
    elif tag == PotentialClass.ROSEN_MORSE:
        cols = [1 / np.sin(t) ** 2, 1 / np.tan(t), one]
    elif tag == PotentialClass.ECKART:
        cols = [1 / np.sinh(t) ** 2, 1 / np.tanh(t), one]
    elif tag == PotentialClass.PT_HYP:
        cols = [1 / np.sinh(t) ** 2, 1 / np.cosh(t) ** 2, one]
    else:
        cols = [1 / np.sin(t) ** 2, 1 / np.cos(t) ** 2, one]
    return np.stack(cols, axis=1)


class ClassFit(BaseModel):
    """
    Effective potential as a·(singular term) + b·(second term) + c0.

    For swapped problems each weight is affine in E: weight + E·slope.
    """

    tag: PotentialClass
    period: float
    weights: Tuple[float, float, float]
    slopes: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    residual: float


def _sample_y(e: EffectiveProblem, c: float, points: int, seed: int) -> np.ndarray:
    lo, hi = e.domain_y
    if math.isinf(hi):
        hi = lo + 4.0 / max(c, 1.0) if not math.isinf(lo) else 4.0
    if math.isinf(lo):
        lo = hi - 4.0
    rng = np.random.default_rng(seed)
    return np.sort(rng.uniform(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo), points))


def fit_class(e: EffectiveProblem, tag: PotentialClass, period: float = 1.0, points: int = 40, seed: int = 3) -> ClassFit:
    y = _sample_y(e, period, points, seed)
    M = _class_basis(tag, period, y)
    has_energy = ENERGY_NAME in free_symbols(e.v_effective)
    v0 = e.v_eff_at(y, 0.0 if has_energy else None)
    w0, *_ = np.linalg.lstsq(M, v0, rcond=None)
    res = np.linalg.norm(M @ w0 - v0) / max(1.0, np.linalg.norm(v0))
    slopes = np.zeros(3)
    if has_energy:
        v1 = e.v_eff_at(y, 1.0)
        w1, *_ = np.linalg.lstsq(M, v1, rcond=None)
        res = max(res, np.linalg.norm(M @ w1 - v1) / max(1.0, np.linalg.norm(v1)))
        slopes = w1 - w0
    return ClassFit(tag=tag, period=period, weights=tuple(w0), slopes=tuple(slopes), residual=float(res))


def classify_effective(
    e: EffectiveProblem,
    tag: Optional[PotentialClass] = None,
    period: Optional[float] = None,
    tol: float = 1e-7,
) -> ClassFit:
    """
    Shape-invariant class of an effective potential.

    With a catalog family the route's class is tried first; otherwise every
    class is fitted with the given period (default 1) and the best fit wins.

    Raises:
        ReductionError: If no class fits within ``tol``
    """
    candidates: List[Tuple[PotentialClass, float]] = []
    if tag is not None:
        candidates.append((tag, period or 1.0))
    elif e.family is not None:
        try:
            cls = get_entry(e.family).route.classes.get(e.route)
        except UnknownFamilyError:
            cls = None
        if cls is not None:
            candidates.append((cls.tag, float(cls.period)))
    if not candidates:
        candidates = [(t, period or 1.0) for t in PotentialClass]
    fits = [fit_class(e, t, c) for t, c in candidates]
    best = min(fits, key=lambda fit: fit.residual)
    if best.residual > tol:
        raise ReductionError(
            f"effective potential matches no shape-invariant class (best {best.tag.value}, residual {best.residual:.2e})"
        )
    logger.debug("classified %s as %s, weights %s", e.family, best.tag.value, best.weights)
    return best


# ---------------------------------------------------------------- equivalence maps

class Equivalence(BaseModel):
    """rotation, scaling (ω), inversion, shift (C) or multiplier (c)."""

    kind: str
    value: float = 1.0


class TransformedSystem(BaseModel):
    """A transformed system and the map E -> scale·E + shift of its levels."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    system: SystemSpec
    transform: Equivalence
    energy_scale: float = 1.0
    energy_shift: float = 0.0

    def map_energy(self, energy: float) -> float:
        return self.energy_scale * energy + self.energy_shift


def apply_equivalence(s: SystemSpec, t: Equivalence) -> TransformedSystem:
    """
    Apply one equivalence transformation.

    Raises:
        ReductionError: For a zero scale or multiplier, or an unknown kind
    """
    f, V = s.f, s.V
    scale, shift = 1.0, 0.0
    radii = list(s.singular_radii)
    if t.kind == "rotation":
        pass
    elif t.kind == "scaling":
        if t.value == 0:
            raise ReductionError("scaling factor must be non-zero")
        w = as_expr(abs(t.value))
        f = substitute(f, {"x": w * X}) / w**2
        V = substitute(V, {"x": w * X})
        radii = sorted(r / abs(t.value) for r in radii)
    elif t.kind == "inversion":
        f = X**4 * substitute(f, {"x": ONE / X})
        V = substitute(V, {"x": ONE / X})
        radii = sorted(1 / r for r in radii if r > 0)
    elif t.kind == "shift":
        V = V + as_expr(t.value)
        shift = t.value
    elif t.kind == "multiplier":
        if t.value == 0:
            raise ReductionError("multiplier must be non-zero")
        f = as_expr(t.value) * f
        V = as_expr(t.value) * V
        scale = t.value
    else:
        raise ReductionError(f"unknown equivalence '{t.kind}'")
    moved = s.model_copy(update={
        "f": f,
        "V": V,
        "potential_tilde": compact_to_tilde(f, V),
        "singular_radii": radii,
    })
    return TransformedSystem(system=moved, transform=t, energy_scale=scale, energy_shift=shift)
