"""
Catalog of rotationally invariant position-dependent-mass systems.

Holds the four systems with extended first-order symmetry, the ten systems
with vector integrals of motion and the ten with pseudotensor
integrals. Each entry stores the compact-form inverse mass f and
potential V, the printed integral of motion together with a structured recipe
for assembling it, the solution routes and the parameter constraints.
"""

import json
import logging
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from symexpr import (
    ALPHA,
    ALPHA_NAME,
    KAPPA,
    KAPPA_NAME,
    ONE,
    X,
    ZERO,
    Expr,
    diff,
    equivalent,
    to_infix,
    to_sexpr,
)

logger = logging.getLogger(__name__)

ParamValue = Union[Fraction, float]

SLACK = 1e-12


class CatalogError(Exception):
    """Base error of the catalog."""


class UnknownFamilyError(CatalogError):
    """The family identifier does not name a catalog entry."""


class ParameterError(CatalogError):
    """Parameters are structurally wrong or violate an enforced constraint."""

    def __init__(self, message: str, violations: Optional[List["Violation"]] = None):
        super().__init__(message)
        self.violations = violations or []


class Source(str, Enum):
    FIRST_ORDER = "F"
    VECTOR = "T1"
    PSEUDOTENSOR = "T2"


class FamilyId(BaseModel):
    """Catalog key: ``F.1``-``F.4``, ``T1.1``-``T1.10``, ``T2.1``-``T2.10``."""

    model_config = ConfigDict(frozen=True)

    source: Source
    item: int

    @field_validator("item")
    @classmethod
    def _item_range(cls, value: int, info) -> int:
        source = info.data.get("source")
        top = 4 if source == Source.FIRST_ORDER else 10
        if not 1 <= value <= top:
            raise ValueError(f"item must be in 1..{top}")
        return value

    @classmethod
    def parse(cls, text: str) -> "FamilyId":
        """
        Parse a family identifier such as ``T2.10`` or ``F.3``.

        Raises:
            UnknownFamilyError: If the text is not a valid identifier
        """
        raw = text.strip().upper()
        prefix, _, number = raw.partition(".")
        try:
            return cls(source=Source(prefix), item=int(number))
        except ValueError as e:
            raise UnknownFamilyError(f"unknown family '{text}'") from e

    def __str__(self) -> str:
        return f"{self.source.value}.{self.item}"


class Route(str, Enum):
    DIRECT = "direct"
    TWO_STEP = "two_step"


class PotentialClass(str, Enum):
    COULOMB = "Coulomb"
    OSCILLATOR = "Oscillator3d"
    ECKART = "Eckart"
    ROSEN_MORSE = "RosenMorseTrig"
    PT_HYP = "PoschlTellerHyp"
    PT_TRIG = "PoschlTellerTrig"


class EffectiveClass(BaseModel):
    """Shape-invariant class produced by one route, with its y-period constant."""

    model_config = ConfigDict(frozen=True)

    tag: PotentialClass
    period: Fraction = Fraction(1)
    domain: Tuple[float, float] = (0.0, float("inf"))


class SolutionRoute(BaseModel):
    """Solution-approach and effective-potential columns of the tables."""

    model_config = ConfigDict(frozen=True)

    approach: str  # Direct | TwoStep | Both | None
    printed: str
    classes: Dict[Route, EffectiveClass] = Field(default_factory=dict)
    note: str = ""


class IntegralTerm(BaseModel):
    """
    One printed term of an integral of motion.

    Kinds (``x_s`` is x_a for vector and x_a x_b for tensor selectors):
        op          a single first-order operator (first-order families)
        sum_anti    sum over b of {A_ab or A_b, B_b} with ops (A, B)
        anti_h      {H, x_s g}
        sel_mult    multiplication by x_s g
        prod        A_a A_b
        anti_pair   {A_a, A_b}
        anti_pgp    {p_c g p_c, x_s h}

    Inside integrals N_b^± stands for K_b ± p_b and J_ab for x_b p_a − x_a p_b.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: str
    ops: Tuple[str, ...] = ()
    weight: Fraction = Fraction(1)
    factor: Optional[Expr] = None
    factor2: Optional[Expr] = None


class Violation(BaseModel):
    label: str
    kind: str
    citation: str


class Constraint(BaseModel):
    """A parameter condition; ``check`` returns True when satisfied."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    label: str
    kind: str  # structural | classification | spectral
    citation: str
    check: Callable[[Mapping[str, ParamValue]], bool]


class FamilyEntry(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    id: FamilyId
    f: Expr
    V: Optional[Expr] = None
    potential_tilde: Optional[Expr] = None
    uses_alpha: bool = True
    uses_kappa: bool = False
    integral_kind: str  # first_order | vector | tensor
    integral_text: str
    integral_terms: Tuple[IntegralTerm, ...]
    # set when the commuting operator differs from the printed one
    entered_text: str = ""
    route: SolutionRoute
    constraints: Tuple[Constraint, ...] = ()
    citation: str
    singular: Callable[[Mapping[str, float]], List[float]]


class SystemSpec(BaseModel):
    """One catalogued system at concrete parameter values."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    family: FamilyId
    params: Dict[str, ParamValue]
    f: Expr
    potential_tilde: Expr
    V: Expr
    constraints: List[str]
    singular_radii: List[float]

    def bindings(self) -> Dict[str, float]:
        """Parameter values as floats, ready for ``symexpr.evaluate``."""
        return {k: float(v) for k, v in self.params.items()}


# ---------------------------------------------------------------- helpers

def compact_to_tilde(f: Expr, V: Expr) -> Expr:
    """Laplacian-form potential from the compact-form potential."""
    fp = diff(f, X)
    fpp = diff(fp, X)
    return V - (fp / X + fpp / 2 - fp**2 / (4 * f))


def tilde_to_compact(f: Expr, potential_tilde: Expr) -> Expr:
    """Compact-form potential V from the Laplacian-form potential."""
    fp = diff(f, X)
    fpp = diff(fp, X)
    return potential_tilde + fp / X + fpp / 2 - fp**2 / (4 * f)


def _exact(value) -> ParamValue:
    if isinstance(value, bool):
        raise ParameterError("parameters must be numbers")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    raise ParameterError(f"parameter value {value!r} is not a real number")


def _greater(a: ParamValue, b: ParamValue) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a > b
    return float(a) > float(b) - SLACK


def _at_least(a: ParamValue, b: ParamValue) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a >= b
    return float(a) >= float(b) - SLACK


def _not_unit(k: ParamValue) -> bool:
    if isinstance(k, Fraction):
        return abs(k) != 1
    return abs(abs(k) - 1.0) > SLACK


def _positive_roots(coeffs) -> List[float]:
    roots = np.roots(coeffs)
    out = []
    for r in roots:
        if abs(r.imag) < 1e-12 and r.real > 1e-12:
            out.append(float(r.real))
    return out


def _dedupe(values) -> List[float]:
    out: List[float] = []
    for v in sorted(values):
        if not out or abs(v - out[-1]) > 1e-12:
            out.append(v)
    return out


def _none(_: Mapping[str, float]) -> List[float]:
    return []


def _unit(_: Mapping[str, float]) -> List[float]:
    return [1.0]


def _t1_9_radii(p):
    return _dedupe([1.0] + _positive_roots([1.0, -2.0 * p[KAPPA_NAME], 1.0]))


def _t1_10_radii(p):
    return _dedupe(_positive_roots([1.0, -2.0 * p[KAPPA_NAME], -1.0]))


def _t2_9_radii(p):
    squares = _positive_roots([1.0, -2.0 * p[KAPPA_NAME], 1.0])
    return _dedupe([1.0] + [float(np.sqrt(s)) for s in squares])


def _t2_10_radii(p):
    squares = _positive_roots([1.0, -2.0 * p[KAPPA_NAME], -1.0])
    return _dedupe([float(np.sqrt(s)) for s in squares])


def _term(kind, *ops, weight=1, factor=None, factor2=None) -> IntegralTerm:
    return IntegralTerm(kind=kind, ops=ops, weight=Fraction(weight), factor=factor, factor2=factor2)


def _direct(tag, period=1, domain=(0.0, float("inf"))) -> Dict[Route, EffectiveClass]:
    return {Route.DIRECT: EffectiveClass(tag=tag, period=Fraction(period), domain=domain)}


def _two_step(tag, period=1, domain=(0.0, float("inf"))) -> Dict[Route, EffectiveClass]:
    return {Route.TWO_STEP: EffectiveClass(tag=tag, period=Fraction(period), domain=domain)}


UNIT = (0.0, 1.0)
PC = PotentialClass

# ---------------------------------------------------------------- constraints

_T1_NOTE = "vector integral list, footnote: κ ≠ ±1 for the class assignment"

KAPPA_NOT_UNIT = Constraint(
    label="κ ≠ ±1",
    kind="classification",
    citation=_T1_NOTE,
    check=lambda p: _not_unit(p[KAPPA_NAME]),
)
ABS_KAPPA_AT_LEAST_ONE = Constraint(
    label="|κ| ≥ 1",
    kind="spectral",
    citation="two-parameter spectra: |κ| ≥ 1 for normalizable states",
    check=lambda p: _at_least(abs(p[KAPPA_NAME]), Fraction(1)),
)


def _alpha_bound(label: str, citation: str, bound: Callable) -> Constraint:
    return Constraint(
        label=label,
        kind="spectral",
        citation=citation,
        check=lambda p: _greater(p[ALPHA_NAME], bound(p[KAPPA_NAME])),
    )


def _lin(k, scale, sign):
    """scale·(κ + sign·|κ|)·κ, exact for Fractions."""
    if isinstance(k, Fraction):
        return Fraction(scale) * (k + sign * abs(k)) * k
    return float(scale) * (k + sign * abs(k)) * k


T2_10_BOUND = _alpha_bound(
    "α > −5 − (9/2)(κ−|κ|)κ",
    "two-parameter spectra: pseudotensor item 10 bound",
    lambda k: -5 - _lin(k, Fraction(9, 2), -1),
)
T2_9_BOUND = _alpha_bound(
    "α > 5 − (9/2)(κ+|κ|)κ",
    "two-parameter spectra: pseudotensor item 9 bound",
    lambda k: 5 - _lin(k, Fraction(9, 2), 1),
)
T1_10_BOUND = _alpha_bound(
    "α > −3 − 2(κ−|κ|)κ",
    "two-parameter spectra: vector item 10 bound",
    lambda k: -3 - _lin(k, 2, -1),
)
T1_9_BOUND = _alpha_bound(
    "α > 3 − 2(κ+|κ|)κ",
    "two-parameter spectra: vector item 9 bound",
    lambda k: 3 - _lin(k, 2, 1),
)
ALPHA_NEGATIVE_COULOMB = Constraint(
    label="α < 0",
    kind="spectral",
    citation="double shape invariance: hydrogen-like radial equation needs α < 0",
    check=lambda p: _greater(-p[ALPHA_NAME], Fraction(0)),
)

# ---------------------------------------------------------------- entries

_xa_x = ONE / X  # x_a / x
_xaxb_x2 = ONE / X**2  # x_a x_b / x^2

T1 = Source.VECTOR
T2 = Source.PSEUDOTENSOR
FO = Source.FIRST_ORDER

_H_HALF = _term("anti_h", weight=Fraction(1, 2), factor=_xa_x)
# ordering correction missing from the printed pseudotensor items 5, 6, 9 and 10
_XAXB_6 = _term("sel_mult", weight=6, factor=ONE)


def _fid(source, item):
    return FamilyId(source=source, item=item)


_ENTRIES: List[FamilyEntry] = [
    FamilyEntry(
        id=_fid(FO, 1), f=X**2, potential_tilde=ZERO, uses_alpha=False,
        integral_kind="first_order", integral_text="D = x·p − 3i/2",
        integral_terms=(_term("op", "D"),),
        route=SolutionRoute(approach="None", printed="none",
                            note="continuous spectrum: free motion in y = log x"),
        citation="first-order system 5", singular=_none,
    ),
    FamilyEntry(
        id=_fid(FO, 2), f=(1 + X**2) ** 2, potential_tilde=-6 * X**2, uses_alpha=False,
        integral_kind="first_order", integral_text="N_a^- = (K^a − p_a)/2",
        integral_terms=(_term("op", "Nm"),),
        route=SolutionRoute(approach="Direct", printed="none", classes=_direct(PC.PT_TRIG, 1),
                            note="effective potential 4l(l+1)csc²2y + 5 in y = arctan x"),
        citation="first-order system 6", singular=_none,
    ),
    FamilyEntry(
        id=_fid(FO, 3), f=(1 - X**2) ** 2, potential_tilde=-6 * X**2, uses_alpha=False,
        integral_kind="first_order", integral_text="N_a^+ = (K^a + p_a)/2",
        integral_terms=(_term("op", "Np"),),
        route=SolutionRoute(approach="None", printed="none",
                            note="repulsive csch² effective potential, no bound states"),
        citation="first-order system 7", singular=_unit,
    ),
    FamilyEntry(
        id=_fid(FO, 4), f=X**4, potential_tilde=-6 * X**2, uses_alpha=False,
        integral_kind="first_order", integral_text="K^a = x² p^a − 2x^a D",
        integral_terms=(_term("op", "K"),),
        route=SolutionRoute(approach="None", printed="none",
                            note="free effective potential l(l+1)/y², no bound states"),
        citation="first-order system 8", singular=_none,
    ),
    # vector integrals Q_a
    FamilyEntry(
        id=_fid(T1, 1), f=X, V=ALPHA * X, integral_kind="vector",
        integral_text="Q_a = {p_b, J_ab} + ½{H, x_a/x}",
        integral_terms=(_term("sum_anti", "p", "J"), _H_HALF),
        route=SolutionRoute(approach="Both", printed="3d oscillator or Coulomb",
                            classes={**_direct(PC.OSCILLATOR), **_two_step(PC.COULOMB)}),
        citation="vector integral list, item 1", singular=_none,
    ),
    FamilyEntry(
        id=_fid(T1, 2), f=X**4, V=ALPHA * X, integral_kind="vector",
        integral_text="Q_a = {K_b, J_ab} − αx^a",
        integral_terms=(_term("sum_anti", "K", "J"), _term("sel_mult", weight=-1, factor=ALPHA / X)),
        entered_text="Q_a = {K_b, J_ab} − αx^a/x",
        route=SolutionRoute(approach="Both", printed="Coulomb or 3d oscillator",
                            classes={**_direct(PC.COULOMB), **_two_step(PC.OSCILLATOR)}),
        citation="vector integral list, item 2", singular=_none,
    ),
    FamilyEntry(
        id=_fid(T1, 3), f=X * (X - 1) ** 2, V=ALPHA * X / (X + 1) ** 2, integral_kind="vector",
        integral_text="Q_a = {J_ab, N_b^+} + ½{H, x_a/x}",
        integral_terms=(_term("sum_anti", "J", "Np"), _H_HALF),
        route=SolutionRoute(approach="Both", printed="Eckart or hyperbolic Pöschl-Teller",
                            classes={**_direct(PC.PT_HYP, 1, UNIT), **_two_step(PC.ECKART, 2, UNIT)}),
        citation="vector integral list, item 3", singular=_unit,
    ),
    FamilyEntry(
        id=_fid(T1, 4), f=X * (X + 1) ** 2, V=ALPHA * X / (X - 1) ** 2, integral_kind="vector",
        integral_text="Q_a = {J_ab, N_b^+} + ½{H, x_a/x}",
        integral_terms=(_term("sum_anti", "J", "Np"), _H_HALF),
        route=SolutionRoute(approach="Both", printed="Eckart or trigonometric Pöschl-Teller",
                            classes={**_direct(PC.PT_TRIG, 1), **_two_step(PC.ECKART, 2, UNIT)}),
        citation="vector integral list, item 4", singular=_unit,
    ),
    FamilyEntry(
        id=_fid(T1, 5), f=(1 + X**2) ** 2, V=ALPHA * (1 - X**2) / X, integral_kind="vector",
        integral_text="Q_a = {J_ab, N_b^-} − αx^a/x",
        integral_terms=(_term("sum_anti", "J", "Nm"), _term("sel_mult", weight=-1, factor=ALPHA / X)),
        route=SolutionRoute(approach="Direct", printed="trigonometric Rosen-Morse",
                            classes=_direct(PC.ROSEN_MORSE, 2)),
        citation="vector integral list, item 5", singular=_none,
    ),
    FamilyEntry(
        id=_fid(T1, 6), f=(1 - X**2) ** 2, V=ALPHA * (1 + X**2) / X, integral_kind="vector",
        integral_text="Q_a = {J_ab, N_b^+} − αx^a/x",
        integral_terms=(_term("sum_anti", "J", "Np"), _term("sel_mult", weight=-1, factor=ALPHA / X)),
        route=SolutionRoute(approach="Direct", printed="Eckart",
                            classes=_direct(PC.ECKART, 2, UNIT)),
        citation="vector integral list, item 6", singular=_unit,
    ),
    FamilyEntry(
        id=_fid(T1, 7), f=X / (X + 1), V=ALPHA * X / (X + 1), integral_kind="vector",
        integral_text="Q_a = {J_ab, p_b} + ½{H, x_a/x}",
        integral_terms=(_term("sum_anti", "J", "p"), _H_HALF),
        route=SolutionRoute(approach="TwoStep", printed="Coulomb", classes=_two_step(PC.COULOMB)),
        citation="vector integral list, item 7", singular=_none,
    ),
    FamilyEntry(
        id=_fid(T1, 8), f=X / (X - 1), V=ALPHA * X / (X - 1), integral_kind="vector",
        integral_text="Q_a = {J_ab, p_b} + ½{H, x_a/x}",
        integral_terms=(_term("sum_anti", "J", "p"), _H_HALF),
        route=SolutionRoute(approach="TwoStep", printed="Coulomb", classes=_two_step(PC.COULOMB)),
        citation="vector integral list, item 8", singular=_unit,
    ),
    FamilyEntry(
        id=_fid(T1, 9), f=(X**2 - 1) ** 2 * X / (X**2 - 2 * KAPPA * X + 1),
        V=ALPHA * X / (X**2 - 2 * KAPPA * X + 1), uses_kappa=True, integral_kind="vector",
        integral_text="Q_a = {J_ab, N_b^+} + ½{H, x_a/x}",
        integral_terms=(_term("sum_anti", "J", "Np"), _H_HALF),
        route=SolutionRoute(approach="TwoStep", printed="Eccart", classes=_two_step(PC.ECKART, 2, UNIT),
                            note="printed 'Eccart' is read as Eckart"),
        constraints=(KAPPA_NOT_UNIT, ABS_KAPPA_AT_LEAST_ONE, T1_9_BOUND),
        citation="vector integral list, item 9", singular=_t1_9_radii,
    ),
    FamilyEntry(
        id=_fid(T1, 10), f=(X**2 + 1) ** 2 * X / (X**2 - 2 * KAPPA * X - 1),
        V=ALPHA * X / (X**2 - 2 * KAPPA * X - 1), uses_kappa=True, integral_kind="vector",
        integral_text="Q_a = {J_ab, N_b^-} + ½{H, x_a/x}",
        integral_terms=(_term("sum_anti", "J", "Nm"), _H_HALF),
        route=SolutionRoute(approach="TwoStep", printed="trigonometric Rosen-Morse",
                            classes=_two_step(PC.ROSEN_MORSE, 2)),
        constraints=(KAPPA_NOT_UNIT, T1_10_BOUND),
        citation="vector integral list, item 10", singular=_t1_10_radii,
    ),
    # pseudotensor integrals Q_ab
    FamilyEntry(
        id=_fid(T2, 1), f=ONE / X**2, V=ALPHA / X**2, integral_kind="tensor",
        integral_text="Q_ab = p_a p_b − ½{x_a x_b, H + 1/x⁴}",
        integral_terms=(
            _term("prod", "p"),
            _term("anti_h", weight=Fraction(-1, 2), factor=ONE),
            _term("sel_mult", weight=-1, factor=ONE / X**4),
        ),
        route=SolutionRoute(approach="Both", printed="Coulomb or 3d oscillator",
                            classes={**_direct(PC.COULOMB), **_two_step(PC.OSCILLATOR)}),
        constraints=(ALPHA_NEGATIVE_COULOMB,),
        citation="pseudotensor integral list, item 1; hydrogen-like spectrum", singular=_none,
    ),
    FamilyEntry(
        id=_fid(T2, 2), f=X**4, V=-ALPHA / X**2, integral_kind="tensor",
        integral_text="Q_ab = K_a K_b − α x_a x_b/x⁴",
        integral_terms=(_term("prod", "K"), _term("sel_mult", weight=-1, factor=ALPHA / X**4)),
        route=SolutionRoute(approach="Both", printed="3d oscillator or Coulomb",
                            classes={**_direct(PC.OSCILLATOR), **_two_step(PC.COULOMB)},
                            note="effective-potential column realigned; the source rows are shifted"),
        citation="pseudotensor integral list, item 2", singular=_none,
    ),
    FamilyEntry(
        id=_fid(T2, 3), f=(X**2 - 1) ** 2, V=ALPHA * X**2 / (X**2 + 1) ** 2, integral_kind="tensor",
        integral_text="Q_ab = {N_a^+, N_b^+} + 2α x_a x_b/(x²+1)²",
        integral_terms=(_term("anti_pair", "Np"), _term("sel_mult", weight=2, factor=ALPHA / (X**2 + 1) ** 2)),
        route=SolutionRoute(approach="Both", printed="Eckart or hyperbolic Pöschl-Teller",
                            classes={**_direct(PC.PT_HYP, 2, UNIT), **_two_step(PC.ECKART, 4, UNIT)}),
        citation="pseudotensor integral list, item 3", singular=_unit,
    ),
    FamilyEntry(
        id=_fid(T2, 4), f=(X**2 + 1) ** 2, V=ALPHA * X**2 / (X**2 - 1) ** 2, integral_kind="tensor",
        integral_text="Q_ab = {N_a^-, N_b^-} + 2α x_a x_b/(x²−1)²",
        integral_terms=(_term("anti_pair", "Nm"), _term("sel_mult", weight=2, factor=ALPHA / (X**2 - 1) ** 2)),
        route=SolutionRoute(approach="Both", printed="Eckart or trigonometric Pöschl-Teller",
                            classes={**_direct(PC.PT_TRIG, 2), **_two_step(PC.ECKART, 4, UNIT)}),
        citation="pseudotensor integral list, item 4", singular=_unit,
    ),
    FamilyEntry(
        id=_fid(T2, 5), f=(X**4 - 1) ** 2 / X**2, V=ALPHA * (X**4 + 1) / X**2, integral_kind="tensor",
        integral_text="Q_ab = K_a K_b + p_a p_b − ½{p_c(1+x⁴)p_c + α, x_a x_b/x²}",
        integral_terms=(
            _term("prod", "K"),
            _term("prod", "p"),
            _term("anti_pgp", weight=Fraction(-1, 2), factor=1 + X**4, factor2=_xaxb_x2),
            _term("sel_mult", weight=-1, factor=ALPHA / X**2),
            _XAXB_6,
        ),
        entered_text="Q_ab = K_a K_b + p_a p_b − ½{p_c(1+x⁴)p_c + α, x_a x_b/x²} + 6x_a x_b",
        route=SolutionRoute(approach="Direct", printed="Eckart", classes=_direct(PC.ECKART, 4, UNIT)),
        citation="pseudotensor integral list, item 5", singular=_unit,
    ),
    FamilyEntry(
        id=_fid(T2, 6), f=(X**4 + 1) ** 2 / X**2, V=ALPHA * (X**4 - 1) / X**2, integral_kind="tensor",
        integral_text="Q_ab = K_a K_b − p_a p_b − ½{p_c(x⁴−1)p_c + α, x_a x_b/x²}",
        integral_terms=(
            _term("prod", "K"),
            _term("prod", "p", weight=-1),
            _term("anti_pgp", weight=Fraction(-1, 2), factor=X**4 - 1, factor2=_xaxb_x2),
            _term("sel_mult", weight=-1, factor=ALPHA / X**2),
            _XAXB_6,
        ),
        entered_text="Q_ab = K_a K_b − p_a p_b − ½{p_c(x⁴−1)p_c + α, x_a x_b/x²} + 6x_a x_b",
        route=SolutionRoute(approach="Direct", printed="trigonometric Rosen-Morse",
                            classes=_direct(PC.ROSEN_MORSE, 4)),
        citation="pseudotensor integral list, item 6; arctan map", singular=_none,
    ),
    FamilyEntry(
        id=_fid(T2, 7), f=ONE / (X**2 + 1), V=ALPHA / (X**2 + 1), integral_kind="tensor",
        integral_text="Q_ab = p_a p_b − ½{x_a x_b, H + 1/(x²+1)²}",
        integral_terms=(
            _term("prod", "p"),
            _term("anti_h", weight=Fraction(-1, 2), factor=ONE),
            _term("sel_mult", weight=-1, factor=ONE / (X**2 + 1) ** 2),
        ),
        route=SolutionRoute(approach="TwoStep", printed="3d oscillator", classes=_two_step(PC.OSCILLATOR)),
        citation="pseudotensor integral list, item 7", singular=_none,
    ),
    FamilyEntry(
        id=_fid(T2, 8), f=ONE / (X**2 - 1), V=ALPHA / (X**2 - 1), integral_kind="tensor",
        integral_text="Q_ab = p_a p_b − ½{x_a x_b, H + 1/(x²−1)²}",
        integral_terms=(
            _term("prod", "p"),
            _term("anti_h", weight=Fraction(-1, 2), factor=ONE),
            _term("sel_mult", weight=-1, factor=ONE / (X**2 - 1) ** 2),
        ),
        route=SolutionRoute(approach="TwoStep", printed="3d oscillator", classes=_two_step(PC.OSCILLATOR)),
        citation="pseudotensor integral list, item 8", singular=_unit,
    ),
    FamilyEntry(
        id=_fid(T2, 9), f=(X**4 - 1) ** 2 / (X**4 - 2 * KAPPA * X**2 + 1),
        V=ALPHA * X**2 / (X**4 - 2 * KAPPA * X**2 + 1), uses_kappa=True, integral_kind="tensor",
        integral_text="Q_ab = K_a K_b + p_a p_b − ½{H + 6κ + p_c(x⁴+1)p_c, x_a x_b/x²}",
        integral_terms=(
            _term("prod", "K"),
            _term("prod", "p"),
            _term("anti_h", weight=Fraction(1, 2), factor=_xaxb_x2),
            _term("anti_pgp", weight=Fraction(-1, 2), factor=X**4 + 1, factor2=_xaxb_x2),
            _XAXB_6,
        ),
        entered_text="Q_ab = K_a K_b + p_a p_b + ½{H − p_c(x⁴+1)p_c, x_a x_b/x²} + 6x_a x_b",
        route=SolutionRoute(approach="TwoStep", printed="Eckart", classes=_two_step(PC.ECKART, 4, UNIT)),
        constraints=(ABS_KAPPA_AT_LEAST_ONE, T2_9_BOUND),
        citation="pseudotensor integral list, item 9", singular=_t2_9_radii,
    ),
    FamilyEntry(
        id=_fid(T2, 10), f=(X**4 + 1) ** 2 / (X**4 - 2 * KAPPA * X**2 - 1),
        V=ALPHA * X**2 / (X**4 - 2 * KAPPA * X**2 - 1), uses_kappa=True, integral_kind="tensor",
        integral_text="Q_ab = K_a K_b − p_a p_b − ½{H + 6κ + p_c(x⁴−1)p_c, x_a x_b/x²}",
        integral_terms=(
            _term("prod", "K"),
            _term("prod", "p", weight=-1),
            _term("anti_h", weight=Fraction(1, 2), factor=_xaxb_x2),
            _term("anti_pgp", weight=Fraction(-1, 2), factor=X**4 - 1, factor2=_xaxb_x2),
            _XAXB_6,
        ),
        entered_text="Q_ab = K_a K_b − p_a p_b + ½{H − p_c(x⁴−1)p_c, x_a x_b/x²} + 6x_a x_b",
        route=SolutionRoute(approach="TwoStep", printed="trigonometric Rosen-Morse",
                            classes=_two_step(PC.ROSEN_MORSE, 4)),
        constraints=(T2_10_BOUND,),
        citation="pseudotensor integral list, item 10; two-parameter split", singular=_t2_10_radii,
    ),
]

_REGISTRY: Dict[str, FamilyEntry] = {str(e.id): e for e in _ENTRIES}


# ---------------------------------------------------------------- operations

def _key(family: Union[FamilyId, str]) -> str:
    if isinstance(family, FamilyId):
        return str(family)
    return str(FamilyId.parse(family))


def get_entry(family: Union[FamilyId, str]) -> FamilyEntry:
    """
    Look up a catalog entry.

    Raises:
        UnknownFamilyError: If no such family exists
    """
    key = _key(family)
    if key not in _REGISTRY:
        raise UnknownFamilyError(f"unknown family '{family}'")
    return _REGISTRY[key]


def compact_potential(entry: FamilyEntry) -> Expr:
    """Compact-form V for an entry; first-order entries convert it from the Laplacian form."""
    if entry.V is not None:
        return entry.V
    return tilde_to_compact(entry.f, entry.potential_tilde)


def list_families() -> List[Tuple[FamilyId, Expr, Expr, SolutionRoute, str]]:
    """
    All catalogued systems in stable order: first-order, vector, pseudotensor.

    Returns:
        List of (FamilyId, f, V, route, integral-of-motion text)
    """
    return [(e.id, e.f, compact_potential(e), e.route, e.integral_text) for e in _ENTRIES]


def family_ids(source: Optional[Source] = None) -> List[FamilyId]:
    return [e.id for e in _ENTRIES if source is None or e.id.source == source]


def _structural(entry: FamilyEntry, params: Mapping[str, ParamValue]) -> List[Violation]:
    found = []
    cite = entry.citation
    known = set()
    if entry.uses_alpha:
        known.add(ALPHA_NAME)
        if ALPHA_NAME not in params:
            found.append(Violation(label="α is required", kind="structural", citation=cite))
    if entry.uses_kappa:
        known.add(KAPPA_NAME)
        if KAPPA_NAME not in params:
            found.append(Violation(label="κ is required", kind="structural", citation=cite))
    for name in params:
        if name not in known:
            label = "κ is not a parameter of this family" if name == KAPPA_NAME else f"unexpected parameter '{name}'"
            found.append(Violation(label=label, kind="structural", citation=cite))
    return found


def validate_params(family: Union[FamilyId, str], params: Mapping[str, object]) -> List[Violation]:
    """
    Check parameters against every constraint of a family.

    Violations are data: an empty list means the parameters are fine.

    Args:
        family: Family identifier
        params: Parameter values keyed by ``alpha`` / ``kappa``

    Returns:
        List[Violation]: Every violated condition with its citation
    """
    entry = get_entry(family)
    exact = {k: _exact(v) for k, v in params.items()}
    found = _structural(entry, exact)
    if found:
        return found
    for c in entry.constraints:
        if not c.check(exact):
            found.append(Violation(label=c.label, kind=c.kind, citation=c.citation))
    return found


def build_system(
    family: Union[FamilyId, str],
    params: Optional[Mapping[str, object]] = None,
    strict: bool = False,
) -> SystemSpec:
    """
    Build a fully populated system at concrete parameters.

    Structural problems (missing α, κ on a family without κ) always raise.
    Spectral and classification conditions are reported in ``constraints``
    and raise only when ``strict`` is set.

    Raises:
        ParameterError: On structural violations, or any violation when strict
    """
    entry = get_entry(family)
    params = dict(params or {})
    violations = validate_params(entry.id, params)
    structural = [v for v in violations if v.kind == "structural"]
    if structural or (strict and violations):
        bad = structural if structural else violations
        raise ParameterError(
            f"{entry.id}: " + "; ".join(v.label for v in bad), violations=bad
        )
    exact = {k: _exact(v) for k, v in params.items()}
    V = compact_potential(entry)
    tilde = entry.potential_tilde if entry.potential_tilde is not None else compact_to_tilde(entry.f, V)
    radii = entry.singular({k: float(v) for k, v in exact.items()})
    logger.debug("built %s with %s, singular radii %s", entry.id, exact, radii)
    return SystemSpec(
        family=entry.id,
        params=exact,
        f=entry.f,
        potential_tilde=tilde,
        V=V,
        constraints=[v.label for v in violations],
        singular_radii=radii,
    )


def check_relation(system: SystemSpec, points: int = 50, tol: float = 1e-10, seed: int = 0) -> bool:
    """The compact-form and Laplacian-form potentials agree at random points."""
    return equivalent(
        system.V,
        tilde_to_compact(system.f, system.potential_tilde),
        params=system.bindings(),
        points=points,
        tol=tol,
        seed=seed,
        avoid=system.singular_radii,
    )


def export_family(family: Union[FamilyId, str]) -> Dict[str, object]:
    """
    One JSON-ready document for a family.

    Expressions are in symexpr prefix text.
    """
    entry = get_entry(family)
    return {
        "family": str(entry.id),
        "f": to_sexpr(entry.f),
        "V": to_sexpr(compact_potential(entry)),
        "route": {
            "approach": entry.route.approach,
            "effective": entry.route.printed,
            "classes": {r.value: c.tag.value for r, c in entry.route.classes.items()},
            "note": entry.route.note,
        },
        "constraints": [
            {"label": c.label, "kind": c.kind, "citation": c.citation} for c in entry.constraints
        ],
        "integrals": [entry.integral_text],
        "entered": entry.entered_text or entry.integral_text,
        "citation": entry.citation,
    }


def export_catalog(directory: Union[str, Path]) -> List[Path]:
    """Write one ``<family>.json`` per entry; returns the written paths."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for entry in _ENTRIES:
        path = out / f"{entry.id}.json"
        path.write_text(json.dumps(export_family(entry.id), indent=2, ensure_ascii=False) + "\n")
        written.append(path)
    return written


def describe(entry: FamilyEntry) -> Dict[str, str]:
    """Readable row for the ``list`` table."""
    return {
        "family": str(entry.id),
        "f": to_infix(entry.f),
        "V": to_infix(compact_potential(entry)),
        "route": entry.route.approach,
        "effective": entry.route.printed,
        "integral": entry.integral_text,
    }


def entries() -> List[FamilyEntry]:
    return list(_ENTRIES)
