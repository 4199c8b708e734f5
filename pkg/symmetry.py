"""
Differential-operator algebra for second-order integrals of motion.

Operators are maps from derivative multi-indices to coefficient expressions
in the Cartesian variables, with pure partial derivatives. Factors of -i from
p_a = -i d_a are carried inside the coefficients.
"""

import itertools
import logging
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from catalog import FamilyEntry, SystemSpec, get_entry
from symexpr import (
    CARTESIAN_VARS,
    HALF,
    I,
    ONE,
    X,
    ZERO,
    Expr,
    PoleError,
    add,
    as_expr,
    clear_diff_cache,
    diff,
    evaluate,
    mul,
    sample_points,
    sqrt,
)

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, int, int]
Selector = Union[int, Tuple[int, ...]]


class SymmetryError(Exception):
    """Base error of the operator algebra."""


class SamplingError(SymmetryError):
    """No usable sample points, or a coefficient hit a pole at every attempt."""


class SelectorError(SymmetryError):
    """The selector does not fit the integral kind."""


# ---------------------------------------------------------------- DiffOp

ORIGIN: MultiIndex = (0, 0, 0)


def unit(a: int, times: int = 1) -> MultiIndex:
    """Multi-index of (d_a)^times, with a in 1..3."""
    idx = [0, 0, 0]
    idx[a - 1] = times
    return tuple(idx)


def _plus(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


class DiffOp:
    """
    Immutable linear differential operator ``sum_alpha c_alpha d^alpha``.

    Zero coefficients are never stored.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[MultiIndex, object] = ()):
        clean = {}
        for k, v in dict(terms).items():
            e = as_expr(v)
            if e is not ZERO:
                clean[tuple(k)] = e
        self.terms: Dict[MultiIndex, Expr] = clean
        self._hash = hash(frozenset(clean.items()))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return isinstance(other, DiffOp) and self.terms == other.terms

    def __repr__(self):
        inner = ", ".join(f"{k}: {v!r}" for k, v in sorted(self.terms.items()))
        return f"DiffOp({{{inner}}})"

    @property
    def order(self) -> int:
        return max((sum(k) for k in self.terms), default=0)

    def coeff(self, index: MultiIndex) -> Expr:
        return self.terms.get(tuple(index), ZERO)

    def is_structurally_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "DiffOp") -> "DiffOp":
        keys = set(self.terms) | set(other.terms)
        return DiffOp({k: add(self.coeff(k), other.coeff(k)) for k in keys})

    def __neg__(self) -> "DiffOp":
        return self.scale(-1)

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self + other.scale(-1)

    def scale(self, c) -> "DiffOp":
        c = as_expr(c)
        return DiffOp({k: mul(c, v) for k, v in self.terms.items()})

    def __matmul__(self, other: "DiffOp") -> "DiffOp":
        return compose(self, other)

    def apply(self, u) -> Expr:
        """Action on a function given as an expression."""
        u = as_expr(u)
        return add(*(mul(c, partial(u, k)) for k, c in self.terms.items()))


ZERO_OP = DiffOp()


def multiply(g) -> DiffOp:
    """Multiplication operator by g."""
    return DiffOp({ORIGIN: g})


@lru_cache(maxsize=1 << 16)
def partial(e: Expr, index: MultiIndex) -> Expr:
    """Mixed partial derivative d^index e in the Cartesian variables."""
    if index == ORIGIN:
        return e
    for a in range(3):
        if index[a]:
            lower = list(index)
            lower[a] -= 1
            return diff(partial(e, tuple(lower)), CARTESIAN_VARS[a])
    return e


def _binomial(alpha: MultiIndex, gamma: MultiIndex) -> int:
    out = 1
    for a, g in zip(alpha, gamma):
        out *= _choose(a, g)
    return out


def _choose(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out


def _sub_indices(alpha: MultiIndex) -> Iterable[MultiIndex]:
    return itertools.product(range(alpha[0] + 1), range(alpha[1] + 1), range(alpha[2] + 1))


@lru_cache(maxsize=4096)
def compose(A: DiffOp, B: DiffOp) -> DiffOp:
    """
    Operator product A∘B by the Leibniz rule.

    (a d^alpha)(b d^beta) = sum_{gamma<=alpha} C(alpha,gamma) a (d^gamma b) d^(alpha-gamma+beta)
    """
    acc: Dict[MultiIndex, List[Expr]] = {}
    for alpha, a in A.terms.items():
        for beta, b in B.terms.items():
            for gamma in _sub_indices(alpha):
                db = partial(b, gamma)
                if db is ZERO:
                    continue
                rest = (alpha[0] - gamma[0], alpha[1] - gamma[1], alpha[2] - gamma[2])
                key = _plus(rest, beta)
                acc.setdefault(key, []).append(mul(_binomial(alpha, gamma), a, db))
    return DiffOp({k: add(*v) for k, v in acc.items()})


def clear_caches() -> None:
    """Drop memoized derivatives and operator products."""
    partial.cache_clear()
    compose.cache_clear()
    clear_diff_cache()


def commutator(A: DiffOp, B: DiffOp) -> DiffOp:
    return compose(A, B) - compose(B, A)


def anticommutator(A: DiffOp, B: DiffOp) -> DiffOp:
    return compose(A, B) + compose(B, A)


# ---------------------------------------------------------------- first-order generators

MINUS_I = mul(-1, I)


def levi_civita(a: int, b: int, c: int) -> int:
    """epsilon_abc with indices in 1..3."""
    if len({a, b, c}) < 3:
        return 0
    return 1 if (a, b, c) in ((1, 2, 3), (2, 3, 1), (3, 1, 2)) else -1


def momentum(a: int) -> DiffOp:
    """p_a = -i d_a"""
    return DiffOp({unit(a): MINUS_I})


def dilation() -> DiffOp:
    """D = -i(x·d + 3/2)"""
    terms = {unit(b): mul(MINUS_I, CARTESIAN_VARS[b - 1]) for b in (1, 2, 3)}
    terms[ORIGIN] = mul(MINUS_I, Fraction(3, 2))
    return DiffOp(terms)


def conformal(a: int) -> DiffOp:
    """K_a = x² p_a - 2 x_a D"""
    xa = CARTESIAN_VARS[a - 1]
    terms = {}
    for b in (1, 2, 3):
        c = -2 * xa * CARTESIAN_VARS[b - 1]
        if a == b:
            c = c + X**2
        terms[unit(b)] = mul(MINUS_I, c)
    terms[ORIGIN] = mul(MINUS_I, -3 * xa)
    return DiffOp(terms)


def n_plus(a: int) -> DiffOp:
    return (conformal(a) + momentum(a)).scale(HALF)


def n_minus(a: int) -> DiffOp:
    return (conformal(a) - momentum(a)).scale(HALF)


def angular(a: int) -> DiffOp:
    """J_a = -i epsilon_abc x_b d_c"""
    terms = {}
    for b in (1, 2, 3):
        for c in (1, 2, 3):
            e = levi_civita(a, b, c)
            if e:
                terms[unit(c)] = add(terms.get(unit(c), ZERO), mul(MINUS_I, e, CARTESIAN_VARS[b - 1]))
    return DiffOp(terms)


def angular_pair(a: int, b: int) -> DiffOp:
    """J_ab = epsilon_abc J_c"""
    out = ZERO_OP
    for c in (1, 2, 3):
        e = levi_civita(a, b, c)
        if e:
            out = out + angular(c).scale(e)
    return out


def laplacian() -> DiffOp:
    return DiffOp({unit(c, 2): ONE for c in (1, 2, 3)})


def p_g_p(g) -> DiffOp:
    """sum_c p_c g p_c = -d_c g d_c"""
    g = as_expr(g)
    terms = {}
    for c in (1, 2, 3):
        terms[unit(c, 2)] = -g
        terms[unit(c)] = -diff(g, CARTESIAN_VARS[c - 1])
    return DiffOp(terms)


def first_order_ops() -> Dict[str, object]:
    """The rotation, dilation, conformal and momentum generators."""
    return {
        "J": [angular(a) for a in (1, 2, 3)],
        "D": dilation(),
        "Np": [n_plus(a) for a in (1, 2, 3)],
        "Nm": [n_minus(a) for a in (1, 2, 3)],
        "K": [conformal(a) for a in (1, 2, 3)],
        "p": [momentum(a) for a in (1, 2, 3)],
    }


_VECTOR_OPS = {"p": momentum, "K": conformal, "Np": n_plus, "Nm": n_minus}


# ---------------------------------------------------------------- Hamiltonians

HAMILTONIAN_FORMS = ("Hat", "H", "Tilde")


def hamiltonian_op(s: SystemSpec, form: str = "Hat") -> DiffOp:
    """
    Hamiltonian of a system as a DiffOp.

    Args:
        s: The system
        form: ``Hat`` for p_a f p_a + Ṽ, ``H`` for f^(1/2) p² f^(1/2) + V,
            ``Tilde`` for f p² + V

    Returns:
        DiffOp: The operator; ``Hat`` and ``H`` coincide as operators
    """
    if form == "Hat":
        return p_g_p(s.f) + multiply(s.potential_tilde)
    if form == "H":
        root = multiply(sqrt(s.f))
        return compose(root, compose(laplacian().scale(-1), root)) + multiply(s.V)
    if form == "Tilde":
        return laplacian().scale(-s.f) + multiply(s.V)
    raise ValueError(f"unknown Hamiltonian form '{form}', expected one of {HAMILTONIAN_FORMS}")


def hamiltonian_from(f, potential_tilde) -> DiffOp:
    """p_a f p_a + Ṽ for ad hoc f and Ṽ."""
    return p_g_p(f) + multiply(potential_tilde)


# ---------------------------------------------------------------- sampling and zero tests

class ResidualReport(BaseModel):
    """Per-equation maximum residuals at a sample set and the verdict."""

    residuals: Dict[str, float]
    points: int
    tolerance: float
    passed: bool
    notes: List[str] = Field(default_factory=list)

    @classmethod
    def build(cls, residuals: Dict[str, float], points: int, tol: float, notes=None) -> "ResidualReport":
        ok = all(np.isfinite(v) and v < tol for v in residuals.values())
        return cls(residuals=residuals, points=points, tolerance=tol, passed=ok, notes=list(notes or []))

    @property
    def worst(self) -> float:
        return max(self.residuals.values(), default=0.0)


def sample_env(
    points: int,
    seed: int,
    params: Optional[Mapping[str, float]] = None,
    avoid: Sequence[float] = (),
) -> Dict[str, object]:
    """Cartesian sample bindings away from the singular radii."""
    try:
        env: Dict[str, object] = dict(sample_points(points, seed, cartesian=True, avoid=avoid))
    except Exception as e:
        raise SamplingError(str(e)) from e
    env.update(params or {})
    return env


def _values(e: Expr, env: Mapping[str, object], n: int) -> np.ndarray:
    try:
        v = evaluate(e, env)
    except PoleError as err:
        raise SamplingError(f"sample point hit a pole in {err.subexpr!r}") from err
    return np.broadcast_to(np.asarray(v, dtype=complex), (n,))


def sample_op(op: DiffOp, keys: Sequence[MultiIndex], env: Mapping[str, object], n: int) -> np.ndarray:
    """Coefficient values, shape (len(keys), n); missing keys are zero."""
    out = np.zeros((len(keys), n), dtype=complex)
    for i, k in enumerate(keys):
        c = op.terms.get(k)
        if c is not None:
            out[i] = _values(c, env, n)
    return out


def _point_scale(op: Optional[DiffOp], env, n: int) -> np.ndarray:
    if op is None or not op.terms:
        return np.ones(n)
    keys = sorted(op.terms)
    vals = np.abs(sample_op(op, keys, env, n)).max(axis=0)
    return np.maximum(1.0, vals)


def is_zero_op(
    op: DiffOp,
    params: Optional[Mapping[str, float]] = None,
    points: int = 100,
    tol: float = 1e-8,
    seed: int = 7,
    avoid: Sequence[float] = (),
    scale: Optional[DiffOp] = None,
) -> ResidualReport:
    """
    Probabilistic test that every coefficient of ``op`` vanishes.

    With ``scale`` given, each point's residual is divided by
    max(1, max |scale coefficient|) at that point.

    Raises:
        SamplingError: If no admissible sample points exist
    """
    env = sample_env(points, seed, params, avoid)
    keys = sorted(op.terms)
    if not keys:
        return ResidualReport.build({"commutator": 0.0}, points, tol)
    vals = np.abs(sample_op(op, keys, env, points)).max(axis=0)
    res = float(np.max(vals / _point_scale(scale, env, points)))
    return ResidualReport.build({"commutator": res}, points, tol)


def commutes_with(
    H: DiffOp,
    Q: DiffOp,
    params=None,
    points: int = 100,
    tol: float = 1e-8,
    seed: int = 7,
    avoid: Sequence[float] = (),
) -> ResidualReport:
    """[H, Q] = 0 relative to the size of H∘Q."""
    hq = compose(H, Q)
    return is_zero_op(hq - compose(Q, H), params, points, tol, seed, avoid, scale=hq)


# ---------------------------------------------------------------- table integrals

class AssembledIntegral(BaseModel):
    """A table integral built term by term from the catalog weights."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    family: str
    selector: Tuple[int, ...]
    op: DiffOp
    commutator: DiffOp
    scale: DiffOp
    weights: List[str]
    variant: str
    residual: float


def admissible_selectors(entry: FamilyEntry) -> List[Tuple[int, ...]]:
    """Two independent selectors per family: a = 1, 3 or (a, b) = (3, 3), (1, 2)."""
    if entry.integral_kind == "tensor":
        return [(3, 3), (1, 2)]
    if entry.integral_terms[0].ops == ("D",):
        return [()]
    return [(1,), (3,)]


def _normalize_selector(entry: FamilyEntry, selector: Optional[Selector]) -> Tuple[int, ...]:
    if selector is None:
        sel: Tuple[int, ...] = ()
    elif isinstance(selector, int):
        sel = (selector,)
    else:
        sel = tuple(int(s) for s in selector)
    if any(not 1 <= s <= 3 for s in sel):
        raise SelectorError(f"selector indices must be in 1..3, got {sel}")
    wanted = {"tensor": 2, "vector": 1}.get(entry.integral_kind)
    if wanted is None:
        wanted = 0 if entry.integral_terms[0].ops == ("D",) else 1
    if len(sel) != wanted:
        raise SelectorError(f"{entry.id} takes a selector with {wanted} indices, got {sel}")
    return sel


def _monomial(sel: Tuple[int, ...]) -> Expr:
    return mul(*(CARTESIAN_VARS[s - 1] for s in sel))


def _swap(name: str, swapped: bool) -> str:
    if not swapped:
        return name
    return {"Np": "Nm", "Nm": "Np"}.get(name, name)


def table_pair(a: int, b: int) -> DiffOp:
    """J_ab of the integral tables: x_b p_a - x_a p_b = epsilon_bac J_c."""
    return angular_pair(b, a)


def _table_n_plus(a: int) -> DiffOp:
    return conformal(a) + momentum(a)


def _table_n_minus(a: int) -> DiffOp:
    return conformal(a) - momentum(a)


# N^± inside integrals carry no factor 1/2
_TABLE_OPS = {"p": momentum, "K": conformal, "Np": _table_n_plus, "Nm": _table_n_minus}


def _term_op(term, sel: Tuple[int, ...], H: DiffOp, swapped: bool) -> DiffOp:
    ops = tuple(_swap(o, swapped) for o in term.ops)
    kind = term.kind
    if kind == "op":
        if ops[0] == "D":
            return dilation()
        return _VECTOR_OPS[ops[0]](sel[0])
    if kind == "sum_anti":
        a = sel[0]
        out = ZERO_OP
        for b in (1, 2, 3):
            pair = [table_pair(a, b) if o == "J" else _TABLE_OPS[o](b) for o in ops]
            out = out + anticommutator(pair[0], pair[1])
        return out
    mono = _monomial(sel)
    if kind == "anti_h":
        return anticommutator(H, multiply(mono * term.factor))
    if kind == "sel_mult":
        return multiply(mono * term.factor)
    if kind == "prod":
        a, b = sel
        return compose(_TABLE_OPS[ops[0]](a), _TABLE_OPS[ops[0]](b))
    if kind == "anti_pair":
        a, b = sel
        return anticommutator(_TABLE_OPS[ops[0]](a), _TABLE_OPS[ops[0]](b))
    if kind == "anti_pgp":
        return anticommutator(p_g_p(term.factor), multiply(mono * term.factor2))
    raise SymmetryError(f"unknown integral term kind '{kind}'")


def _assemble(system: SystemSpec, entry: FamilyEntry, sel, swapped: bool) -> Tuple[DiffOp, DiffOp, DiffOp]:
    """Q with the catalog weights, [H, Q] and H∘Q."""
    H = hamiltonian_op(system, "Hat")
    Q = ZERO_OP
    for term in entry.integral_terms:
        op = _term_op(term, sel, H, swapped)
        Q = Q + (op if term.weight == 1 else op.scale(term.weight))
    HQ = compose(H, Q)
    return Q, HQ - compose(Q, H), HQ


def assemble_integral(
    system: SystemSpec,
    selector: Optional[Selector] = None,
    points: int = 60,
    seed: int = 1011,
    tol: float = 1e-8,
) -> AssembledIntegral:
    """
    Build a table integral Q_a or Q_ab for a system.

    Every term enters with its catalog weight; nothing is fitted. If the
    integral contains N^± and does not commute as printed, the opposite
    sign is tried once and, when that one commutes, returned with variant
    ``"N± swapped"``. Otherwise the printed operator is returned with its
    residual, so a non-commuting integral fails verification.

    Args:
        system: The system (from ``catalog.build_system``)
        selector: Vector index a, or index pair (a, b) for pseudotensor integrals
        points: Sample points of the sign trial
        seed: Seed of the sign trial

    Returns:
        AssembledIntegral: The operator, its commutator with H and the trial residual

    Raises:
        SelectorError: If the selector does not fit the integral
    """
    entry = get_entry(system.family)
    sel = _normalize_selector(entry, selector)
    has_n = any(o in ("Np", "Nm") for t in entry.integral_terms for o in t.ops)
    printed = None
    for swapped in ([False, True] if has_n else [False]):
        op, comm, scale = _assemble(system, entry, sel, swapped)
        report = is_zero_op(
            comm, system.bindings(), points, tol, seed, system.singular_radii, scale=scale
        )
        result = AssembledIntegral(
            family=str(entry.id),
            selector=sel,
            op=op,
            commutator=comm,
            scale=scale,
            weights=[str(t.weight) for t in entry.integral_terms],
            variant="N± swapped" if swapped else "printed",
            residual=report.worst,
        )
        if report.passed:
            if swapped:
                logger.warning("%s%s: commutes only with the opposite N sign", entry.id, sel)
            return result
        if printed is None:
            printed = result
    logger.info("%s%s: integral does not commute, residual %.3g", entry.id, sel, printed.residual)
    return printed


def verify_integral(
    system: SystemSpec,
    selector: Optional[Selector] = None,
    points: int = 100,
    tol: float = 1e-8,
    seed: int = 7,
) -> ResidualReport:
    """[H, Q] = 0 for a table integral on a fresh sample set."""
    assembled = assemble_integral(system, selector, tol=tol, seed=seed + 1004)
    report = is_zero_op(
        assembled.commutator,
        system.bindings(),
        points=points,
        tol=tol,
        seed=seed,
        avoid=system.singular_radii,
        scale=assembled.scale,
    )
    entry = get_entry(system.family)
    notes = [f"variant: {assembled.variant}", f"weights: {', '.join(assembled.weights)}"]
    if assembled.variant != "printed":
        notes.append("discrepancy: the printed N sign does not commute")
    if entry.entered_text:
        notes.append(f"entered as: {entry.entered_text}")
    return ResidualReport.build(report.residuals, points, tol, notes)


def apparent_integrals(system: SystemSpec) -> List[Tuple[str, DiffOp]]:
    """First-order integrals of a first-order family and their products."""
    entry = get_entry(system.family)
    if entry.integral_kind != "first_order":
        raise SelectorError(f"{entry.id} has no first-order integrals")
    name = entry.integral_terms[0].ops[0]
    if name == "D":
        D = dilation()
        return [("D", D), ("D D", compose(D, D))]
    gen = _VECTOR_OPS[name]
    return [
        (f"{name}_3", gen(3)),
        (f"{name}_1 {name}_2", compose(gen(1), gen(2))),
        (f"{name}_3 {name}_3", compose(gen(3), gen(3))),
    ]


# ---------------------------------------------------------------- conformal Killing tensors

Matrix = Tuple[Tuple[Expr, Expr, Expr], Tuple[Expr, Expr, Expr], Tuple[Expr, Expr, Expr]]


class KillingBlock(BaseModel):
    """Parameters of one of the nine conformal Killing tensors."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: int = Field(ge=1, le=9)
    vector: Optional[Tuple[Fraction, Fraction, Fraction]] = None
    matrix: Optional[Tuple[Tuple[Fraction, ...], ...]] = None
    k: Fraction = Fraction(0)
    phi: Expr = ZERO


_VECTOR_KINDS = (2, 3, 4)
_MATRIX_KINDS = (5, 6, 7, 8, 9)


def _delta(a: int, b: int) -> int:
    return 1 if a == b else 0


def killing_tensor(block: KillingBlock) -> Matrix:
    """
    The symmetric 3×3 matrix of a conformal Killing tensor.

    Raises:
        SymmetryError: If the parameters do not fit the kind
    """
    x = CARTESIAN_VARS
    r2 = X**2
    kind = block.kind
    if kind in _VECTOR_KINDS:
        if block.vector is None or block.matrix is not None:
            raise SymmetryError(f"kind {kind} takes a vector parameter")
        lam = [as_expr(v) for v in block.vector]
        lx = add(*(lam[c] * x[c] for c in range(3)))
        cross = [add(*(levi_civita(b + 1, c + 1, d + 1) * x[c] * lam[d]
                       for c in range(3) for d in range(3))) for b in range(3)]
    elif kind in _MATRIX_KINDS:
        if block.matrix is None or block.vector is not None:
            raise SymmetryError(f"kind {kind} takes a symmetric matrix parameter")
        m = block.matrix
        if any(m[i][j] != m[j][i] for i in range(3) for j in range(3)):
            raise SymmetryError("matrix parameter must be symmetric")
        lam2 = [[as_expr(m[i][j]) for j in range(3)] for i in range(3)]
        lamx = [add(*(lam2[a][c] * x[c] for c in range(3))) for a in range(3)]
        lxx = add(*(lamx[a] * x[a] for a in range(3)))
    elif kind == 1:
        if block.vector is not None or block.matrix is not None:
            raise SymmetryError("kind 1 takes only k and phi")
    else:
        raise SymmetryError(f"unknown kind {kind}")

    def entry(a: int, b: int) -> Expr:
        d = _delta(a, b)
        if kind == 1:
            return d * block.phi + block.k * (x[a] * x[b] - d * r2)
        if kind == 2:
            return lam[a] * x[b] + lam[b] * x[a] + d * lx * block.phi
        if kind == 3:
            return x[a] * cross[b] + x[b] * cross[a]
        if kind == 4:
            return (x[a] * lam[b] + x[b] * lam[a]) * r2 - 4 * x[a] * x[b] * lx + d * lx * block.phi
        if kind == 5:
            return lam2[a][b] + d * lxx * block.phi
        if kind == 6:
            return add(*(levi_civita(a + 1, c + 1, e + 1) * lam2[c][b] * x[e]
                         + levi_civita(b + 1, c + 1, e + 1) * lam2[c][a] * x[e]
                         for c in range(3) for e in range(3)))
        if kind == 7:
            return lam2[a][b] * r2 - (x[a] * lamx[b] + x[b] * lamx[a]) + d * lxx * block.phi
        if kind == 8:
            first = add(*(2 * (x[a] * levi_civita(b + 1, c + 1, e + 1) + x[b] * levi_civita(a + 1, c + 1, e + 1))
                          * x[c] * lamx[e] for c in range(3) for e in range(3)))
            second = add(*((levi_civita(a + 1, c + 1, e + 1) * lam2[b][e]
                            + levi_civita(b + 1, c + 1, e + 1) * lam2[a][e]) * x[c]
                           for c in range(3) for e in range(3)))
            return first - second * r2
        return (lam2[a][b] * r2**2 - 2 * (x[a] * lamx[b] + x[b] * lamx[a]) * r2
                + (4 * x[a] * x[b] + block.k * d * r2) * lxx + d * lxx * block.phi)

    rows = [[entry(a, b) for b in range(3)] for a in range(3)]
    return tuple(tuple(rows[min(a, b)][max(a, b)] for b in range(3)) for a in range(3))


def _unit_vectors():
    for a in range(3):
        v = [Fraction(0)] * 3
        v[a] = Fraction(1)
        yield tuple(v)


def _unit_matrices():
    for a in range(3):
        for b in range(a, 3):
            m = [[Fraction(0)] * 3 for _ in range(3)]
            m[a][b] = m[b][a] = Fraction(1)
            yield tuple(tuple(r) for r in m)


def killing_basis(group: str) -> List[KillingBlock]:
    """Blocks spanning the trace-free vector (kinds 2-4) or tensor (5-9) tensors, plus kind 1."""
    blocks = [KillingBlock(kind=1, k=Fraction(1))]
    if group == "vector":
        blocks += [KillingBlock(kind=k, vector=v) for k in _VECTOR_KINDS for v in _unit_vectors()]
    elif group == "tensor":
        blocks += [KillingBlock(kind=k, matrix=m) for k in _MATRIX_KINDS for m in _unit_matrices()]
    else:
        raise SelectorError(f"unknown Killing group '{group}'")
    return blocks


class KillingFit(BaseModel):
    residual: float
    weights: Dict[int, float]


def _trace_free_samples(mu: Matrix, env, n: int) -> np.ndarray:
    vals = np.array([[_values(mu[a][b], env, n) for b in range(3)] for a in range(3)])
    trace = (vals[0, 0] + vals[1, 1] + vals[2, 2]) / 3
    for a in range(3):
        vals[a, a] = vals[a, a] - trace
    return np.stack([vals[a, b] for a in range(3) for b in range(a, 3)])


def killing_decomposition(
    mu: Matrix,
    group: str,
    points: int = 40,
    seed: int = 5,
    params: Optional[Mapping[str, float]] = None,
    avoid: Sequence[float] = (),
) -> KillingFit:
    """
    Least-squares fit of the trace-free part of mu by conformal Killing tensors.

    Returns:
        KillingFit: relative residual and the weight norm per kind
    """
    env = sample_env(points, seed, params, avoid)
    target = _trace_free_samples(mu, env, points).ravel()
    blocks = killing_basis(group)
    M = np.stack([_trace_free_samples(killing_tensor(b), env, points).ravel() for b in blocks], axis=1)
    w, *_ = np.linalg.lstsq(M, target, rcond=None)
    residual = float(np.linalg.norm(M @ w - target) / max(1.0, np.linalg.norm(target)))
    weights: Dict[int, float] = {}
    for b, wj in zip(blocks, w):
        weights[b.kind] = weights.get(b.kind, 0.0) + float(abs(wj))
    return KillingFit(residual=residual, weights=weights)


# ---------------------------------------------------------------- determining equations

class Layers(BaseModel):
    """Second-, first- and zero-order coefficient layers of an operator."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    mu: Matrix
    xi: Tuple[Expr, Expr, Expr]
    eta: Expr


def reconstruct_coefficients(Q: DiffOp) -> Layers:
    """(mu, xi, eta) with Q = mu^ab d_a d_b + xi^a d_a + eta and mu symmetric."""
    if Q.order > 2:
        raise SymmetryError(f"expected a second-order operator, got order {Q.order}")
    mu = [[ZERO] * 3 for _ in range(3)]
    for a in range(3):
        mu[a][a] = Q.coeff(unit(a + 1, 2))
        for b in range(a + 1, 3):
            off = mul(HALF, Q.coeff(_plus(unit(a + 1), unit(b + 1))))
            mu[a][b] = mu[b][a] = off
    xi = tuple(Q.coeff(unit(a + 1)) for a in range(3))
    return Layers(mu=tuple(tuple(r) for r in mu), xi=xi, eta=Q.coeff(ORIGIN))


def divergence(mu: Matrix) -> Tuple[Expr, Expr, Expr]:
    """mu_k^{kn}: the first-order layer forced on a formally self-adjoint operator."""
    x = CARTESIAN_VARS
    return tuple(add(*(diff(mu[k][n], x[k]) for k in range(3))) for n in range(3))


def _relative(terms: List[Expr], env, n: int) -> float:
    vals = [_values(t, env, n) for t in terms]
    total = np.abs(sum(vals))
    size = np.maximum(1.0, sum(np.abs(v) for v in vals))
    return float(np.max(total / size))


def determining_equations(mu: Matrix, xi, eta, f, potential_tilde) -> Dict[str, List[List[Expr]]]:
    """
    Every scalar component of the determining equations as a list of terms that must sum to zero.

    Keys: ``conformal`` (Killing tensor), ``mass`` (trace against f), ``second_order``,
    ``first_order`` and ``potential``; each value lists the components.
    """
    x = CARTESIAN_VARS
    f = as_expr(f)
    vt = as_expr(potential_tilde)
    eta = as_expr(eta)
    xi = [as_expr(v) for v in xi]
    fp = diff(f, X)
    fpp = diff(fp, X)
    fppp = diff(fpp, X)
    vtp = diff(vt, X)
    d = lambda e, a: diff(e, x[a])

    dmu = [[[d(mu[a][b], c) for c in range(3)] for b in range(3)] for a in range(3)]
    trace = add(*(mu[n][n] for n in range(3)))
    trace_grad = [d(trace, c) for c in range(3)]
    div = [add(*(dmu[c][n][n] for n in range(3))) for c in range(3)]
    mux = [add(*(mu[a][n] * x[n] for n in range(3))) for a in range(3)]
    muxx = add(*(mux[a] * x[a] for a in range(3)))
    xix = add(*(xi[n] * x[n] for n in range(3)))

    eqs: Dict[str, List[List[Expr]]] = {k: [] for k in ("conformal", "mass", "second_order", "first_order", "potential")}
    for a, b, c in itertools.combinations_with_replacement(range(3), 3):
        eqs["conformal"].append([
            5 * (dmu[a][b][c] + dmu[a][c][b] + dmu[b][c][a]),
            -_delta(a, b) * (trace_grad[c] + 2 * div[c]),
            -_delta(b, c) * (trace_grad[a] + 2 * div[a]),
            -_delta(a, c) * (trace_grad[b] + 2 * div[b]),
        ])
    for a in range(3):
        eqs["mass"].append([(trace_grad[a] + 2 * div[a]) * f, -5 * mux[a] * fp / X])
    for a, b in itertools.combinations_with_replacement(range(3), 2):
        lap_mu = add(*(d(dmu[a][b][n], n) for n in range(3)))
        radial_mu = add(*(dmu[a][b][n] * x[n] for n in range(3)))
        eqs["second_order"].append([
            (lap_mu + d(xi[a], b) + d(xi[b], a)) * f,
            (radial_mu - 2 * mu[a][b] - _delta(a, b) * (trace + xix)) * fp / X,
            (mux[a] * x[b] + mux[b] * x[a] + _delta(a, b) * muxx) / X**2 * (fp / X - fpp),
        ])
    for a in range(3):
        lap_xi = add(*(d(d(xi[a], n), n) for n in range(3)))
        radial_xi = add(*(d(xi[a], n) * x[n] for n in range(3)))
        eqs["first_order"].append([
            (2 * d(eta, a) + lap_xi) * f,
            (radial_xi - xi[a]) * fp / X,
            -(x[a] * xix + 2 * mux[a] + x[a] * trace) * (X**2 * fpp - X * fp) / X**4,
            -x[a] * muxx * (X**3 * fppp - 3 * X**2 * fpp + 3 * X * fp) / X**6,
            2 * mux[a] * vtp / X,
        ])
    lap_eta = add(*(d(d(eta, n), n) for n in range(3)))
    grad_terms = [-(fp * x[n] / X) * d(eta, n) for n in range(3)]
    hess_terms = [-mu[a][b] * d(d(vt, a), b) for a in range(3) for b in range(3)]
    grad_v = [-xi[a] * d(vt, a) for a in range(3)]
    eqs["potential"].append([X**2 * t for t in [-f * lap_eta] + grad_terms + hess_terms + grad_v])
    return eqs


def determining_residuals(
    mu: Matrix,
    xi,
    eta,
    f,
    potential_tilde,
    params: Optional[Mapping[str, float]] = None,
    points: int = 100,
    tol: float = 1e-8,
    seed: int = 7,
    avoid: Sequence[float] = (),
    only: Optional[Iterable[str]] = None,
) -> ResidualReport:
    """
    Residuals of the determining equations at random points.

    Each component is measured as |sum of terms| / max(1, sum |terms|).

    Args:
        only: Restrict to these equation keys

    Raises:
        SamplingError: If a coefficient has a pole at a sample point
    """
    env = sample_env(points, seed, params, avoid)
    eqs = determining_equations(mu, xi, eta, f, potential_tilde)
    keys = list(only) if only is not None else list(eqs)
    residuals = {}
    for key in keys:
        residuals[key] = max(_relative(terms, env, points) for terms in eqs[key])
    return ResidualReport.build(residuals, points, tol)


def integral_residuals(
    system: SystemSpec,
    selector: Optional[Selector] = None,
    points: int = 100,
    tol: float = 1e-8,
    seed: int = 7,
) -> ResidualReport:
    """
    Determining equations for the layers of an assembled table integral.

    The first-order layer is replaced by mu_k^{kn}; its deviation from the
    assembled operator is reported under ``"divergence"``.
    """
    assembled = assemble_integral(system, selector, tol=tol, seed=seed + 1004)
    layers = reconstruct_coefficients(assembled.op)
    xi = divergence(layers.mu)
    report = determining_residuals(
        layers.mu, xi, layers.eta, system.f, system.potential_tilde,
        system.bindings(), points, tol, seed, system.singular_radii,
    )
    env = sample_env(points, seed, system.bindings(), system.singular_radii)
    residuals = dict(report.residuals)
    residuals["divergence"] = max(_relative([layers.xi[a], -xi[a]], env, points) for a in range(3))
    return ResidualReport.build(residuals, points, tol, [f"variant: {assembled.variant}"])


# ---------------------------------------------------------------- reduced ansätze

DEFAULT_VECTOR = (Fraction(3), Fraction(-1), Fraction(2))
DEFAULT_MATRIX = (
    (Fraction(0), Fraction(1), Fraction(2)),
    (Fraction(1), Fraction(3), Fraction(0)),
    (Fraction(2), Fraction(0), Fraction(-3)),
)


class AppendixCandidate(BaseModel):
    """
    A mass term with the free function of one of the reduced ansätze.

    ``vector``: nu·(kind 2, phi = -2) + m·(kind 4, phi = 2x²) + δ λ·x phi
    ``tensor``: nu·(kind 5) + m·(kind 9, k = 0) + δ λxx phi
    ``cross``:  m·(kind 6) + nu·(kind 8)
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    ansatz: str
    f: Expr
    phi: Expr = ZERO
    nu: Fraction = Fraction(1)
    m: Fraction = Fraction(0)
    potential_tilde: Expr = ZERO
    eta_factor: Optional[Expr] = None
    vector: Tuple[Fraction, Fraction, Fraction] = DEFAULT_VECTOR
    matrix: Tuple[Tuple[Fraction, ...], ...] = DEFAULT_MATRIX


def _trace_free(matrix) -> Tuple[Tuple[Fraction, ...], ...]:
    shift = sum(matrix[i][i] for i in range(3)) / 3
    return tuple(tuple(matrix[i][j] - (shift if i == j else 0) for j in range(3)) for i in range(3))


def _combine(*parts) -> Matrix:
    return tuple(tuple(add(*(c * p[a][b] for c, p in parts)) for b in range(3)) for a in range(3))


def candidate_tensor(c: AppendixCandidate) -> Tuple[Matrix, Expr]:
    """Killing tensor and the scalar λ·x or λxx multiplying eta_factor."""
    x = CARTESIAN_VARS
    if c.ansatz == "vector":
        lam = c.vector
        lx = add(*(lam[a] * x[a] for a in range(3)))
        shift = c.phi - 2 * c.nu + 2 * c.m * X**2
        parts = [
            (c.nu, killing_tensor(KillingBlock(kind=2, vector=lam))),
            (c.m, killing_tensor(KillingBlock(kind=4, vector=lam))),
            (ONE, killing_tensor(KillingBlock(kind=1, phi=lx * shift))),
        ]
        return _combine(*parts), lx
    lam2 = _trace_free(c.matrix)
    lxx = add(*(lam2[a][b] * x[a] * x[b] for a in range(3) for b in range(3)))
    if c.ansatz == "tensor":
        parts = [
            (c.nu, killing_tensor(KillingBlock(kind=5, matrix=lam2))),
            (c.m, killing_tensor(KillingBlock(kind=9, matrix=lam2))),
            (ONE, killing_tensor(KillingBlock(kind=1, phi=lxx * c.phi))),
        ]
        return _combine(*parts), lxx
    if c.ansatz == "cross":
        parts = [
            (c.m, killing_tensor(KillingBlock(kind=6, matrix=lam2))),
            (c.nu, killing_tensor(KillingBlock(kind=8, matrix=lam2))),
        ]
        return _combine(*parts), lxx
    raise SymmetryError(f"unknown ansatz '{c.ansatz}'")


def _radial_equations(c: AppendixCandidate) -> Dict[str, List[Expr]]:
    f = c.f
    fp = diff(f, X)
    phi = c.phi
    dphi = diff(phi, X)
    if c.ansatz == "tensor" and c.nu == 1:
        return {
            "tensor_phi": [(dphi + 8 * c.m * X) * f, -(2 * c.m * X**2 + phi) * fp],
            "tensor_mass": [(2 * phi * X - 4 * c.m * X**3) * f, (c.m * X**4 - 1) * fp],
        }
    if c.ansatz == "cross":
        return {"cross_mass": [4 * c.nu * X * f, -(c.nu * X**2 - c.m) * fp]}
    return {}


def appendix_system_check(
    candidate: AppendixCandidate,
    params: Optional[Mapping[str, float]] = None,
    points: int = 100,
    tol: float = 1e-8,
    seed: int = 7,
    avoid: Sequence[float] = (),
) -> ResidualReport:
    """
    Determining equations for a candidate (mass, free function) pair.

    The conformal, mass and second-order equations are always checked with
    xi = mu_k^{kn}; the first-order one joins
    when ``eta_factor`` is given. The radial reductions of the pseudotensor
    and cross ansätze are reported under their own keys.
    """
    mu, scalar = candidate_tensor(candidate)
    xi = divergence(mu)
    only = ["conformal", "mass", "second_order"]
    eta = ZERO
    if candidate.eta_factor is not None:
        eta = scalar * candidate.eta_factor
        only.append("first_order")
    report = determining_residuals(
        mu, xi, eta, candidate.f, candidate.potential_tilde,
        params, points, tol, seed, avoid, only=only,
    )
    residuals = dict(report.residuals)
    radial = _radial_equations(candidate)
    if radial:
        env = sample_env(points, seed, params, avoid)
        for key, terms in radial.items():
            residuals[key] = _relative(terms, env, points)
    return ResidualReport.build(residuals, points, tol)


# ---------------------------------------------------------------- formal self-adjointness

def _bump(center: Sequence[float], h: float) -> Expr:
    out = ONE
    for a in range(3):
        t = (CARTESIAN_VARS[a] - as_expr(center[a])) / as_expr(h)
        out = out * (1 - t**2) ** 4
    return out


def _cube_center(avoid: Sequence[float], h: float) -> np.ndarray:
    direction = np.array([1.0, 2.0, 2.0]) / 3.0
    reach = np.sqrt(3.0) * h
    for r0 in (1.7, 2.6, 0.75, 3.4, 1.2):
        if r0 - reach <= 0.05:
            continue
        if all(abs(r0 - s) > reach + 0.05 for s in avoid):
            return r0 * direction
    raise SamplingError(f"no test cube of half-width {h} avoids the radii {list(avoid)}")


def self_adjoint_residual(
    H: DiffOp,
    params: Optional[Mapping[str, float]] = None,
    avoid: Sequence[float] = (),
    nodes: int = 14,
    h: float = 0.2,
) -> float:
    """
    Relative gap between <Hu, v> and <u, Hv> for two compactly supported test functions.

    The test functions are polynomial multiples of a smooth bump on a cube
    away from the singular radii; the integrals use a Gauss–Legendre grid.
    """
    center = _cube_center(avoid, h)
    bump = _bump(center, h)
    x1, x2, x3 = CARTESIAN_VARS
    u = bump * (1 + x1 - x2 * x3 / 2)
    v = bump * (2 - x1**2 + x3)

    t, w = np.polynomial.legendre.leggauss(nodes)
    axes = [center[a] + h * t for a in range(3)]
    g1, g2, g3 = np.meshgrid(*axes, indexing="ij")
    weights = np.einsum("i,j,k->ijk", w, w, w).ravel() * h**3
    env = dict(params or {})
    env.update(x1=g1.ravel(), x2=g2.ravel(), x3=g3.ravel())
    n = weights.size

    left = np.sum(weights * _values(H.apply(u), env, n) * np.conj(_values(v, env, n)))
    right = np.sum(weights * _values(u, env, n) * np.conj(_values(H.apply(v), env, n)))
    return float(abs(left - right) / max(abs(left), abs(right), 1e-300))


def system_self_adjoint(system: SystemSpec, form: str = "Hat", tol: float = 1e-6) -> ResidualReport:
    """Formal self-adjointness of a system's Hamiltonian in one of its forms."""
    gap = self_adjoint_residual(hamiltonian_op(system, form), system.bindings(), system.singular_radii)
    return ResidualReport.build({"self_adjoint": gap}, 1, tol, [f"form: {form}"])
