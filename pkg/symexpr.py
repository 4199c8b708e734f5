"""
Minimal exact symbolic core.

Expression trees over rationals with exact differentiation, substitution and
vectorized numeric evaluation. Nodes are interned: building the same tree twice
returns the same object, so structural sharing is automatic and expression
equality is identity.

Identity of two expressions is never decided structurally; use ``equivalent``,
which compares evaluations at random points.
"""

import hashlib
import logging
import threading
import weakref
from fractions import Fraction
from functools import lru_cache, singledispatch
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

Number = Union[int, Fraction]

VARIABLE_NAMES = frozenset({"x", "x1", "x2", "x3", "y"})
CARTESIAN = ("x1", "x2", "x3")
FUNCTIONS = (
    "exp", "log", "sin", "cos", "tan", "cot", "sec", "csc",
    "sinh", "cosh", "tanh", "coth", "sech", "csch", "arctan", "arctanh",
)


class SymexprError(Exception):
    """Base error of the symbolic core."""


class UnboundSymbolError(SymexprError):
    """A free symbol has no value in the bindings."""

    def __init__(self, name: str):
        super().__init__(f"unbound symbol '{name}'")
        self.name = name


class PoleError(SymexprError):
    """Evaluation hit a pole; ``subexpr`` is the offending subexpression."""

    def __init__(self, subexpr: "Expr", reason: str):
        super().__init__(f"{reason} at {to_sexpr(subexpr)}")
        self.subexpr = subexpr


class ParseError(SymexprError):
    """Malformed s-expression text."""


class Expr:
    """Interned immutable expression node."""

    __slots__ = ("args", "digest", "_hash", "__weakref__")

    _table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()
    _lock = threading.Lock()

    def __new__(cls, *args):
        key = (cls, args)
        with Expr._lock:
            node = Expr._table.get(key)
            if node is None:
                node = object.__new__(cls)
                node.args = args
                node.digest = _digest(cls.__name__, args)
                node._hash = int.from_bytes(node.digest, "big")
                Expr._table[key] = node
        return node

    def __hash__(self):
        return self._hash

    def __reduce__(self):
        return (from_sexpr, (to_sexpr(self),))

    def __repr__(self):
        return to_sexpr(self)

    def __str__(self):
        return to_infix(self)

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, mul(MINUS_ONE, as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), mul(MINUS_ONE, self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), -1))

    def __rtruediv__(self, other):
        return mul(as_expr(other), power(self, -1))

    def __neg__(self):
        return mul(MINUS_ONE, self)

    def __pow__(self, exponent):
        if isinstance(exponent, Const):
            exponent = exponent.value
        return power(self, exponent)


class Const(Expr):
    __slots__ = ()

    @property
    def value(self) -> Fraction:
        return self.args[0]


class ImagUnit(Expr):
    __slots__ = ()


class Symbol(Expr):
    __slots__ = ()

    @property
    def name(self) -> str:
        return self.args[0]


class Param(Symbol):
    __slots__ = ()


class Var(Symbol):
    __slots__ = ()


class Add(Expr):
    __slots__ = ()


class Mul(Expr):
    __slots__ = ()


class Pow(Expr):
    __slots__ = ()

    @property
    def base(self) -> Expr:
        return self.args[0]

    @property
    def exponent(self) -> Fraction:
        return self.args[1]


class Func(Expr):
    __slots__ = ()

    @property
    def name(self) -> str:
        return self.args[0]

    @property
    def arg(self) -> Expr:
        return self.args[1]


def _digest(tag: str, args: tuple) -> bytes:
    h = hashlib.blake2b(tag.encode(), digest_size=8)
    for a in args:
        if isinstance(a, Expr):
            h.update(a.digest)
        else:
            h.update(b"|" + str(a).encode())
    return h.digest()


def const(value: Number) -> Const:
    return Const(Fraction(value))


ZERO = const(0)
ONE = const(1)
MINUS_ONE = const(-1)
HALF = const(Fraction(1, 2))
I = ImagUnit()

X = Var("x")
X1, X2, X3 = Var("x1"), Var("x2"), Var("x3")
Y = Var("y")
CARTESIAN_VARS = (X1, X2, X3)

ALPHA_NAME = "alpha"
KAPPA_NAME = "kappa"
ENERGY_NAME = "E"
ALPHA = Param(ALPHA_NAME)
KAPPA = Param(KAPPA_NAME)
ENERGY = Param(ENERGY_NAME)


def as_expr(value) -> Expr:
    """Coerce ints, Fractions, floats and complex literals to expressions."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(value, (int, Fraction)):
        return const(value)
    if isinstance(value, float):
        return const(Fraction(value))
    if isinstance(value, complex):
        return add(as_expr(value.real), mul(as_expr(value.imag), I))
    raise TypeError(f"cannot build an expression from {type(value).__name__}")


def _order(nodes: Iterable[Expr]) -> Tuple[Expr, ...]:
    return tuple(sorted(nodes, key=lambda n: n.digest))


def _split_coeff(e: Expr) -> Tuple[Fraction, Expr]:
    if isinstance(e, Const):
        return e.value, ONE
    if isinstance(e, Mul) and isinstance(e.args[0], Const):
        rest = e.args[1:]
        core = rest[0] if len(rest) == 1 else Mul(*rest)
        return e.args[0].value, core
    return Fraction(1), e


def add(*terms) -> Expr:
    """Sum with flattening, constant folding and like-term collection."""
    coeffs: Dict[Expr, Fraction] = {}
    stack = [as_expr(t) for t in terms]
    while stack:
        t = stack.pop()
        if isinstance(t, Add):
            stack.extend(t.args)
            continue
        c, core = _split_coeff(t)
        if c == 0:
            continue
        coeffs[core] = coeffs.get(core, Fraction(0)) + c

    parts = []
    for core, c in coeffs.items():
        if c == 0:
            continue
        if core is ONE:
            parts.append(const(c))
        elif c == 1:
            parts.append(core)
        else:
            parts.append(_scaled(c, core))
    if not parts:
        return ZERO
    if len(parts) == 1:
        return parts[0]
    return Add(*_order(parts))


def _scaled(c: Fraction, core: Expr) -> Expr:
    if isinstance(core, Mul):
        return Mul(const(c), *core.args)
    return Mul(const(c), core)


def mul(*factors) -> Expr:
    """Product with flattening, constant folding and collection of like bases."""
    coeff = Fraction(1)
    imag = 0
    bases: Dict[Expr, Fraction] = {}
    stack = [as_expr(f) for f in factors]
    while stack:
        f = stack.pop()
        if isinstance(f, Mul):
            stack.extend(f.args)
        elif isinstance(f, Const):
            coeff *= f.value
        elif f is I:
            imag += 1
        elif isinstance(f, Pow):
            bases[f.base] = bases.get(f.base, Fraction(0)) + f.exponent
        else:
            bases[f] = bases.get(f, Fraction(0)) + 1
    if coeff == 0:
        return ZERO
    if imag >= 2:
        coeff *= (-1) ** (imag // 2)
        imag %= 2

    rest = []
    regroup = False
    for base, e in bases.items():
        if e == 0:
            continue
        p = power(base, e)
        if isinstance(p, Const):
            coeff *= p.value
        elif isinstance(p, Mul):
            # power() distributed over a product; collect its factors again
            regroup = True
            rest.extend(p.args)
        else:
            rest.append(p)
    if imag:
        rest.append(I)
    if regroup:
        return mul(const(coeff), *rest)
    if coeff == 0:
        return ZERO
    if not rest:
        return const(coeff)
    ordered = _order(rest)
    if coeff == 1:
        return ordered[0] if len(ordered) == 1 else Mul(*ordered)
    return Mul(const(coeff), *ordered)


def power(base, exponent) -> Expr:
    """``base ** exponent`` for a rational exponent."""
    base = as_expr(base)
    if isinstance(exponent, Const):
        exponent = exponent.value
    if not isinstance(exponent, (int, Fraction)):
        raise SymexprError(f"exponent must be rational, got {exponent!r}")
    e = Fraction(exponent)
    if e == 0:
        return ONE
    if e == 1:
        return base
    if isinstance(base, Const):
        v = base.value
        if v == 1:
            return ONE
        if e.denominator == 1 and v != 0:
            return const(v ** int(e))
        if e.denominator == 1 and e > 0:
            return ZERO
        return Pow(base, e)
    if base is I and e.denominator == 1:
        k = int(e) % 4
        return (ONE, I, MINUS_ONE, mul(MINUS_ONE, I))[k]
    if isinstance(base, Pow) and e.denominator == 1:
        return power(base.base, base.exponent * e)
    if isinstance(base, Mul) and e.denominator == 1:
        return mul(*(power(f, e) for f in base.args))
    return Pow(base, e)


_EXACT_AT_ZERO = {
    "exp": ONE, "sin": ZERO, "cos": ONE, "tan": ZERO, "sinh": ZERO,
    "cosh": ONE, "tanh": ZERO, "sech": ONE, "sec": ONE, "arctan": ZERO, "arctanh": ZERO,
}


def func(name: str, arg) -> Expr:
    if name not in FUNCTIONS:
        raise SymexprError(f"unknown function '{name}'")
    arg = as_expr(arg)
    if arg is ZERO and name in _EXACT_AT_ZERO:
        return _EXACT_AT_ZERO[name]
    if arg is ONE and name == "log":
        return ZERO
    return Func(name, arg)


def sqrt(u) -> Expr:
    return power(u, Fraction(1, 2))


def _make(name):
    def f(u):
        return func(name, u)

    f.__name__ = name
    f.__doc__ = f"Elementary function node ``{name}(u)``."
    return f


exp = _make("exp")
log = _make("log")
sin = _make("sin")
cos = _make("cos")
tan = _make("tan")
cot = _make("cot")
sec = _make("sec")
csc = _make("csc")
sinh = _make("sinh")
cosh = _make("cosh")
tanh = _make("tanh")
coth = _make("coth")
sech = _make("sech")
csch = _make("csch")
arctan = _make("arctan")
arctanh = _make("arctanh")


# ---------------------------------------------------------------- diff

def _as_var(v) -> Var:
    if isinstance(v, Var):
        return v
    if isinstance(v, str):
        return Var(v)
    raise SymexprError(f"not a variable: {v!r}")


DIFF_CACHE_SIZE = 1 << 16


@lru_cache(maxsize=DIFF_CACHE_SIZE)
def _diff_cached(e: Expr, v: Var) -> Expr:
    return _d(e, v)


def clear_diff_cache() -> None:
    """Drop memoized derivatives."""
    _diff_cached.cache_clear()


def diff(e, v) -> Expr:
    """
    Exact partial derivative of ``e`` with respect to variable ``v``.

    The radial symbol ``x`` depends on the Cartesian ones: d x / d x_a = x_a / x.

    Args:
        e: Expression
        v: Variable or variable name

    Returns:
        Expr: The derivative

    Raises:
        SymexprError: For an unsupported node kind
    """
    return _diff_cached(as_expr(e), _as_var(v))


@singledispatch
def _d(e, v):
    raise SymexprError(f"cannot differentiate {type(e).__name__}")


@_d.register(Const)
@_d.register(ImagUnit)
@_d.register(Param)
def _(e, v):
    return ZERO


@_d.register(Var)
def _(e, v):
    if e is v:
        return ONE
    if e is X and v.name in CARTESIAN:
        return mul(v, power(X, -1))
    return ZERO


@_d.register(Add)
def _(e, v):
    return add(*(diff(t, v) for t in e.args))


@_d.register(Mul)
def _(e, v):
    terms = []
    for i, f in enumerate(e.args):
        df = diff(f, v)
        if df is ZERO:
            continue
        terms.append(mul(*e.args[:i], df, *e.args[i + 1:]))
    return add(*terms)


@_d.register(Pow)
def _(e, v):
    db = diff(e.base, v)
    if db is ZERO:
        return ZERO
    return mul(const(e.exponent), power(e.base, e.exponent - 1), db)


def _outer_derivative(name: str, u: Expr) -> Expr:
    if name == "exp":
        return exp(u)
    if name == "log":
        return power(u, -1)
    if name == "sin":
        return cos(u)
    if name == "cos":
        return -sin(u)
    if name == "tan":
        return power(sec(u), 2)
    if name == "cot":
        return -power(csc(u), 2)
    if name == "sec":
        return mul(sec(u), tan(u))
    if name == "csc":
        return -mul(csc(u), cot(u))
    if name == "sinh":
        return cosh(u)
    if name == "cosh":
        return sinh(u)
    if name == "tanh":
        return power(sech(u), 2)
    if name == "coth":
        return -power(csch(u), 2)
    if name == "sech":
        return -mul(sech(u), tanh(u))
    if name == "csch":
        return -mul(csch(u), coth(u))
    if name == "arctan":
        return power(add(ONE, power(u, 2)), -1)
    if name == "arctanh":
        return power(add(ONE, -power(u, 2)), -1)
    raise SymexprError(f"no derivative rule for '{name}'")


@_d.register(Func)
def _(e, v):
    du = diff(e.arg, v)
    if du is ZERO:
        return ZERO
    return mul(_outer_derivative(e.name, e.arg), du)


# ---------------------------------------------------------------- traversal

def postvisit(e: Expr, visit):
    """Evaluate ``visit(node, *child_results)`` bottom-up, once per shared node."""
    results: Dict[Expr, object] = {}
    stack = [(e, False)]
    while stack:
        node, ready = stack.pop()
        if node in results:
            continue
        kids = [a for a in node.args if isinstance(a, Expr)]
        if ready:
            results[node] = visit(node, *(results[k] for k in kids))
        else:
            stack.append((node, True))
            for k in reversed(kids):
                if k not in results:
                    stack.append((k, False))
    return results[e]


def free_symbols(e: Expr) -> frozenset:
    """Names of all variables and parameters in ``e``."""

    def visit(node, *kids):
        if isinstance(node, Symbol):
            return frozenset({node.name})
        out = frozenset()
        for k in kids:
            out |= k
        return out

    return postvisit(as_expr(e), visit)


def _rebuild(node: Expr, *kids: Expr) -> Expr:
    if isinstance(node, Add):
        return add(*kids)
    if isinstance(node, Mul):
        return mul(*kids)
    if isinstance(node, Pow):
        return power(kids[0], node.exponent)
    if isinstance(node, Func):
        return func(node.name, kids[0])
    return node


def simplify_basic(e) -> Expr:
    """
    Semantics-preserving normalization: rebuild through the smart constructors.

    Flattens sums and products, folds rational constants, drops zero terms and
    folds exactly known constant functions. Never needed for correctness.
    """
    return postvisit(as_expr(e), _rebuild)


def substitute(e, mapping: Mapping) -> Expr:
    """
    Replace symbols by expressions or numbers.

    Args:
        e: Expression
        mapping: symbol or symbol name -> replacement

    Returns:
        Expr: The substituted and re-normalized expression
    """
    table = {}
    for key, value in mapping.items():
        name = key.name if isinstance(key, Symbol) else key
        table[name] = as_expr(value)

    def visit(node, *kids):
        if isinstance(node, Symbol) and node.name in table:
            return table[node.name]
        return _rebuild(node, *kids)

    return postvisit(as_expr(e), visit)


# ---------------------------------------------------------------- evaluation

Bindings = Mapping[str, object]


def _to_array(value):
    arr = np.asarray(value)
    if np.iscomplexobj(arr):
        return arr.astype(complex)
    return arr.astype(float)


def _real_domain_fails(values) -> bool:
    return np.iscomplexobj(values) and np.any(np.imag(values) != 0)


def _apply_func(node: Func, u):
    name = node.name
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if name == "exp":
            return np.exp(u)
        if name == "log":
            if np.any(u == 0):
                raise PoleError(node, "log of zero")
            if not np.iscomplexobj(u) and np.any(u < 0):
                return np.log(u.astype(complex))
            return np.log(u)
        if name in ("sin", "cos", "tan", "sec"):
            if name == "tan" or name == "sec":
                c = np.cos(u)
                if np.any(c == 0):
                    raise PoleError(node, f"pole of {name}")
                return np.tan(u) if name == "tan" else 1.0 / c
            return np.sin(u) if name == "sin" else np.cos(u)
        if name in ("cot", "csc"):
            s = np.sin(u)
            if np.any(s == 0):
                raise PoleError(node, f"pole of {name}")
            return np.cos(u) / s if name == "cot" else 1.0 / s
        if name == "sinh":
            return np.sinh(u)
        if name == "cosh":
            return np.cosh(u)
        if name == "tanh":
            return np.tanh(u)
        if name == "sech":
            return 1.0 / np.cosh(u)
        if name in ("coth", "csch"):
            s = np.sinh(u)
            if np.any(s == 0):
                raise PoleError(node, f"pole of {name}")
            return np.cosh(u) / s if name == "coth" else 1.0 / s
        if name == "arctan":
            return np.arctan(u)
        if name == "arctanh":
            if np.any(np.abs(u) == 1):
                raise PoleError(node, "arctanh at +-1")
            if not np.iscomplexobj(u) and np.any(np.abs(u) > 1):
                return np.arctanh(u.astype(complex))
            return np.arctanh(u)
    raise SymexprError(f"cannot evaluate function '{name}'")


def evaluate(e, bindings: Bindings):
    """
    Numeric value of ``e`` at ``bindings`` (scalars or numpy arrays).

    Complex arithmetic is used where the tree contains ``I``, complex bindings,
    or fractional powers of negative bases (principal branch). The radial ``x``
    is derived from ``x1, x2, x3`` when not bound directly.

    Args:
        e: Expression
        bindings: symbol name -> value

    Returns:
        numpy scalar or array

    Raises:
        UnboundSymbolError: If a free symbol has no value
        PoleError: At a pole; the error names the offending subexpression
    """
    e = as_expr(e)
    env = {k: _to_array(v) for k, v in bindings.items()}
    if "x" not in env and all(c in env for c in CARTESIAN):
        env["x"] = np.sqrt(sum(env[c] ** 2 for c in CARTESIAN))

    def visit(node, *kids):
        if isinstance(node, Const):
            return np.float64(float(node.value))
        if node is I:
            return np.complex128(1j)
        if isinstance(node, Symbol):
            if node.name not in env:
                raise UnboundSymbolError(node.name)
            return env[node.name]
        if isinstance(node, Add):
            total = kids[0]
            for k in kids[1:]:
                total = total + k
            return total
        if isinstance(node, Mul):
            prod = kids[0]
            for k in kids[1:]:
                prod = prod * k
            return prod
        if isinstance(node, Pow):
            b = np.asarray(kids[0])
            p = node.exponent
            if p < 0 and np.any(b == 0):
                raise PoleError(node.base, "division by zero")
            if p.denominator == 1:
                return b ** int(p) if p > 0 else 1.0 / b ** int(-p)
            if not np.iscomplexobj(b) and np.any(b < 0):
                b = b.astype(complex)
            return b ** float(p)
        if isinstance(node, Func):
            return _apply_func(node, np.asarray(kids[0]))
        raise SymexprError(f"cannot evaluate {type(node).__name__}")

    return _scalarize(postvisit(e, visit))


def _scalarize(value):
    arr = np.asarray(value)
    if arr.ndim == 0:
        return arr[()]
    return arr


# ---------------------------------------------------------------- text forms

def to_sexpr(e) -> str:
    """Deterministic prefix notation, e.g. ``(* 2 (^ x 2))``."""

    def visit(node, *kids):
        if isinstance(node, Const):
            return str(node.value)
        if node is I:
            return "I"
        if isinstance(node, Symbol):
            return node.name
        if isinstance(node, Add):
            return "(+ " + " ".join(kids) + ")"
        if isinstance(node, Mul):
            return "(* " + " ".join(kids) + ")"
        if isinstance(node, Pow):
            return f"(^ {kids[0]} {node.exponent})"
        return f"({node.name} {kids[0]})"

    return postvisit(as_expr(e), visit)


def _tokens(text: str) -> List[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def from_sexpr(text: str) -> Expr:
    """Parse the output of ``to_sexpr``."""
    tokens = _tokens(text)
    if not tokens:
        raise ParseError("empty expression")
    pos = 0

    def atom(tok: str) -> Expr:
        if tok == "I":
            return I
        try:
            return const(Fraction(tok))
        except ValueError:
            pass
        if not tok.replace("_", "").isalnum():
            raise ParseError(f"bad token '{tok}'")
        return Var(tok) if tok in VARIABLE_NAMES else Param(tok)

    def parse() -> Expr:
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if tok == ")":
            raise ParseError("unexpected ')'")
        if tok != "(":
            return atom(tok)
        if pos >= len(tokens):
            raise ParseError("unexpected end of input")
        head = tokens[pos]
        pos += 1
        args = []
        while pos < len(tokens) and tokens[pos] != ")":
            if head == "^" and len(args) == 1:
                try:
                    args.append(Fraction(tokens[pos]))
                except ValueError as err:
                    raise ParseError(f"bad exponent '{tokens[pos]}'") from err
                pos += 1
            else:
                args.append(parse())
        if pos >= len(tokens):
            raise ParseError("missing ')'")
        pos += 1
        if head == "+":
            return add(*args)
        if head == "*":
            return mul(*args)
        if head == "^":
            if len(args) != 2:
                raise ParseError("'^' takes a base and an exponent")
            return power(args[0], args[1])
        if head in FUNCTIONS:
            if len(args) != 1:
                raise ParseError(f"'{head}' takes one argument")
            return func(head, args[0])
        raise ParseError(f"unknown head '{head}'")

    result = parse()
    if pos != len(tokens):
        raise ParseError("trailing tokens")
    return result


_GREEK = {"alpha": "α", "kappa": "κ", "omega": "ω", "nu": "ν", "mu": "μ", "lam": "λ"}


def to_infix(e) -> str:
    """Readable infix rendering for tables; not parseable."""

    def visit(node, *kids):
        if isinstance(node, Const):
            v = node.value
            return str(v) if v >= 0 else f"({v})"
        if node is I:
            return "i"
        if isinstance(node, Symbol):
            return _GREEK.get(node.name, node.name)
        if isinstance(node, Add):
            return "(" + " + ".join(kids) + ")"
        if isinstance(node, Mul):
            return "·".join(kids)
        if isinstance(node, Pow):
            p = node.exponent
            if p == Fraction(1, 2):
                return f"√{kids[0]}"
            if p == -1:
                return f"1/{kids[0]}"
            return f"{kids[0]}^{p}" if p > 0 else f"{kids[0]}^({p})"
        return f"{node.name}({kids[0]})"

    return postvisit(as_expr(e), visit)


# ---------------------------------------------------------------- sampling

def sample_points(
    n: int,
    seed: int = 0,
    cartesian: bool = False,
    low: float = 0.3,
    high: float = 3.0,
    avoid: Sequence[float] = (),
    margin: float = 1e-2,
) -> Dict[str, np.ndarray]:
    """
    Seeded random evaluation points.

    Radii are drawn uniformly from ``[low, high]`` and rejected within
    ``margin`` of any radius in ``avoid``. Cartesian points are the radius times
    a random unit vector; the radial ``x`` is bound alongside.

    Returns:
        Dict[str, np.ndarray]: bindings for ``x`` (and ``x1..x3``)

    Raises:
        SymexprError: If the admissible interval is empty
    """
    rng = np.random.default_rng(seed)
    radii: List[float] = []
    tries = 0
    while len(radii) < n:
        tries += 1
        if tries > 100 * n + 1000:
            raise SymexprError("no admissible sample radii: singular radii cover the interval")
        r = rng.uniform(low, high)
        if all(abs(r - s) > margin for s in avoid):
            radii.append(r)
    r = np.array(radii)
    points = {"x": r}
    if cartesian:
        u = rng.normal(size=(n, 3))
        u /= np.linalg.norm(u, axis=1)[:, None]
        for k, name in enumerate(CARTESIAN):
            points[name] = r * u[:, k]
    return points


def relative_error(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return np.abs(a - b) / scale


def equivalent(
    a,
    b,
    params: Optional[Mapping[str, object]] = None,
    points: int = 50,
    tol: float = 1e-9,
    seed: int = 0,
    avoid: Sequence[float] = (),
    extra: Optional[Mapping[str, object]] = None,
) -> bool:
    """
    Probabilistic identity test: ``a`` and ``b`` agree at random points.

    Args:
        a, b: Expressions
        params: Parameter bindings
        points: Number of random points
        tol: Relative tolerance
        seed: Sampler seed
        avoid: Singular radii to keep away from
        extra: Further fixed bindings (e.g. ``y``)

    Returns:
        bool: True if every point agrees within ``tol``
    """
    a, b = as_expr(a), as_expr(b)
    names = free_symbols(a) | free_symbols(b)
    cartesian = any(c in names for c in CARTESIAN)
    env: Dict[str, object] = dict(sample_points(points, seed, cartesian=cartesian, avoid=avoid))
    if "y" in names and (extra is None or "y" not in extra):
        env["y"] = env["x"]
    env.update(params or {})
    env.update(extra or {})
    va = np.broadcast_to(evaluate(a, env), (points,))
    vb = np.broadcast_to(evaluate(b, env), (points,))
    err = relative_error(va, vb)
    ok = bool(np.all(err <= tol))
    if not ok:
        logger.debug("equivalence failed, max relative error %.3e", float(np.max(err)))
    return ok
