"""
Finite-difference oracle for the radial and effective problems.

Both problems are discretized as a symmetric-definite pencil A u = λ B u
with a three-point finite-volume stencil on (possibly graded) nodes and
Dirichlet ends. The results are independent of the closed-form engine and
are used to check it.
"""

import logging
import math
from pathlib import Path
from typing import Callable, Dict, List, Literal, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq
from scipy.sparse import diags
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh

from catalog import FamilyId, PotentialClass, Route, build_system, get_entry
from config import RunConfig
from reduction import (
    EffectiveProblem,
    RadialProblem,
    ReductionError,
    classify_effective,
    reduce_family,
    sample_range,
)
from symexpr import PoleError, evaluate, sample_points

logger = logging.getLogger(__name__)

TAIL_TOL = 1e-8
BOUND_TAIL = 1e-6


class SolverError(Exception):
    """The discretized problem cannot be set up or solved."""


class GridMismatchError(SolverError):
    """Samples do not live on the grid they are integrated over."""


# ---------------------------------------------------------------- grid

class Grid(BaseModel):
    """
    Nodes of a finite-difference mesh.

    ``n`` counts the interior nodes; the two ends carry Dirichlet conditions.
    In the ``arctan`` coordinate the mesh is uniform in θ with x = s·tan θ,
    so x_max may be infinite. ``grading`` > 1 clusters nodes near x_min.
    """

    model_config = ConfigDict(frozen=True)

    x_min: float
    x_max: float
    n: int = Field(ge=16)
    grading: float = Field(default=1.0, ge=1.0)
    coordinate: Literal["x", "arctan", "y"] = "x"
    scale: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _check_range(self) -> "Grid":
        if not self.x_max > self.x_min:
            raise ValueError(f"empty grid range ({self.x_min}, {self.x_max})")
        if self.coordinate == "arctan" and self.x_min < 0:
            raise ValueError("the arctan coordinate needs x_min >= 0")
        if self.coordinate != "arctan" and not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("only the arctan coordinate takes an infinite end")
        return self

    def bounds(self) -> Tuple[float, float]:
        """Range of the computational coordinate."""
        if self.coordinate == "arctan":
            return math.atan(self.x_min / self.scale), math.atan(self.x_max / self.scale)
        return self.x_min, self.x_max

    def mesh(self) -> np.ndarray:
        """All n + 2 nodes of the computational coordinate, ends included."""
        lo, hi = self.bounds()
        s = np.linspace(0.0, 1.0, self.n + 2) ** self.grading
        return lo + (hi - lo) * s

    def jacobian(self) -> np.ndarray:
        """dx/dt at the interior nodes."""
        t = self.mesh()[1:-1]
        if self.coordinate == "arctan":
            return self.scale / np.cos(t) ** 2
        return np.ones_like(t)

    def nodes(self) -> np.ndarray:
        """Interior nodes in the physical coordinate (x, or y for effective problems)."""
        t = self.mesh()[1:-1]
        if self.coordinate == "arctan":
            return self.scale * np.tan(t)
        return t

    def volumes(self) -> np.ndarray:
        """Control-volume widths in the computational coordinate."""
        h = np.diff(self.mesh())
        return (h[:-1] + h[1:]) / 2

    def quadrature(self) -> np.ndarray:
        """
        Interior weights q_i with ∫ g dx ≈ Σ q_i g(x_i) for g vanishing at both ends.

        This is the trapezoid rule on the full mesh with the end samples set
        to zero, the Dirichlet case. A g that does not vanish loses half a
        cell at each end.
        """
        return self.volumes() * self.jacobian()

    def tail(self, fraction: float = 0.1) -> np.ndarray:
        """Mask of the interior nodes in the last ``fraction`` of the computational range."""
        lo, hi = self.bounds()
        return self.mesh()[1:-1] > hi - fraction * (hi - lo)

    def halved(self) -> "Grid":
        return self.model_copy(update={"n": max(16, self.n // 2)})

    def resized(self, n: int) -> "Grid":
        return self.model_copy(update={"n": n})


def inner_product(u, v, w, grid: Grid) -> float:
    """
    Weighted product ⟨u|v⟩ = ∫ ū v w dx by nodal quadrature.

    Dirichlet ends contribute nothing, so this is the trapezoid rule on the
    full mesh.

    Raises:
        GridMismatchError: If the samples do not match the grid nodes
    """
    u, v = np.asarray(u), np.asarray(v)
    w = np.broadcast_to(np.asarray(w, dtype=float), (grid.n,))
    if u.shape != (grid.n,) or v.shape != (grid.n,):
        raise GridMismatchError(f"samples of shape {u.shape} and {v.shape} on a grid of {grid.n} nodes")
    return float(np.real(np.sum(np.conj(u) * v * w * grid.quadrature())))


# ---------------------------------------------------------------- pencil

Problem = Union[RadialProblem, EffectiveProblem]


class Pencil(BaseModel):
    """Tridiagonal A, diagonal B and the factor turning u into physical samples."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    diagonal: np.ndarray
    off: np.ndarray
    mass: np.ndarray
    to_physical: np.ndarray

    def is_symmetric_definite(self) -> bool:
        return bool(np.all(np.isfinite(self.diagonal)) and np.all(self.mass > 0))


def _coefficients(problem: Problem, grid: Grid, energy: Optional[float]) -> Tuple[np.ndarray, np.ndarray]:
    """q and w of -φ'' + q φ = λ w φ at the grid nodes."""
    z = grid.nodes()
    try:
        if isinstance(problem, EffectiveProblem):
            if grid.coordinate != "y":
                raise SolverError("effective problems are solved in the y coordinate")
            q = np.asarray(problem.v_eff_at(z, energy), dtype=float)
            return q, np.ones_like(z)
        if grid.coordinate == "y":
            raise SolverError("radial problems are solved in x or arctan coordinates")
        c = problem.coefficients(energy)
        f = c.f(z)
        if np.any(~np.isfinite(f)) or np.any(f <= 0):
            bad = z[~(f > 0)][0]
            raise SolverError(f"the mass f is not positive on the grid (x = {bad:.6g})")
        return c.potential(z) / f, 1.0 / f
    except PoleError as err:
        raise SolverError(f"grid node at a pole: {err}") from err


def assemble(problem: Problem, grid: Grid, energy: Optional[float] = None) -> Pencil:
    """
    Finite-volume pencil of the problem on the grid.

    In the arctan coordinate u = φ/√x'(θ) solves -u'' + (x'² q - 1) u = λ x'² w u.

    Raises:
        SolverError: If f <= 0 on the grid or a node falls on a pole
    """
    q, w = _coefficients(problem, grid, energy)
    g = grid.jacobian()
    if grid.coordinate == "arctan":
        q, w = g**2 * q - 1.0, g**2 * w
    if not np.all(np.isfinite(q)):
        raise SolverError("potential is not finite on the grid")
    h = np.diff(grid.mesh())
    vol = grid.volumes()
    pencil = Pencil(
        diagonal=1 / h[:-1] + 1 / h[1:] + vol * q,
        off=-1 / h[1:-1],
        mass=vol * w,
        to_physical=np.sqrt(g),
    )
    if not pencil.is_symmetric_definite():
        raise SolverError("the assembled pencil is not symmetric-definite")
    return pencil


def _orient(u: np.ndarray) -> np.ndarray:
    """Fix the eigenvector signs: largest entry positive."""
    idx = np.argmax(np.abs(u), axis=0)
    return u * np.sign(u[idx, np.arange(u.shape[1])])


def eigen_pencil(pencil: Pencil, k: int, refine: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lowest k eigenpairs of A u = λ B u.

    The tridiagonal B^(-1/2) A B^(-1/2) is solved first; for non-uniform B the
    values are refined by shift-invert Lanczos from a fixed start vector.

    Returns:
        Tuple: eigenvalues (ascending) and B-orthonormal vectors as columns
    """
    size = len(pencil.diagonal)
    if k < 1 or k > size // 4:
        raise SolverError(f"cannot resolve {k} levels on {size} nodes")
    root = np.sqrt(pencil.mass)
    d = pencil.diagonal / pencil.mass
    e = pencil.off / (root[:-1] * root[1:])
    # bisection to full relative precision; graded weights make |d| span many decades
    values, vectors = eigh_tridiagonal(d, e, select="i", select_range=(0, k - 1), tol=1e-300)
    u = vectors / root[:, None]
    if refine and not np.allclose(pencil.mass, pencil.mass.mean(), rtol=1e-12):
        gap = values[1] - values[0] if k > 1 else max(1.0, abs(values[0]))
        sigma = values[0] - 0.5 * gap
        A = diags([pencil.off, pencil.diagonal, pencil.off], [-1, 0, 1], format="csc")
        B = diags(pencil.mass, format="csc")
        try:
            refined, rv = eigsh(A, k=k, M=B, sigma=sigma, which="LM", v0=np.ones(size))
            order = np.argsort(refined)
            refined, rv = refined[order], rv[:, order]
            if np.allclose(refined, values, rtol=1e-6, atol=1e-9):
                values, u = refined, rv
            else:
                logger.debug("shift-invert landed on other levels; keeping the tridiagonal values")
        except (ArpackNoConvergence, ArpackError) as err:
            logger.debug("shift-invert refinement failed: %s", err)
    return values, _orient(u)


# ---------------------------------------------------------------- solver

class EigenResult(BaseModel):
    """
    Lowest levels of a discretized problem.

    ``vectors`` holds one column per level, sampled at ``grid.nodes()`` and
    orthonormal under ``inner_product`` with the problem's weight. ``x`` and
    ``phi`` are the radial samples (for effective problems φ = |f|^(1/4) Φ).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    eigenvalues: np.ndarray
    vectors: np.ndarray
    grid: Grid
    tail_mass: np.ndarray
    errors: Optional[np.ndarray] = None
    extrapolated: Optional[np.ndarray] = None
    x: Optional[np.ndarray] = None
    phi: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def best(self) -> np.ndarray:
        """Extrapolated eigenvalues when available."""
        return self.extrapolated if self.extrapolated is not None else self.eigenvalues


def _tail_mass(pencil: Pencil, u: np.ndarray, grid: Grid) -> np.ndarray:
    density = u**2 * pencil.mass[:, None]
    return density[grid.tail()].sum(axis=0) / density.sum(axis=0)


def _solve_once(problem: Problem, grid: Grid, k: int, energy: Optional[float], refine: bool) -> EigenResult:
    pencil = assemble(problem, grid, energy)
    values, u = eigen_pencil(pencil, k, refine)
    vectors = u * pencil.to_physical[:, None]
    result = EigenResult(eigenvalues=values, vectors=vectors, grid=grid, tail_mass=_tail_mass(pencil, u, grid))
    if isinstance(problem, EffectiveProblem):
        y = grid.nodes()
        x = np.asarray(problem.x_at(y), dtype=float)
        mass = np.abs(problem.radial.coefficients().f(x))
        result.x, result.phi = x, mass[:, None] ** 0.25 * vectors
    else:
        result.x, result.phi = grid.nodes(), vectors
    return result


def solve_radial_fd(
    problem: Problem,
    k: int = 1,
    grid: Optional[Grid] = None,
    energy: Optional[float] = None,
    richardson: bool = True,
    refine: bool = True,
    config: Optional[RunConfig] = None,
) -> EigenResult:
    """
    Lowest k levels of a radial or effective problem.

    A RadialProblem is solved as -φ'' + (l(l+1)/x² + V/f) φ = λ φ/f; an
    EffectiveProblem as -Φ'' + V_eff Φ = λ Φ in y. Swapped problems need
    ``energy`` to fix the E inside their potential.

    Args:
        problem: Radial or effective problem
        k: Number of levels
        grid: Mesh; chosen from ``config`` when omitted
        energy: Value of E inside the potential, if any
        richardson: Also solve on n/2 nodes for an error estimate
        refine: Shift-invert refinement for non-uniform weights
        config: Grid defaults

    Returns:
        EigenResult: levels, states, tail mass and error estimates

    Raises:
        SolverError: If f <= 0 on the grid or k is not resolvable
    """
    if k < 1:
        raise SolverError("k must be >= 1")
    config = config or RunConfig()
    grid = grid or default_grid(problem, k, config, energy)
    result = _solve_once(problem, grid, k, energy, refine)
    if richardson:
        coarse = _solve_once(problem, grid.halved(), k, energy, refine)
        diff = result.eigenvalues - coarse.eigenvalues
        result.errors = np.abs(diff) / 3
        result.extrapolated = result.eigenvalues + diff / 3
    worst = float(result.tail_mass.max())
    if worst > TAIL_TOL:
        logger.warning("tail mass %.2e exceeds %.0e on (%g, %g)", worst, TAIL_TOL, grid.x_min, grid.x_max)
    return result


def default_grid(problem: Problem, k: int, config: RunConfig, energy: Optional[float] = None) -> Grid:
    """
    Mesh for a problem from the run settings.

    Finite ends are used as they are; an infinite end is truncated at a
    length doubled until the k-th state's tail mass drops below 1e-8.
    """
    scale = config.x_scale
    if isinstance(problem, EffectiveProblem):
        coordinate, (lo, hi) = "y", problem.domain_y
        if math.isinf(lo):
            raise SolverError("effective problems on the whole line are not discretized")
    else:
        coordinate = "x" if config.coordinate in ("auto", "x") else config.coordinate
        if coordinate == "y":
            raise SolverError("radial problems are solved in x or arctan coordinates")
        lo, hi = problem.domain
    grid = Grid(
        x_min=lo,
        x_max=hi if math.isfinite(hi) or coordinate == "arctan" else lo + 10 * scale,
        n=config.grid_n,
        grading=config.grading,
        coordinate=coordinate,
        scale=scale,
    )
    if math.isfinite(hi) or coordinate == "arctan":
        return grid
    if isinstance(problem, EffectiveProblem) and problem.swapped is not None and energy is None:
        return grid.model_copy(update={"x_max": lo + 40 * scale})
    probe = grid.resized(min(config.grid_n, 1000))
    for _ in range(8):
        try:
            tails = _solve_once(problem, probe, k, energy, refine=False).tail_mass
        except SolverError:
            break
        if tails.max() < TAIL_TOL:
            break
        probe = probe.model_copy(update={"x_max": lo + 2 * (probe.x_max - lo)})
    logger.debug("truncated the %s range at %g", coordinate, probe.x_max)
    return grid.model_copy(update={"x_max": probe.x_max})


def convergence_order(
    problem: Problem,
    level: int = 0,
    sizes: Sequence[int] = (500, 1000, 2000),
    grid: Optional[Grid] = None,
    energy: Optional[float] = None,
    config: Optional[RunConfig] = None,
) -> float:
    """
    Observed order p of the eigenvalue error from three successively doubled grids.

    p = log2(|λ1 - λ2| / |λ2 - λ3|), ≈ 2 for the three-point stencil.
    """
    if len(sizes) != 3:
        raise SolverError("convergence order needs three grids")
    config = config or RunConfig()
    base = grid or default_grid(problem, level + 1, config, energy)
    values = [
        _solve_once(problem, base.resized(n), level + 1, energy, refine=True).eigenvalues[level] for n in sizes
    ]
    a, b = abs(values[0] - values[1]), abs(values[1] - values[2])
    if b == 0:
        raise SolverError("eigenvalue did not change under refinement")
    return math.log(a / b, sizes[1] / sizes[0])


# ---------------------------------------------------------------- two-step fixed point

class FixedPoint(BaseModel):
    """E at which the n-th level of a swapped problem equals its fixed eigenvalue."""

    energy: float
    level: float
    target: float
    residual: float
    roots: List[float]
    consistency: float
    tail_mass: float


def _swapped(e: EffectiveProblem):
    if e.swapped is None:
        raise SolverError("fixed points apply to two-step problems only")
    return float(np.real(evaluate(e.eigenvalue, e.radial.params)))


# relative |λ_n(E) - eigenvalue| at which a supplied guess is taken as the root
GUESS_TOL = 1e-10

# half-widths, relative to max(1, |guess|), of the nested scans around a guess
_GUESS_SPANS = (1e-4, 1e-3, 1e-2, 0.05, 0.25, 1.0)


def _truncated(e: EffectiveProblem) -> bool:
    """True when the upper end of the y range is cut off by the mesh."""
    return math.isinf(e.domain_y[1])


def _scan_energies(guess: Optional[float], window: float) -> List[np.ndarray]:
    if guess is None:
        return [np.linspace(-window, window, 161)]
    scale = max(1.0, abs(guess))
    return [guess + np.linspace(-w * scale, w * scale, 33) for w in _GUESS_SPANS]


def two_step_fixed_point(
    e: EffectiveProblem,
    n: int,
    grid: Optional[Grid] = None,
    guess: Optional[float] = None,
    window: float = 50.0,
    config: Optional[RunConfig] = None,
) -> FixedPoint:
    """
    Solve λ_n(E) = eigenvalue for E, λ_n being the n-th level of -Φ'' + V_eff(y; E).

    A guess whose gap is already below GUESS_TOL is returned as it is.
    Otherwise E is scanned around ``guess`` on nested windows, widest last,
    stopping at the first window with an accepted root; without a guess one
    fine scan covers ±window. Sign changes are refined with brentq. When the
    mesh truncates an infinite y range, roots whose state leaks into the cut
    are dropped. With a guess the nearest root wins; otherwise Rosen-Morse
    problems take the lowest root and the others the highest.

    Raises:
        SolverError: If no normalizable root is found
    """
    target = _swapped(e)
    config = config or RunConfig()
    if grid is None:
        grid = default_grid(e, n + 1, config, energy=guess)
    truncated = _truncated(e)

    def level(E: float) -> EigenResult:
        return _solve_once(e, grid, n + 1, E, refine=True)

    def gap(E: float) -> float:
        return float(level(E).eigenvalues[n] - target)

    def safe_gap(E: float) -> float:
        try:
            return gap(E)
        except SolverError:
            return float("nan")

    def bound(E: float) -> bool:
        if not truncated or level(E).tail_mass[n] < BOUND_TAIL:
            return True
        # retry on a range truncated for this E
        wider = default_grid(e, n + 1, config, energy=E)
        if wider.x_max <= grid.x_max:
            return False
        return _solve_once(e, wider, n + 1, E, refine=False).tail_mass[n] < BOUND_TAIL

    roots: List[float] = []
    if guess is not None and abs(safe_gap(guess)) <= GUESS_TOL * max(1.0, abs(target)) and bound(guess):
        roots.append(float(guess))
    for energies in ([] if roots else _scan_energies(guess, window)):
        values = [safe_gap(E) for E in energies]
        for a, b, fa, fb in zip(energies[:-1], energies[1:], values[:-1], values[1:]):
            if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0:
                continue
            root = float(a) if fa == 0 else brentq(gap, a, b, xtol=1e-13, rtol=1e-13)
            if bound(root) and all(abs(root - r) > 1e-9 * max(1.0, abs(r)) for r in roots):
                roots.append(float(root))
        if roots:
            break
        logger.debug("%s n=%d: no fixed point on [%g, %g]", e.family, n, energies[0], energies[-1])
    if not roots:
        raise SolverError(f"no normalizable fixed point for n={n} of {e.family}")
    if guess is not None:
        energy = min(roots, key=lambda r: abs(r - guess))
    else:
        tag = classify_effective(e).tag
        energy = min(roots) if tag == PotentialClass.ROSEN_MORSE else max(roots)
    final = level(energy)
    return FixedPoint(
        energy=energy,
        level=float(final.eigenvalues[n]),
        target=target,
        residual=abs(float(final.eigenvalues[n]) - target),
        roots=roots,
        consistency=e.swapped.consistency_residual(),
        tail_mass=float(final.tail_mass[n]),
    )


# ---------------------------------------------------------------- family spectra

class NumericLevel(BaseModel):
    n: int
    energy: float
    error: Optional[float] = None
    extrapolated: Optional[float] = None
    tail_mass: float = 0.0


class NumericSpectrum(BaseModel):
    """Numeric levels of one family at fixed l, with radial samples for plotting."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    family: str
    params: Dict[str, float]
    l: int
    route: Route
    coordinate: str
    levels: List[NumericLevel]
    x: Optional[np.ndarray] = None
    phi: Optional[np.ndarray] = None

    def energies(self) -> List[float]:
        return [lvl.extrapolated if lvl.extrapolated is not None else lvl.energy for lvl in self.levels]


def _direct_target(e: EffectiveProblem, coordinate: str = "auto") -> Problem:
    """The radial pencil on an outward (0, ∞) map, otherwise the effective problem in y."""
    if coordinate == "y":
        return e
    if coordinate in ("x", "arctan"):
        return e.radial
    if e.orientation > 0 and math.isinf(e.domain_x[1]) and math.isinf(e.domain_y[1]):
        return e.radial
    return e


def numeric_spectrum(
    family: Union[FamilyId, str],
    params: Mapping[str, object],
    l: int,
    k: int,
    config: Optional[RunConfig] = None,
    guesses: Optional[Sequence[float]] = None,
) -> NumericSpectrum:
    """
    Lowest k levels of a catalog family at angular momentum l, computed numerically.

    Direct families are solved as a pencil (radial in x, or effective in y on
    a finite Liouville range). Two-step families go through the swapped
    problem and its fixed point, one level at a time.

    Args:
        family: Catalog id
        params: α and κ
        l: Angular momentum
        k: Number of levels
        config: Grid settings
        guesses: Optional closed-form energies used to bracket two-step roots

    Raises:
        SolverError: If the family has no discrete spectrum or the solve fails
    """
    config = config or RunConfig()
    entry = get_entry(family)
    classes = entry.route.classes
    if not classes:
        raise SolverError(f"{entry.id} has no discrete spectrum")
    route = Route.DIRECT if Route.DIRECT in classes else Route.TWO_STEP
    try:
        e = reduce_family(build_system(entry.id, params), l, route)
    except ReductionError as err:
        raise SolverError(str(err)) from err
    floats = {key: float(v) for key, v in params.items()}

    if route == Route.DIRECT:
        target = _direct_target(e, config.coordinate)
        result = solve_radial_fd(target, k, config=config)
        levels = [
            NumericLevel(
                n=i,
                energy=float(result.eigenvalues[i]),
                error=float(result.errors[i]),
                extrapolated=float(result.extrapolated[i]),
                tail_mass=float(result.tail_mass[i]),
            )
            for i in range(k)
        ]
        return NumericSpectrum(
            family=str(entry.id), params=floats, l=l, route=route, coordinate=result.grid.coordinate,
            levels=levels, x=result.x, phi=result.phi,
        )

    probe = guesses[k - 1] if guesses is not None and len(guesses) >= k else None
    grid = default_grid(e, k, config, energy=probe)
    levels, columns = [], []
    for i in range(k):
        guess = guesses[i] if guesses is not None and i < len(guesses) else None
        fine = two_step_fixed_point(e, i, grid, guess, config=config)
        coarse = two_step_fixed_point(e, i, grid.halved(), fine.energy, config=config)
        diff = fine.energy - coarse.energy
        levels.append(NumericLevel(
            n=i, energy=fine.energy, error=abs(diff) / 3, extrapolated=fine.energy + diff / 3,
            tail_mass=fine.tail_mass,
        ))
        state = _solve_once(e, grid, i + 1, fine.energy, refine=True)
        columns.append(state.phi[:, i])
    return NumericSpectrum(
        family=str(entry.id), params=floats, l=l, route=route, coordinate="y",
        levels=levels, x=state.x, phi=np.column_stack(columns),
    )


# ---------------------------------------------------------------- residuals and output

class ResidualReport(BaseModel):
    """Worst relative residual of the radial equation over the sample points."""

    residual: float
    worst_x: float
    energy: float
    points: int


def _second_derivative(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Five-point central stencil, O(h⁴)."""
    return (-fn(x + 2 * h) + 16 * fn(x + h) - 30 * fn(x) + 16 * fn(x - h) - fn(x - 2 * h)) / (12 * h**2)


def ode_residual(
    state,
    r: RadialProblem,
    energy: Optional[float] = None,
    points: int = 50,
    seed: int = 0,
    avoid: Optional[Sequence[float]] = None,
) -> ResidualReport:
    """
    Relative residual of a sampled state in -f φ'' + (f l(l+1)/x² + V) φ = E φ.

    Each point is scaled by |f φ''| + |(f l(l+1)/x² + V) φ| + |E φ|. The
    stencil step is 1e-3·max(x, 0.1), kept inside the domain.

    Args:
        state: Callable φ(x) with ``energy`` (and ``family``, ``params``) attributes
        r: Radial problem the state should solve
        energy: Overrides ``state.energy``
        points: Number of interior sample points
        seed: Seed of the sample points
        avoid: Radii to keep away from; the catalog's singular radii by default

    Raises:
        SolverError: If a sample point sits at a pole of the coefficients
    """
    E = float(state.energy if energy is None else energy)
    if avoid is None:
        family = getattr(state, "family", None)
        avoid = build_system(family, state.params).singular_radii if family else ()
    lo, hi = sample_range(r.domain)
    x = sample_points(points, seed, low=lo, high=hi, avoid=avoid)["x"]
    gap = np.minimum(x - r.domain[0], r.domain[1] - x)
    h = np.minimum(1e-3 * np.maximum(x, 0.1), gap / 4)
    c = r.coefficients()
    try:
        with np.errstate(all="ignore"):
            phi = np.asarray(state(x), dtype=float)
            kinetic = -c.f(x) * _second_derivative(state, x, h)
            potential = c.potential(x) * phi
    except PoleError as err:
        raise SolverError(f"a sample point sits at a pole: {err}") from err
    if not (np.all(np.isfinite(kinetic)) and np.all(np.isfinite(potential))):
        raise SolverError("a sample point sits at a pole of the radial coefficients")
    total = np.abs(kinetic + potential - E * phi)
    scale = np.abs(kinetic) + np.abs(potential) + np.abs(E * phi) + 1e-300
    ratio = total / scale
    worst = int(np.argmax(ratio))
    return ResidualReport(residual=float(ratio[worst]), worst_x=float(x[worst]), energy=E, points=points)


def dump_wavefunctions(x: np.ndarray, phi: np.ndarray, path: Union[str, Path]) -> Path:
    """
    Write an (x, φ_0, φ_1, ...) table as CSV for plotting.

    Returns:
        Path: The written file
    """
    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 1:
        phi = phi[:, None]
    if len(x) != phi.shape[0]:
        raise GridMismatchError(f"{len(x)} nodes but {phi.shape[0]} samples")
    path = Path(path)
    header = ",".join(["x"] + [f"phi_{i}" for i in range(phi.shape[1])])
    np.savetxt(path, np.column_stack([x, phi]), delimiter=",", header=header, comments="", fmt="%.12g")
    logger.info("wrote %d states to %s", phi.shape[1], path)
    return path
