"""Numerical oracles: threshold bisection, steering windows and displacement search.

All boundaries searched here are crossings in a single scalar (x at fixed t,
or t at fixed x), located by bracketed bisection.  The displacement search
for the collective direction B'D' -> A' is a multi-start Nelder-Mead with
hard separability constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize

from .correlations import ModePartition, gaussian_steering, ppt_min_eigenvalue
from .errors import BracketError, InvalidArgument
from .gaussian import TOL, CovarianceMatrix, restrict, symplectic_eigenvalues
from .protocols import (
    Direction,
    ProtocolParams,
    Stage,
    ThresholdKind,
    analytic_threshold,
    build_stage,
    closed_form_steering,
    optimal_displacements,
)

BISECT_TOL = 1e-8
OPTIMIZER_TOL = 1e-7
X_MAX = 1e4


class Criterion(str, Enum):
    PPT_BOUNDARY = "ppt_boundary"
    STEERING_ZERO = "steering_zero"


class SteeringPolicy(str, Enum):
    """Which steering across an ancilla split must vanish."""

    TO_ANCILLA = "to_ancilla"      # rest -> ancilla
    FROM_ANCILLA = "from_ancilla"  # ancilla -> rest
    BOTH = "both"


@dataclass(frozen=True)
class Split:
    """Ancilla mode versus the rest, evaluated on the state after ``stage``."""

    name: str
    stage: Stage
    ancilla: str
    rest: tuple[str, ...]

    @property
    def needs_four_modes(self) -> bool:
        return "D" in self.rest


SPLITS = {
    s.name: s
    for s in (
        Split("C-AB", Stage.STEP2, "C'", ("A'", "B")),
        Split("A-BC", Stage.STEP2, "A'", ("B", "C'")),
        Split("B-AC", Stage.STEP2, "B", ("A'", "C'")),
        Split("C-AB:step3", Stage.STEP3, "C''", ("A'", "B'")),
        Split("C-ABD", Stage.STEP3, "C''", ("A'", "B'", "D")),
    )
}


def get_split(split: Split | str) -> Split:
    if isinstance(split, Split):
        return split
    try:
        return SPLITS[split]
    except KeyError:
        raise InvalidArgument(f"unknown split {split!r}; known: {sorted(SPLITS)}") from None


class LinearFamily:
    """Reduced state of a split as an exactly affine function of the noise x."""

    def __init__(self, params: ProtocolParams, split: Split | str):
        split = get_split(split)
        if split.needs_four_modes and params.d_d is None:
            raise InvalidArgument(f"split {split.name} needs four-mode parameters")
        self.split = split
        keep = (split.ancilla,) + split.rest
        base = restrict(build_stage(params.with_x(0.0), split.stage).cm, keep)
        unit = restrict(build_stage(params.with_x(1.0), split.stage).cm, keep)
        self.modes = base.modes
        self.base = base.data
        self.slope = unit.data - base.data
        flip = np.ones(2 * len(keep))
        flip[2 * self.modes.index(split.ancilla) + 1] = -1.0
        self._flip = np.outer(flip, flip)

    def at(self, x: float) -> CovarianceMatrix:
        return CovarianceMatrix(self.modes, self.base + x * self.slope)

    def ppt_min(self, x: float) -> float:
        # same quantity as ppt_min_eigenvalue(self.at(x), ancilla), minus the validation
        return float(symplectic_eigenvalues(self._flip * (self.base + x * self.slope))[-1])

    def entangled(self, x: float, tol: float = TOL) -> bool:
        return self.ppt_min(x) < 1 - tol

    def ppt_boundary(self, lo: float, hi: float, tol: float = BISECT_TOL) -> float:
        """Noise at which the smallest PPT eigenvalue reaches 1, from a bracket [entangled, separable].

        Bisection on ``entangled`` stops about TOL / slope short of the crossing, which is
        large where the eigenvalue barely moves with x.  The sub-unity branch is smooth, so a
        quadratic through a few points on it is extrapolated to 1 instead.
        """
        x_b = bisect_predicate(self.entangled, lo, hi, tol)
        x_e = x_b - tol
        while x_e > lo and not self.entangled(x_e):
            x_e -= tol
        if x_e <= lo or x_e <= 0:
            return x_b
        d = 1e-4 * x_e
        slope = (self.ppt_min(x_e) - self.ppt_min(x_e - d)) / d
        if not slope > 0:
            return x_b
        h = min(1e-6 / slope, x_e / 8)
        xs = x_e - h * np.arange(4)
        ys = np.array([self.ppt_min(x) for x in xs]) - 1
        coef = np.polyfit(xs - x_e, ys, 2)
        roots = np.roots(coef)
        roots = roots[np.isreal(roots)].real
        if roots.size == 0:
            return x_b
        x_star = x_e + roots[np.argmin(np.abs(roots))]
        return float(x_star) if lo < x_star < hi else x_b

    def steering(self, x: float, policy: SteeringPolicy | str = SteeringPolicy.BOTH) -> float:
        policy = SteeringPolicy(policy)
        cm = self.at(x)
        part = ModePartition(self.split.rest, (self.split.ancilla,))
        vals = []
        if policy in (SteeringPolicy.TO_ANCILLA, SteeringPolicy.BOTH):
            vals.append(gaussian_steering(cm, part).value)
        if policy in (SteeringPolicy.FROM_ANCILLA, SteeringPolicy.BOTH):
            vals.append(gaussian_steering(cm, part.reversed()).value)
        return max(vals)

    def steerable(self, x: float, policy=SteeringPolicy.BOTH, tol: float = TOL) -> bool:
        return self.steering(x, policy) > tol


def bisect_predicate(pred: Callable[[float], bool], lo: float, hi: float, tol: float) -> float:
    """Boundary of a boolean predicate that differs at the two bracket ends."""
    if tol <= 0:
        raise InvalidArgument("tolerance must be positive")
    p_lo, p_hi = pred(lo), pred(hi)
    if p_lo == p_hi:
        raise BracketError(f"predicate does not flip on [{lo}, {hi}]: both ends give {p_lo}", p_lo, p_hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid) == p_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _params(t, d_b, d_d, direction=None):
    if d_b is None:
        d_b = optimal_displacements(Direction.A_TO_B, t)[0]
    if direction is None:
        direction = Direction.A_TO_B if d_d is None else Direction.A_TO_BD
    return ProtocolParams(t, 0.0, d_b, d_d, direction)


def bisect_threshold(
    criterion: Criterion | str,
    split: Split | str,
    t: float,
    bracket: tuple[float, float],
    tol: float = BISECT_TOL,
    *,
    d_b: float | None = None,
    d_d: float | None = None,
    policy: SteeringPolicy | str = SteeringPolicy.BOTH,
) -> float:
    """Noise x at which ``split`` turns separable (ppt_boundary) or nonsteerable (steering_zero).

    ``d_b`` defaults to the optimal one-way value tanh(2t) + 1.
    """
    criterion = Criterion(criterion)
    fam = LinearFamily(_params(t, d_b, d_d), split)
    lo, hi = bracket
    if criterion is Criterion.PPT_BOUNDARY:
        return fam.ppt_boundary(lo, hi, tol)
    return bisect_predicate(lambda x: fam.steerable(x, policy), lo, hi, tol)


def expanding_bracket(pred: Callable[[float], bool], start: float = 1.0, limit: float = 1e8) -> tuple[float, float]:
    """(0, hi) with pred(0) true and pred(hi) false, doubling hi from ``start``."""
    if not pred(0.0):
        raise BracketError("predicate already false at x = 0", False, None)
    hi = start
    while pred(hi):
        hi *= 2
        if hi > limit:
            raise BracketError(f"predicate still true at x = {hi}", True, True)
    return 0.0, hi


@dataclass(frozen=True)
class ThresholdCurve:
    criterion: Criterion
    split: str
    samples: tuple[tuple[float, float], ...]
    tolerance: float
    policy: str = ""

    @property
    def t(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def x(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])


def separable_threshold_curve(t_grid: Sequence[float], tol: float = BISECT_TOL) -> ThresholdCurve:
    """Bisected C'-(A'B) PPT boundary at the optimal one-way displacement."""
    samples = []
    for t in sorted(t_grid):
        fam = LinearFamily(_params(t, None, None), "C-AB")
        lo, hi = expanding_bracket(fam.entangled)
        samples.append((float(t), fam.ppt_boundary(lo, hi, tol)))
    return ThresholdCurve(Criterion.PPT_BOUNDARY, "C-AB", tuple(samples), tol)


def nonsteerable_threshold_curve(
    t_grid: Sequence[float],
    direction_policy: SteeringPolicy | str = SteeringPolicy.BOTH,
    tol: float = BISECT_TOL,
) -> ThresholdCurve:
    """Smallest x making C' and (A'B) mutually nonsteerable in step 2, per t."""
    policy = SteeringPolicy(direction_policy)
    samples = []
    for t in sorted(t_grid):
        if t <= 0:
            raise InvalidArgument("threshold curves need t > 0")
        fam = LinearFamily(_params(t, None, None), "C-AB")
        pred = lambda x: fam.steerable(x, policy)  # noqa: E731
        # separability implies nonsteerability, so the PPT boundary closes the bracket
        hi = analytic_threshold(ThresholdKind.SEP_C_AB, t) * (1 + 1e-6) + 1e-9
        if not pred(0.0):
            samples.append((float(t), 0.0))
            continue
        samples.append((float(t), bisect_predicate(pred, 0.0, hi, tol)))
    return ThresholdCurve(Criterion.STEERING_ZERO, "C-AB", tuple(samples), tol, policy.value)


# windows in t at fixed x ---------------------------------------------------

class AncillaPolicy(str, Enum):
    SEPARABLE = "separable"
    NONSTEERABLE = "nonsteerable"


def ancilla_splits(params: ProtocolParams) -> tuple[str, str]:
    """The two ancilla splits that must stay separable for these parameters."""
    return ("C-AB", "C-ABD" if params.d_d is not None else "C-AB:step3")


def split_state(params: ProtocolParams, split: Split | str) -> CovarianceMatrix:
    """Reduced state of (ancilla, rest) at the stage the split refers to."""
    split = get_split(split)
    if split.needs_four_modes and params.d_d is None:
        raise InvalidArgument(f"split {split.name} needs four-mode parameters")
    cm = build_stage(params, split.stage).cm
    return restrict(cm, (split.ancilla,) + split.rest)


def ancilla_ok(params: ProtocolParams, policy: AncillaPolicy | str = AncillaPolicy.SEPARABLE,
               tol: float = TOL) -> bool:
    """Whether the transmitted mode stays separable (or nonsteerable) from the rest at every stage."""
    policy = AncillaPolicy(policy)
    for name in ancilla_splits(params):
        split = get_split(name)
        red = split_state(params, split)
        if policy is AncillaPolicy.SEPARABLE:
            if ppt_min_eigenvalue(red, (split.ancilla,)) < 1 - tol:
                return False
        else:
            part = ModePartition(split.rest, (split.ancilla,))
            if (gaussian_steering(red, part).value > tol
                    or gaussian_steering(red, part.reversed()).value > tol):
                return False
    return True


def distributed_steering(params: ProtocolParams, policy: AncillaPolicy | str = AncillaPolicy.SEPARABLE) -> float:
    """A'->B' steering of the final state if the ancilla condition holds, else 0."""
    if not ancilla_ok(params, policy):
        return 0.0
    final = build_stage(params, Stage.STEP3).cm
    return gaussian_steering(final, ModePartition(("A'",), ("B'",))).value


def window_edge(pred: Callable[[float], bool], t_lo: float, t_hi: float, tol: float = 1e-6) -> float:
    return bisect_predicate(pred, t_lo, t_hi, tol)


def steering_window_end(x: float, policy: AncillaPolicy | str, t_hi: float = 1.5, tol: float = 1e-6) -> float:
    """Upper squeezing edge of the window where one-way steering is distributed at optimal d_B."""
    pred = lambda t: distributed_steering(ProtocolParams.optimal(t, x), policy) > TOL  # noqa: E731
    return window_edge(pred, 1e-3, t_hi, tol)


@dataclass(frozen=True)
class DB2Window:
    x: float
    t_lo: float
    t_hi: float

    @property
    def empty(self) -> bool:
        return not self.t_lo < self.t_hi


T_DB2_CAP = math.log(2) / 2


def verify_window_db2(x: float) -> DB2Window:
    """Squeezing window in which d_B = 2 distributes steering through a separable ancilla.

    Steering needs x below the d_B = 2 steering bound (which only exists for
    e^{2t} < 2); separability needs x above the d_B = 2 PPT bound.
    """
    if x <= 0:
        raise InvalidArgument("window needs x > 0")
    upper = lambda t: analytic_threshold(ThresholdKind.DB2_UPPER, t) - x  # noqa: E731
    lower = lambda t: analytic_threshold(ThresholdKind.DB2_LOWER, t) - x  # noqa: E731
    t_lo = brentq(upper, 1e-12, T_DB2_CAP * (1 - 1e-12), xtol=1e-14)
    t_sep = brentq(lower, 1e-12, 10.0, xtol=1e-14)
    return DB2Window(x, float(t_lo), float(min(t_sep, T_DB2_CAP)))


def db2_window_numeric(x: float, t_max: float = 1.0, steps: int = 200, tol: float = 1e-7) -> DB2Window:
    """Same window located directly on the states with d_B = 2."""
    def works(t):
        p = ProtocolParams(t, x, 2.0)
        return distributed_steering(p, AncillaPolicy.SEPARABLE) > TOL

    grid = np.linspace(1e-3, t_max, steps)
    flags = [works(t) for t in grid]
    if not any(flags):
        return DB2Window(x, float("nan"), float("nan"))
    first = flags.index(True)
    last = len(flags) - 1 - flags[::-1].index(True)
    t_lo = bisect_predicate(works, grid[first - 1], grid[first], tol) if first > 0 else grid[0]
    t_hi = bisect_predicate(works, grid[last], grid[last + 1], tol) if last + 1 < len(grid) else grid[-1]
    return DB2Window(x, float(t_lo), float(t_hi))


# collective steering search -------------------------------------------------

@dataclass(frozen=True)
class SearchResult:
    t: float
    d_b: float
    d_d: float
    x: float
    value: float
    feasible: bool
    evaluations: int
    closed_form: float = field(default=float("nan"))

    @property
    def shortfall(self) -> float:
        return self.closed_form - self.value

    def to_dict(self) -> dict:
        return {
            "t": self.t, "d_b": self.d_b, "d_d": self.d_d, "x": self.x, "value": self.value,
            "feasible": self.feasible, "evaluations": self.evaluations,
            "closed_form": self.closed_form, "shortfall": self.shortfall,
        }


class _CollectiveProblem:
    """B'D' -> A' steering as a function of (d_B, d_D) with separable ancillas."""

    def __init__(self, t, x_policy, x_max):
        self.t = t
        self.x_policy = x_policy
        self.x_max = x_max
        self.evaluations = 0
        self._cache = {}

    def _families(self, d_b, d_d):
        p = ProtocolParams(self.t, 0.0, d_b, d_d, Direction.BD_TO_A)
        return LinearFamily(p, "C-AB"), LinearFamily(p, "C-ABD")

    def _min_x(self, fam):
        # adding partially transposed PSD noise only raises the spectrum, so
        # feasibility is monotone in x and the boundary is a single crossing
        if not fam.entangled(0.0):
            return 0.0
        if fam.entangled(self.x_max):
            return math.inf
        f = lambda x: fam.ppt_min(x) - (1 - TOL)  # noqa: E731
        x = brentq(f, 0.0, self.x_max, xtol=1e-10, rtol=1e-10)
        step = 1e-12 * (1 + x)
        for _ in range(60):
            if not fam.entangled(x):
                return x
            x += step
            step *= 2
        return math.inf

    def feasible_x(self, d_b, d_d):
        fams = self._families(d_b, d_d)
        if self.x_policy == "min_feasible":
            x = max(self._min_x(f) for f in fams)
            return None if math.isinf(x) else x
        x = float(self.x_policy)
        return None if any(f.entangled(x) for f in fams) else x

    def evaluate(self, d_b, d_d):
        key = (float(d_b), float(d_d))
        if key in self._cache:
            return self._cache[key]
        self.evaluations += 1
        x = self.feasible_x(d_b, d_d)
        if x is None:
            out = (-math.inf, math.nan)
        else:
            p = ProtocolParams(self.t, x, d_b, d_d, Direction.BD_TO_A)
            cm = build_stage(p, Stage.STEP4).cm
            out = (gaussian_steering(cm, ModePartition(("B'", "D'"), ("A'",))).value, x)
        self._cache[key] = out
        return out


def maximize_collective_steering(
    t: float,
    x_policy: str | float = "min_feasible",
    tol: float = OPTIMIZER_TOL,
    *,
    grid: tuple[int, int] = (8, 8),
    bounds: tuple[tuple[float, float], tuple[float, float]] = ((0.0, 4.0), (0.0, 6.0)),
    n_starts: int = 2,
    x_max: float = X_MAX,
    max_evals: int = 1500,
) -> SearchResult:
    """Best B'D' -> A' steering over (d_B, d_D) with both ancilla splits separable.

    ``x_policy="min_feasible"`` uses, for each displacement pair, the least
    noise (up to ``x_max``) that makes C'-(A'B) and C''-(A'B'D) separable;
    a number fixes x instead.  Infeasible points score -inf.
    """
    if t <= 0:
        raise InvalidArgument("collective steering search needs t > 0")
    if x_policy != "min_feasible":
        x_policy = float(x_policy)
        if x_policy < 0:
            raise InvalidArgument("fixed x must be >= 0")
    prob = _CollectiveProblem(t, x_policy, x_max)
    (b0, b1), (d0, d1) = bounds
    starts = []
    for d_b in np.linspace(b0, b1, grid[0]):
        for d_d in np.linspace(d0, d1, grid[1]):
            value, _ = prob.evaluate(d_b, d_d)
            if value > -math.inf:
                starts.append((value, d_b, d_d))
    starts.sort(key=lambda s: -s[0])
    best = (-math.inf, math.nan, math.nan)
    for value, d_b, d_d in starts[:n_starts]:
        res = minimize(
            lambda p: -prob.evaluate(p[0], p[1])[0],
            x0=np.array([d_b, d_d]),
            method="Nelder-Mead",
            options={"xatol": 1e-7, "fatol": tol * 1e-2, "maxfev": max_evals,
                     "initial_simplex": np.array([[d_b, d_d], [d_b + 0.25, d_d], [d_b, d_d + 0.25]])},
        )
        cand = (-res.fun, res.x[0], res.x[1])
        if cand[0] > best[0]:
            best = cand
    closed = closed_form_steering(Direction.BD_TO_A, t)
    if best[0] == -math.inf:
        return SearchResult(t, math.nan, math.nan, math.nan, 0.0, False, prob.evaluations, closed)
    value, d_b, d_d = best
    _, x = prob.evaluate(d_b, d_d)
    return SearchResult(t, float(d_b), float(d_d), float(x), float(value), True, prob.evaluations, closed)


def collective_regime_boundary(t_lo: float = 0.2, t_hi: float = 0.31, gap: float = 1e-6,
                               t_tol: float = 2e-3, **search_kwargs) -> float:
    """Smallest squeezing at which the search still reaches the displacement-free steering."""
    def short(t):
        return maximize_collective_steering(t, **search_kwargs).shortfall > gap

    return bisect_predicate(short, t_lo, t_hi, t_tol)
