"""Closed-form complexity bounds for local minima.

Upper bound K(t): complexity of the coupled (decoupled-party) surrogate.  In
the pure-degree case it is the one-dimensional variational formula

    K(t) = sup_x { (1-g) [ log(q-1)/2 - (q-2)/(4(q-1)) u^2 - I(u) ]
                 + g     [ log(p-1)/2 - (p-2)/(4(p-1)) x^2 - I(x) ] },
    u = (t - g x)/(1 - g),  feasible set {x <= -sqrt2, u <= -sqrt2},

with I the large-deviation rate of the smallest eigenvalue of a GOE matrix
(edge at -sqrt2 in this normalization).  The feasible set is empty for
t > -sqrt2 and K is reported as -inf there rather than extrapolated.

Lower bound J(t): mixed models with positive conditional fluctuation on both
parties,

    J(t) = (g/2) log(xi1''/xi1') + ((1-g)/2) log(xi2''/xi2')
         + sup_{a in [0,1]} sup_{x <= min(t, a*(a)), y_i <= -sqrt2}
           [ -x^2/2 + sum_i g_i ( y_i^2/2
                 - (xi_i''/alpha_i^2) (y_i - a xi_i' x / (g_i sqrt(2 xi_i'')))^2
                 - I(y_i) ) ],

with a*(a) = -(1 + sqrt(gamma_*)) / ((1-a) min{xi1'/g, xi2'/(1-g)}).

-inf is represented explicitly and propagates through every sup as the
identity element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import (
    AlphaZeroError,
    DegenerateModelError,
    MissingFamilyError,
    NoSignChangeError,
)
from .mixture import (
    MixtureConstants,
    MixtureSpec,
    constants,
    is_plain_product,
    validate,
)

SQRT2 = math.sqrt(2.0)
NEG_INF = float("-inf")

# Feasibility margin on the strict spectral-gap condition behind a*(a).
A_STAR_MARGIN = 1e-9


def goe_rate(x: float) -> float:
    """Large-deviation rate for the smallest GOE eigenvalue at level x.

    Zero at the spectral edge -sqrt2, strictly increasing as x decreases,
    +inf above the edge.
    """
    if x > -SQRT2:
        return math.inf
    ax = -x
    s = math.sqrt(max(ax * ax - 2.0, 0.0))
    return 0.5 * (ax * s + math.log(2.0) - 2.0 * math.log(ax + s))


def goe_rate_array(x: np.ndarray) -> np.ndarray:
    """Vectorized ``goe_rate``."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, np.inf)
    mask = x <= -SQRT2
    ax = -x[mask]
    s = np.sqrt(np.maximum(ax * ax - 2.0, 0.0))
    out[mask] = 0.5 * (ax * s + math.log(2.0) - 2.0 * np.log(ax + s))
    return out


def theta0_pure(q: int, u: float) -> float:
    """Single-party complexity exponent at fixed level, pure degree q, index 0."""
    if q < 2:
        return NEG_INF
    rate = goe_rate(u)
    if math.isinf(rate):
        return NEG_INF
    return 0.5 * math.log(q - 1) - (q - 2) / (4.0 * (q - 1)) * u * u - rate


def lambda0_pure(p: int, x: float) -> float:
    """Conditional critical-point exponent at fixed level, pure degree p, index 0.

    Defined so that the coupled combiner with (theta0_pure, lambda0_pure)
    reproduces the pure-case variational display exactly.
    """
    if p < 2:
        return NEG_INF
    rate = goe_rate(x)
    if math.isinf(rate):
        return NEG_INF
    return (
        0.5 * math.log(p - 1)
        - (p - 2) / (4.0 * (p - 1)) * x * x
        - rate
        + x * x / 2.0
    )


@dataclass(frozen=True)
class OptimizerDiag:
    """Inner-optimizer record for one threshold."""

    argmax_x: float | None = None
    argmax_y1: float | None = None
    argmax_y2: float | None = None
    argmax_a: float | None = None
    converged: bool = True
    note: str = ""


@dataclass
class ComplexityCurve:
    t_grid: list[float]
    k_values: list[float]          # -inf allowed; nan marks "unsupported"
    j_values: list[float]
    k_supported: bool
    j_supported: bool
    optimizer_diag: list[OptimizerDiag] = field(default_factory=list)
    m0: float | None = None


def _pure_bracket(p: int, q: int, gamma: float, t: float, x: np.ndarray):
    """Vectorized objective of the pure-case upper bound over feasible x."""
    g = gamma
    u = (t - g * x) / (1.0 - g)
    # roundoff hygiene: snap levels within 1 ulp-ish of the spectral edge onto it
    u = np.where(np.abs(u + SQRT2) < 1e-12, -SQRT2, u)
    val = (1.0 - g) * (
        0.5 * math.log(q - 1)
        - (q - 2) / (4.0 * (q - 1)) * u * u
        - goe_rate_array(u)
    ) + g * (
        0.5 * math.log(p - 1)
        - (p - 2) / (4.0 * (p - 1)) * x * x
        - goe_rate_array(x)
    )
    return val


def upsilon0_pure(p: int, q: int, gamma: float, t: float,
                  window: float = 60.0) -> tuple[float, OptimizerDiag]:
    """Upper bound K(t) for the pure (p, q) model; (-inf, diag) when the
    feasible set is empty (t above the spectral edge)."""
    if (p, q) == (1, 1):
        raise DegenerateModelError(
            "the plain product interaction is excluded from the complexity bounds"
        )
    if p < 2 or q < 2:
        # a linear party degenerates the closed form to -inf everywhere
        return NEG_INF, OptimizerDiag(converged=True, note="linear party")
    g = gamma
    x_hi = -SQRT2
    x_lo = (t + SQRT2 * (1.0 - g)) / g
    if x_lo > x_hi + 1e-12:
        return NEG_INF, OptimizerDiag(converged=True, note="empty feasible set")
    lo = max(min(x_lo, x_hi), x_hi - window)
    if lo >= x_hi:
        # single feasible point at the corner
        val = float(_pure_bracket(p, q, g, t, np.array([x_hi]))[0])
        return val, OptimizerDiag(argmax_x=x_hi, argmax_y1=x_hi,
                                  argmax_y2=(t - g * x_hi) / (1 - g))
    xs = np.linspace(lo, x_hi, 4001)
    vals = _pure_bracket(p, q, g, t, xs)
    k = int(np.argmax(vals))
    # local refinement on the smooth interior
    a, b = xs[max(k - 1, 0)], xs[min(k + 1, len(xs) - 1)]
    res = optimize.minimize_scalar(
        lambda x: -_pure_bracket(p, q, g, t, np.array([x]))[0],
        bounds=(a, b),
        method="bounded",
        options={"xatol": 1e-12},
    )
    best_x, best = xs[k], vals[k]
    if -res.fun > best:
        best_x, best = float(res.x), float(-res.fun)
    return float(best), OptimizerDiag(
        argmax_x=float(best_x),
        argmax_y1=float(best_x),
        argmax_y2=float((t - g * best_x) / (1 - g)),
    )


@dataclass(frozen=True)
class CoupledComplexityInputs:
    """Pluggable per-index function families for the coupled combiner.

    theta[j] is the fixed-level complexity exponent of party 2 at index j;
    lam[j] the conditional critical-point exponent of party 1 at index j.
    Both are extended-real callables, bounded above.
    """

    theta: dict[int, object]
    lam: dict[int, object]
    gamma: float

    @classmethod
    def pure(cls, p: int, q: int, gamma: float) -> "CoupledComplexityInputs":
        return cls(
            theta={0: lambda u: theta0_pure(q, u)},
            lam={0: lambda x: lambda0_pure(p, x)},
            gamma=gamma,
        )


def upsilon_k_coupled(inputs: CoupledComplexityInputs, k: int, t: float,
                      window: tuple[float, float] = (-60.0, 60.0)) -> float:
    """Coupled complexity at index k:
    max_{0<=l<=k} sup_x [(1-g) theta_{k-l}((t-gx)/(1-g)) + g (lam_l(x) - x^2/2)].
    """
    g = inputs.gamma
    best = NEG_INF
    for l in range(k + 1):
        if k - l not in inputs.theta:
            raise MissingFamilyError(f"theta family missing index {k - l}")
        if l not in inputs.lam:
            raise MissingFamilyError(f"lambda family missing index {l}")
        theta = inputs.theta[k - l]
        lam = inputs.lam[l]

        def branch(x: float) -> float:
            tv = theta((t - g * x) / (1.0 - g))
            lv = lam(x)
            if tv == NEG_INF or lv == NEG_INF:
                return NEG_INF
            return (1.0 - g) * tv + g * (lv - x * x / 2.0)

        xs = np.linspace(window[0], window[1], 4801)
        vals = np.array([branch(x) for x in xs])
        if np.all(np.isneginf(vals)):
            continue
        i = int(np.argmax(vals))
        lo = xs[max(i - 1, 0)]
        hi = xs[min(i + 1, len(xs) - 1)]

        def neg_branch(x: float) -> float:
            v = branch(x)
            return 1e30 if v == NEG_INF else -v

        res = optimize.minimize_scalar(
            neg_branch, bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12},
        )
        cand = max(float(vals[i]), float(-res.fun) if res.fun < 1e29 else NEG_INF)
        best = max(best, cand)
    return best


def a_star(consts: MixtureConstants, a: float) -> float:
    """Level threshold below which the cross-block part is eventually positive
    definite: a* = -(1 + sqrt(gamma_*)) / ((1-a) min{xi1'/g, xi2'/(1-g)})."""
    if a >= 1.0:
        raise ZeroDivisionError(
            "a = 1 leaves no diagonal shift on the cross-block part"
        )
    g = consts.gamma
    denom = (1.0 - a) * min(consts.xi1p / g, consts.xi2p / (1.0 - g))
    return -(1.0 + math.sqrt(consts.gamma_star)) / denom


def _j_inner_value(consts: MixtureConstants, a: float, t: float,
                   y_grid: np.ndarray, rate_y: np.ndarray,
                   n_x: int = 401, x_window: float = 20.0):
    """sup over (x, y1, y2) of the lower-bound integrand for fixed a.

    Separable in y given x, so the inner problem is a pair of 1-D sups
    evaluated on a shared y grid.
    """
    g = consts.gamma
    gammas = (g, 1.0 - g)
    xi_p = (consts.xi1p, consts.xi2p)
    xi_pp = (consts.xi1pp, consts.xi2pp)
    alphas = (consts.alpha1, consts.alpha2)
    x_hi = min(t, a_star(consts, a) - A_STAR_MARGIN)
    xs = np.linspace(x_hi - x_window, x_hi, n_x)
    total = -xs * xs / 2.0
    best_y = [None, None]
    y_base = y_grid * y_grid / 2.0 - rate_y
    per_party = []
    for i in range(2):
        c = xi_pp[i] / (alphas[i] ** 2)
        m = a * xi_p[i] * xs / (gammas[i] * math.sqrt(2.0 * xi_pp[i]))
        vals = y_base[None, :] - c * (y_grid[None, :] - m[:, None]) ** 2
        per_party.append(vals)
        total = total + gammas[i] * vals.max(axis=1)
    k = int(np.argmax(total))
    for i in range(2):
        best_y[i] = float(y_grid[int(np.argmax(per_party[i][k]))])
    return float(total[k]), float(xs[k]), best_y[0], best_y[1]


def _j_polish(consts: MixtureConstants, a: float, t: float,
              x0: float, y10: float, y20: float):
    """Derivative-free polish of the inner sup around a grid incumbent."""
    g = consts.gamma
    gammas = (g, 1.0 - g)
    xi_p = (consts.xi1p, consts.xi2p)
    xi_pp = (consts.xi1pp, consts.xi2pp)
    alphas = (consts.alpha1, consts.alpha2)
    x_hi = min(t, a_star(consts, a) - A_STAR_MARGIN)

    def neg(v):
        x, y1, y2 = v
        if x > x_hi or y1 > -SQRT2 or y2 > -SQRT2:
            return 1e30
        out = -x * x / 2.0
        for i, y in enumerate((y1, y2)):
            c = xi_pp[i] / (alphas[i] ** 2)
            m = a * xi_p[i] * x / (gammas[i] * math.sqrt(2.0 * xi_pp[i]))
            out += gammas[i] * (y * y / 2.0 - c * (y - m) ** 2 - goe_rate(y))
        return -out

    res = optimize.minimize(
        neg, x0=[x0, y10, y20], method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000},
    )
    if res.fun < 1e29:
        return -float(res.fun), tuple(float(v) for v in res.x)
    return -neg([x0, y10, y20]), (x0, y10, y20)


def j_lower(spec: MixtureSpec, t: float,
            n_a: int = 101) -> tuple[float, OptimizerDiag]:
    """Lower bound J(t) for mixed models with alpha_1, alpha_2 > 0."""
    validate(spec)
    if is_plain_product(spec):
        raise DegenerateModelError(
            "the plain product interaction is excluded from the complexity bounds"
        )
    consts = constants(spec)
    if consts.alpha1 <= 0.0 or consts.alpha2 <= 0.0:
        raise AlphaZeroError(
            "lower bound requires positive conditional fluctuation on both parties"
        )
    g = consts.gamma
    prefix = (
        g / 2.0 * math.log(consts.xi1pp / consts.xi1p)
        + (1.0 - g) / 2.0 * math.log(consts.xi2pp / consts.xi2p)
    )
    y_grid = np.linspace(-20.0, -SQRT2, 4001)
    rate_y = goe_rate_array(y_grid)

    a_grid = np.linspace(0.0, 1.0, n_a)[:-1]  # a = 1 branch is -inf by limit
    best = (NEG_INF, None, None, None, None)
    for a in a_grid:
        val, x, y1, y2 = _j_inner_value(consts, float(a), t, y_grid, rate_y)
        if val > best[0]:
            best = (val, float(a), x, y1, y2)
    if best[1] is None:
        return NEG_INF, OptimizerDiag(converged=True, note="empty feasible set")

    # golden-section refinement over a, polishing the inner sup at each probe
    def outer(a: float) -> float:
        val, x, y1, y2 = _j_inner_value(consts, a, t, y_grid, rate_y)
        val, _ = _j_polish(consts, a, t, x, y1, y2)
        return val

    a_best = best[1]
    da = float(a_grid[1] - a_grid[0])
    lo, hi = max(0.0, a_best - da), min(1.0 - 1e-9, a_best + da)
    res = optimize.minimize_scalar(
        lambda a: -outer(a), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-9},
    )
    a_ref = float(res.x)
    val0, x0, y10, y20 = _j_inner_value(consts, a_ref, t, y_grid, rate_y)
    val, (x, y1, y2) = _j_polish(consts, a_ref, t, x0, y10, y20)
    if val < best[0]:
        val, a_ref, x, y1, y2 = best
    diag = OptimizerDiag(argmax_x=x, argmax_y1=y1, argmax_y2=y2,
                         argmax_a=a_ref)
    return prefix + val, diag


def smallest_zero_m0(p: int, q: int, gamma: float,
                     t_min: float = -8.0, tol: float = 1e-8) -> float:
    """Smallest root of the pure-case upper bound K.

    K is nondecreasing on its finite domain (-inf, -sqrt2] and -inf above it,
    so the smallest zero is either an interior crossing or the domain edge
    itself when K vanishes there.
    """
    t_edge = -SQRT2

    def k_at(t: float) -> float:
        return upsilon0_pure(p, q, gamma, t)[0]

    k_edge = k_at(t_edge)
    if k_edge == NEG_INF or k_edge < -1e-9:
        raise NoSignChangeError(
            f"K stays negative on [{t_min}, {t_edge}]; no zero to bracket"
        )
    if abs(k_edge) <= 1e-9:
        # zero sits exactly at the edge of the feasible domain
        return t_edge

    # interior crossing: walk down until K < 0, then bisect
    t_neg = None
    step = 0.05
    t = t_edge - step
    while t >= t_min:
        if k_at(t) < 0.0:
            t_neg = t
            break
        t -= step
    if t_neg is None:
        raise NoSignChangeError(
            f"K stays nonnegative on [{t_min}, {t_edge}]; widen the scan window"
        )
    return float(optimize.brentq(k_at, t_neg, t_edge, xtol=tol))


def curve(spec: MixtureSpec, t_grid) -> ComplexityCurve:
    """Per-threshold K and J values with capability routing.

    Pure models support K only; mixed models with positive alpha on both
    parties support J only.  Errors at a single threshold are recorded in the
    diagnostics without aborting the rest of the grid.
    """
    spec = validate(spec)
    if is_plain_product(spec):
        raise DegenerateModelError(
            "the plain product interaction is excluded from the complexity bounds"
        )
    consts = constants(spec)
    k_supported = spec.is_pure()
    j_supported = consts.alpha1 > 0.0 and consts.alpha2 > 0.0

    t_grid = [float(t) for t in t_grid]
    k_values, j_values, diags = [], [], []
    for t in t_grid:
        diag = OptimizerDiag()
        kv = jv = math.nan
        if k_supported:
            p, q = spec.pure_degrees()
            try:
                kv, diag = upsilon0_pure(p, q, spec.gamma, t)
            except DegenerateModelError:
                diag = OptimizerDiag(converged=False, note="degenerate")
        if j_supported:
            try:
                jv, diag = j_lower(spec, t)
            except (AlphaZeroError, DegenerateModelError) as exc:
                diag = OptimizerDiag(converged=False, note=str(exc))
        k_values.append(kv)
        j_values.append(jv)
        diags.append(diag)

    m0 = None
    if k_supported:
        p, q = spec.pure_degrees()
        try:
            m0 = smallest_zero_m0(p, q, spec.gamma)
        except NoSignChangeError:
            m0 = None
    return ComplexityCurve(
        t_grid=t_grid,
        k_values=k_values,
        j_values=j_values,
        k_supported=k_supported,
        j_supported=j_supported,
        optimizer_diag=diags,
        m0=m0,
    )
