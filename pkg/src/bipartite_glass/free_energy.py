"""High-temperature variational free energy.

The limiting free energy is min over (a, b) in [0,1)^2 of

    P(a,b) = (g/2)   [h1^2 (1-a) + a/(1-a) + log(1-a) + xi(1,1) - xi(a,b)]
           + ((1-g)/2)[h2^2 (1-b) + b/(1-b) + log(1-b) + xi(1,1) - xi(a,b)]

with g the split ratio, attained at the unique solution (a0, b0) of

    h1^2 + d_x xi(a0,b0)/g     = a0/(1-a0)^2,
    h2^2 + d_y xi(a0,b0)/(1-g) = b0/(1-b0)^2.

The primary solver is the contraction iteration

    F(a,b) = ((1-a)^2 (h1^2 + d_x xi/g), (1-b)^2 (h2^2 + d_y xi/(1-g)))

started at (0,0) (a contraction in the small-xi regime), followed by a Newton
polish on the critical-point residuals.  Outside the small regime the solver
reports convergence honestly; no attempt is made to estimate the regime
boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DomainError
from .mixture import MixtureSpec, validate, xi_jet

GRID_CLAMP = 0.95  # grid searches stop short of the 1/(1-a) singularity


@dataclass(frozen=True)
class FixedPoint:
    a0: float
    b0: float
    residual1: float
    residual2: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class FreeEnergyResult:
    value: float
    fixed_point: FixedPoint
    hessian_psd: bool
    grid_min_agrees: bool


def p_eval(spec: MixtureSpec, a: float, b: float):
    """Return (P, grad P, hess P) at interior point (a, b).

    grad P = (1/2) (-g h1^2 + g a/(1-a)^2     - d_x xi,
                    -(1-g) h2^2 + (1-g) b/(1-b)^2 - d_y xi)
    hess P = (1/2) [[g (1+a)/(1-a)^3 - d_xx xi, -d_xy xi],
                    [-d_xy xi, (1-g)(1+b)/(1-b)^3 - d_yy xi]]
    """
    if not (0.0 <= a < 1.0 and 0.0 <= b < 1.0):
        raise DomainError(f"(a, b) = ({a}, {b}) outside [0,1)^2")
    g = spec.gamma
    jet = xi_jet(spec, a, b, order=2)
    xi11 = xi_jet(spec, 1.0, 1.0, order=0).value
    value = (
        g / 2.0
        * (spec.h1 ** 2 * (1 - a) + a / (1 - a) + math.log(1 - a) + xi11 - jet.value)
        + (1 - g) / 2.0
        * (spec.h2 ** 2 * (1 - b) + b / (1 - b) + math.log(1 - b) + xi11 - jet.value)
    )
    grad = np.array([
        0.5 * (-g * spec.h1 ** 2 + g * a / (1 - a) ** 2 - jet.dx),
        0.5 * (-(1 - g) * spec.h2 ** 2 + (1 - g) * b / (1 - b) ** 2 - jet.dy),
    ])
    hess = 0.5 * np.array([
        [g * (1 + a) / (1 - a) ** 3 - jet.dxx, -jet.dxy],
        [-jet.dxy, (1 - g) * (1 + b) / (1 - b) ** 3 - jet.dyy],
    ])
    return value, grad, hess


def _residuals(spec: MixtureSpec, a: float, b: float) -> tuple[float, float]:
    """Absolute residuals of the two critical-point equations."""
    g = spec.gamma
    jet = xi_jet(spec, a, b, order=1)
    r1 = spec.h1 ** 2 + jet.dx / g - a / (1 - a) ** 2
    r2 = spec.h2 ** 2 + jet.dy / (1 - g) - b / (1 - b) ** 2
    return abs(r1), abs(r2)


def contraction_map(spec: MixtureSpec, a: float, b: float) -> tuple[float, float]:
    g = spec.gamma
    jet = xi_jet(spec, a, b, order=1)
    return (
        (1 - a) ** 2 * (spec.h1 ** 2 + jet.dx / g),
        (1 - b) ** 2 * (spec.h2 ** 2 + jet.dy / (1 - g)),
    )


def solve_fixed_point(
    spec: MixtureSpec,
    tol: float = 1e-12,
    max_iter: int = 10000,
    start: tuple[float, float] = (0.0, 0.0),
) -> FixedPoint:
    """Contraction iteration from (0,0), then a Newton polish on the residuals.

    Never raises on non-convergence: the best iterate is returned with
    ``converged=False`` so out-of-regime inputs are reported, not hidden.
    """
    validate(spec)
    a, b = start
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        na, nb = contraction_map(spec, a, b)
        # keep iterates inside the domain even far outside the contraction regime
        na = min(max(na, 0.0), 1.0 - 1e-12)
        nb = min(max(nb, 0.0), 1.0 - 1e-12)
        step = max(abs(na - a), abs(nb - b))
        a, b = na, nb
        if step < tol:
            converged = True
            break

    if converged:
        a, b = _newton_polish(spec, a, b)

    r1, r2 = _residuals(spec, a, b)
    if converged and max(r1, r2) > 10.0 * tol:
        converged = False
    return FixedPoint(a0=a, b0=b, residual1=r1, residual2=r2,
                      iterations=it, converged=converged)


def _newton_polish(spec: MixtureSpec, a: float, b: float, steps: int = 8):
    """Newton on the critical-point system for fast tail convergence."""
    g = spec.gamma
    for _ in range(steps):
        jet = xi_jet(spec, a, b, order=2)
        r = np.array([
            spec.h1 ** 2 + jet.dx / g - a / (1 - a) ** 2,
            spec.h2 ** 2 + jet.dy / (1 - g) - b / (1 - b) ** 2,
        ])
        jac = np.array([
            [jet.dxx / g - (1 + a) / (1 - a) ** 3, jet.dxy / g],
            [jet.dxy / (1 - g), jet.dyy / (1 - g) - (1 + b) / (1 - b) ** 3],
        ])
        try:
            delta = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            break
        na = min(max(a + delta[0], 0.0), 1.0 - 1e-12)
        nb = min(max(b + delta[1], 0.0), 1.0 - 1e-12)
        if max(abs(na - a), abs(nb - b)) < 1e-16:
            a, b = na, nb
            break
        a, b = na, nb
    return a, b


def p_on_grid(spec: MixtureSpec, step: float = 1e-2, clamp: float = GRID_CLAMP):
    """Vectorized evaluation of P on a regular grid over [0, clamp]^2."""
    g = spec.gamma
    xs = np.arange(0.0, clamp + step / 2, step)
    a, b = np.meshgrid(xs, xs, indexing="ij")
    xi11 = xi_jet(spec, 1.0, 1.0, order=0).value
    xi = np.zeros_like(a)
    for p, q, beta in spec.active:
        xi += beta * beta * a ** p * b ** q
    values = (
        g / 2.0 * (spec.h1 ** 2 * (1 - a) + a / (1 - a) + np.log(1 - a) + xi11 - xi)
        + (1 - g) / 2.0
        * (spec.h2 ** 2 * (1 - b) + b / (1 - b) + np.log(1 - b) + xi11 - xi)
    )
    return xs, values


def grid_minimize_p(spec: MixtureSpec, step: float = 1e-2):
    """Coarse grid minimization of P with local refinement.

    Deterministic tie-break: lexicographically smallest (a, b) wins, so the
    result is independent of any grid partitioning.
    """
    xs, values = p_on_grid(spec, step=step)
    flat = np.argwhere(values == values.min())
    i, j = min(map(tuple, flat))
    a0, b0 = xs[i], xs[j]

    def objective(x):
        a, b = x
        if not (0.0 <= a < 1.0 and 0.0 <= b < 1.0):
            return np.inf
        return p_eval(spec, a, b)[0]

    res = optimize.minimize(
        objective,
        x0=[a0, b0],
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 2000},
    )
    if res.fun <= values[i, j]:
        return float(res.x[0]), float(res.x[1]), float(res.fun)
    return float(a0), float(b0), float(values[i, j])


def limiting_free_energy(spec: MixtureSpec, tol: float = 1e-12,
                         max_iter: int = 10000) -> FreeEnergyResult:
    """Value of the variational formula plus brute-force and curvature checks."""
    fp = solve_fixed_point(spec, tol=tol, max_iter=max_iter)
    value, _, hess = p_eval(spec, fp.a0, fp.b0)
    eigs = np.linalg.eigvalsh(hess)
    _, _, grid_value = grid_minimize_p(spec)
    return FreeEnergyResult(
        value=value,
        fixed_point=fp,
        hessian_psd=bool(eigs.min() >= -1e-12),
        grid_min_agrees=bool(abs(grid_value - value) <= 1e-6),
    )


def crisanti_sommers_endpoint(h: float, slope: float) -> tuple[float, float]:
    """One-party endpoint value of the limiting free energy.

    Returns (value, argmin) of
        (1/2) inf_{a in [0,1)} { h^2 (1-a) + a/(1-a) + log(1-a) + (1-a) slope }.
    The argmin satisfies h^2 + slope = a/(1-a)^2.
    """
    if slope < 0.0:
        raise DomainError(f"slope must be nonnegative, got {slope}")
    c = h * h + slope
    # critical equation a/(1-a)^2 = c  =>  c a^2 - (2c+1) a + c = 0
    if c == 0.0:
        a = 0.0
    else:
        disc = math.sqrt(4.0 * c + 1.0)
        a = (2.0 * c + 1.0 - disc) / (2.0 * c)
        a = min(max(a, 0.0), 1.0 - 1e-15)
    value = 0.5 * (
        h * h * (1 - a) + a / (1 - a) + math.log(1 - a) + (1 - a) * slope
    )
    return value, a


def recombine_endpoints(spec: MixtureSpec, fp: FixedPoint) -> float:
    """Recombine the two one-party endpoints and the cross terms into the
    full variational value; equals P(a0, b0) up to roundoff."""
    g = spec.gamma
    jet = xi_jet(spec, fp.a0, fp.b0, order=1)
    xi11 = xi_jet(spec, 1.0, 1.0, order=0).value
    e1, _ = crisanti_sommers_endpoint(spec.h1, jet.dx / g)
    e2, _ = crisanti_sommers_endpoint(spec.h2, jet.dy / (1 - g))
    cross = 0.5 * (
        xi11 - jet.value - (1 - fp.a0) * jet.dx - (1 - fp.b0) * jet.dy
    )
    return g * e1 + (1 - g) * e2 + cross
