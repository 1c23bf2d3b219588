"""Model definition: interaction mixture, split ratio, fields, derived scalars.

The model is a centered Gaussian energy field on a product of two spheres whose
covariance is ``N * xi(R1, R2)`` with

    xi(x, y) = sum_{p,q >= 1} beta_{p,q}^2 x^p y^q,

an overlap polynomial with nonnegative coefficients.  Everything downstream
(free energy, complexity bounds, samplers) consumes either the polynomial jet
of ``xi`` or the scalar constants derived here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import (
    AlphaUndefinedError,
    BadGammaError,
    EmptyMixtureError,
    NegativeCoefficientError,
)

# Guard for the formal decay condition sum 2^(p+q) beta^2 < inf.  Finite maps
# always satisfy it; the cap only rejects absurd degrees fed by mistake.
DECAY_SUM_CAP = 1e30

# Tolerance on the alpha_i radicand; exact-zero pure cases sit at 0 up to
# floating-point noise.
ALPHA_RADICAND_TOL = 1e-12


@dataclass(frozen=True)
class MixtureSpec:
    """Immutable model definition.

    coefficients maps (p, q) -> beta_{p,q} >= 0 (the amplitude, not its
    square).  gamma is the asymptotic fraction of coordinates on party 1.
    h1, h2 are external field strengths.
    """

    coefficients: dict[tuple[int, int], float]
    gamma: float
    h1: float = 0.0
    h2: float = 0.0

    def __post_init__(self):
        # freeze the mapping so the dataclass is safely shareable
        object.__setattr__(self, "coefficients", dict(self.coefficients))

    @property
    def active(self) -> list[tuple[int, int, float]]:
        """Sorted (p, q, beta) triples with beta > 0."""
        return [
            (p, q, b)
            for (p, q), b in sorted(self.coefficients.items())
            if b != 0.0
        ]

    def is_pure(self) -> bool:
        return len(self.active) == 1

    def pure_degrees(self) -> tuple[int, int]:
        """(p, q) of the single active term; raises if the mixture is not pure."""
        act = self.active
        if len(act) != 1:
            raise ValueError("mixture is not pure")
        return act[0][0], act[0][1]

    def swap_parties(self) -> "MixtureSpec":
        """Relabel party 1 <-> party 2 (p<->q, gamma<->1-gamma, h1<->h2)."""
        return MixtureSpec(
            coefficients={(q, p): b for (p, q), b in self.coefficients.items()},
            gamma=1.0 - self.gamma,
            h1=self.h2,
            h2=self.h1,
        )

    # -- config document round trip (CLI contract) -------------------------

    @classmethod
    def from_dict(cls, doc: dict) -> "MixtureSpec":
        coeffs = {}
        for entry in doc["coefficients"]:
            key = (int(entry["p"]), int(entry["q"]))
            coeffs[key] = float(entry["beta"])
        return cls(
            coefficients=coeffs,
            gamma=float(doc["gamma"]),
            h1=float(doc.get("h1", 0.0)),
            h2=float(doc.get("h2", 0.0)),
        )

    def to_dict(self) -> dict:
        return {
            "coefficients": [
                {"p": p, "q": q, "beta": b}
                for (p, q), b in sorted(self.coefficients.items())
            ],
            "gamma": self.gamma,
            "h1": self.h1,
            "h2": self.h2,
        }


@dataclass(frozen=True)
class XiJet:
    """Value and partial derivatives of xi at a point, up to second order."""

    value: float
    dx: float = 0.0
    dy: float = 0.0
    dxx: float = 0.0
    dxy: float = 0.0
    dyy: float = 0.0


@dataclass(frozen=True)
class MixtureConstants:
    """Scalars of the unit-variance model consumed by the complexity formulas."""

    xi11: float        # xi(1, 1)
    xi1p: float        # d_x xi(1, 1)
    xi2p: float        # d_y xi(1, 1)
    xi1pp: float       # d_x^2 xi(1, 1)
    xi2pp: float       # d_y^2 xi(1, 1)
    alpha1: float      # sqrt(xi1pp + xi1p - xi1p^2)
    alpha2: float
    gamma_star: float  # max{gamma/(1-gamma), (1-gamma)/gamma}
    gamma: float       # split ratio carried along for the closed forms
    # one-party marginal mixtures: degree -> squared amplitude
    marginal1: dict[int, float] = field(default_factory=dict)
    marginal2: dict[int, float] = field(default_factory=dict)


def validate(spec: MixtureSpec) -> MixtureSpec:
    """Check the model invariants; returns the spec unchanged when valid."""
    if not (0.0 < spec.gamma < 1.0):
        raise BadGammaError(f"gamma must lie in (0, 1), got {spec.gamma}")
    decay_sum = 0.0
    any_positive = False
    for (p, q), b in spec.coefficients.items():
        if p < 1 or q < 1:
            raise NegativeCoefficientError(
                f"degrees must satisfy p, q >= 1, got ({p}, {q})"
            )
        if b < 0.0:
            raise NegativeCoefficientError(
                f"beta[{p},{q}] = {b} is negative"
            )
        if b > 0.0:
            any_positive = True
        decay_sum += 2.0 ** (p + q) * b * b
        if decay_sum > DECAY_SUM_CAP:
            raise NegativeCoefficientError(
                "mixture decay sum exceeds the configured cap"
            )
    if not any_positive:
        raise EmptyMixtureError("all interaction coefficients are zero")
    return spec


def xi_jet(spec: MixtureSpec, x: float, y: float, order: int = 2) -> XiJet:
    """Evaluate xi and its partial derivatives up to ``order`` at (x, y).

    Exact polynomial evaluation; total on the reals, though the model's
    overlap domain is [0, 1]^2.
    """
    v = dx = dy = dxx = dxy = dyy = 0.0
    for p, q, b in spec.active:
        b2 = b * b
        xp = x ** p
        yq = y ** q
        v += b2 * xp * yq
        if order >= 1:
            xpm = p * x ** (p - 1)
            yqm = q * y ** (q - 1)
            dx += b2 * xpm * yq
            dy += b2 * xp * yqm
            if order >= 2:
                dxx += b2 * p * (p - 1) * x ** (p - 2) * yq if p >= 2 else 0.0
                dyy += b2 * q * (q - 1) * xp * y ** (q - 2) if q >= 2 else 0.0
                dxy += b2 * xpm * yqm
    return XiJet(value=v, dx=dx, dy=dy, dxx=dxx, dxy=dxy, dyy=dyy)


def constants(spec: MixtureSpec) -> MixtureConstants:
    """Derived scalars of a validated (normally unit-variance) mixture."""
    jet = xi_jet(spec, 1.0, 1.0, order=2)
    marg1: dict[int, float] = {}
    marg2: dict[int, float] = {}
    for p, q, b in spec.active:
        b2 = b * b
        marg1[p] = marg1.get(p, 0.0) + b2
        marg2[q] = marg2.get(q, 0.0) + b2

    def _alpha(second: float, first: float) -> float:
        radicand = second + first - first * first
        if radicand < -ALPHA_RADICAND_TOL:
            raise AlphaUndefinedError(
                f"alpha radicand {radicand} is negative; "
                "normalize the mixture to xi(1,1) = 1 first"
            )
        return math.sqrt(max(radicand, 0.0))

    g = spec.gamma
    return MixtureConstants(
        xi11=jet.value,
        xi1p=jet.dx,
        xi2p=jet.dy,
        xi1pp=jet.dxx,
        xi2pp=jet.dyy,
        alpha1=_alpha(jet.dxx, jet.dx),
        alpha2=_alpha(jet.dyy, jet.dy),
        gamma_star=max(g / (1.0 - g), (1.0 - g) / g),
        gamma=g,
        marginal1=marg1,
        marginal2=marg2,
    )


def normalize_to_unit_variance(spec: MixtureSpec) -> MixtureSpec:
    """Rescale coefficients so that xi(1, 1) = 1.

    The free-energy results live at small xi(1,1); the complexity results fix
    xi(1,1) = 1, so normalization is explicit rather than implicit.
    """
    total = xi_jet(spec, 1.0, 1.0, order=0).value
    if total <= 0.0:
        raise EmptyMixtureError("cannot normalize a mixture with xi(1,1) = 0")
    scale = 1.0 / math.sqrt(total)
    return MixtureSpec(
        coefficients={k: b * scale for k, b in spec.coefficients.items()},
        gamma=spec.gamma,
        h1=spec.h1,
        h2=spec.h2,
    )


def is_plain_product(spec: MixtureSpec) -> bool:
    """True when xi(x, y) = c * x * y, the model excluded from the complexity bounds."""
    act = spec.active
    return len(act) == 1 and act[0][:2] == (1, 1)
