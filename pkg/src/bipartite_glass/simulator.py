"""Finite-size ground truth.

Samples dense-coefficient realizations of the bipartite spherical field on
S^{N1} x S^{N2} (spheres of radius sqrt(N_i)), evaluates the field and its
Riemannian derivatives, and provides the Monte Carlo oracles used to check the
closed-form results at desk scale: free-energy estimation, overlap moments via
Metropolis, multistart enumeration of local minima, and a Monte Carlo
evaluation of the critical-point counting integral.

Conventions.  The field is

    H(u, v) = sum_{p,q} beta_{p,q} sum g_{i1..ip, j1..jq} u_{i1}..u_{ip}
                                                          v_{j1}..v_{jq},

with g i.i.d. centered Gaussian of variance N / (N1^p N2^q), so that
Cov(H(u,v), H(u',v')) = N xi(R1, R2) with R1 = <u,u'>/N1, R2 = <v,v'>/N2.
External fields add h1 sum u_i + h2 sum v_j.  The Gibbs weight is
exp(H + field terms) against the uniform probability measure on the product
sphere, and the free energy is (1/N) E log Z.
"""

from __future__ import annotations

import math
import string
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceededError, DomainError, MixingWarning
from .mixture import MixtureSpec, constants as mixture_constants, xi_jet
from .random_matrix import sample_conditional_hessian_batch

# Total coefficient entries allowed across all active terms of one sample.
TENSOR_BUDGET = 100_000_000

# Spheres of radius sqrt(M): points are re-projected to relative 1e-12.
NORM_RTOL = 1e-12

# Geodesic deduplication tolerance for critical-point records.
DEDUP_TOL = 1e-4


# ---------------------------------------------------------------------------
# work distribution: per-item derived seeds, order-fixed reductions


def _item_rng(base: int, item: int) -> np.random.Generator:
    """Independent stream for one work item; depends only on (base, item)."""
    return np.random.default_rng([int(base), int(item)])


def _seed_base(rng) -> int:
    """Collapse the caller's RNG (generator or int seed) to one base integer."""
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(2 ** 62))
    return int(rng)


def _parallel_map(fn, n_items: int, n_workers: int = 1) -> list:
    """Map fn over range(n_items); results in item order, any worker count."""
    if n_workers <= 1:
        return [fn(i) for i in range(n_items)]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(fn, range(n_items)))


# ---------------------------------------------------------------------------
# samples and points


@dataclass(frozen=True)
class HamiltonianSample:
    """One disorder realization: dense coefficient tensors per active term."""

    spec: MixtureSpec
    n1: int
    n2: int
    tensors: dict[tuple[int, int], np.ndarray]
    seed: int | None = None


@dataclass
class SpherePoint:
    u: np.ndarray  # |u|^2 = n1
    v: np.ndarray  # |v|^2 = n2

    def project(self) -> "SpherePoint":
        n1, n2 = len(self.u), len(self.v)
        self.u = self.u * (math.sqrt(n1) / np.linalg.norm(self.u))
        self.v = self.v * (math.sqrt(n2) / np.linalg.norm(self.v))
        return self

    def check(self):
        n1, n2 = len(self.u), len(self.v)
        if abs(self.u @ self.u - n1) > NORM_RTOL * n1 * 10:
            raise DomainError("point left the radius-sqrt(N1) sphere")
        if abs(self.v @ self.v - n2) > NORM_RTOL * n2 * 10:
            raise DomainError("point left the radius-sqrt(N2) sphere")


@dataclass
class CriticalPointRecord:
    point: SpherePoint
    energy: float
    grad_norm: float
    index: int
    record_id: int
    duplicate_of: int | None = None


@dataclass
class MinimaSearch:
    records: list[CriticalPointRecord]
    n_starts: int
    n_converged: int


def random_point(n1: int, n2: int, rng: np.random.Generator) -> SpherePoint:
    """Uniform point on the product sphere (normalized Gaussian vectors)."""
    return SpherePoint(u=rng.normal(size=n1), v=rng.normal(size=n2)).project()


def tensor_entry_count(spec: MixtureSpec, n1: int, n2: int) -> int:
    return sum(n1 ** p * n2 ** q for p, q, _ in spec.active)


def sample_hamiltonian(
    spec: MixtureSpec,
    n1: int,
    n2: int,
    rng,
    budget: int = TENSOR_BUDGET,
) -> HamiltonianSample:
    """Draw the coefficient tensors of one realization.

    ``rng`` may be a Generator or an integer seed; an integer is recorded on
    the sample for provenance and yields identical tensors on reuse.
    """
    if n1 < 1 or n2 < 1:
        raise DomainError("party sizes must be >= 1")
    total = tensor_entry_count(spec, n1, n2)
    if total > budget:
        raise BudgetExceededError(
            f"{total} tensor entries exceed the budget of {budget}"
        )
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    n = n1 + n2
    tensors = {}
    for p, q, _beta in spec.active:
        scale = math.sqrt(n / (n1 ** p * n2 ** q))
        tensors[(p, q)] = rng.normal(scale=scale, size=(n1,) * p + (n2,) * q)
    return HamiltonianSample(spec=spec, n1=n1, n2=n2, tensors=tensors, seed=seed)


# ---------------------------------------------------------------------------
# evaluation: value, Euclidean and Riemannian derivatives


def _partial(g: np.ndarray, u: np.ndarray, v: np.ndarray, p: int, q: int,
             keep: tuple[int, ...]) -> np.ndarray:
    """Contract all axes of g except ``keep`` with u (first p) / v (last q)."""
    subs = string.ascii_letters[: p + q]
    operands, inputs = [g], [subs]
    for ax in range(p + q):
        if ax in keep:
            continue
        operands.append(u if ax < p else v)
        inputs.append(subs[ax])
    out = "".join(subs[ax] for ax in keep)
    return np.einsum(",".join(inputs) + "->" + out, *operands)


def euclidean_derivatives(h: HamiltonianSample, pt: SpherePoint,
                          order: int = 2):
    """(value, gradient, Hessian) of H + field terms in ambient coordinates.

    The coefficient tensors are not symmetrized, so each derivative sums over
    the contraction slots explicitly.
    """
    n1, n2 = h.n1, h.n2
    u, v = pt.u, pt.v
    value = h.spec.h1 * u.sum() + h.spec.h2 * v.sum()
    grad = np.concatenate([
        np.full(n1, h.spec.h1), np.full(n2, h.spec.h2)
    ])
    hess = np.zeros((n1 + n2, n1 + n2)) if order >= 2 else None
    for p, q, beta in h.spec.active:
        g = h.tensors[(p, q)]
        value += beta * float(_partial(g, u, v, p, q, ()))
        if order >= 1:
            for s in range(p):
                grad[:n1] += beta * _partial(g, u, v, p, q, (s,))
            for s in range(p, p + q):
                grad[n1:] += beta * _partial(g, u, v, p, q, (s,))
        if order >= 2:
            for s in range(p + q):
                for t in range(p + q):
                    if s == t:
                        continue
                    block = beta * _partial(g, u, v, p, q, (s, t))
                    r0 = slice(0, n1) if s < p else slice(n1, n1 + n2)
                    c0 = slice(0, n1) if t < p else slice(n1, n1 + n2)
                    hess[r0, c0] += block
    return value, grad, hess


@dataclass
class Evaluation:
    value: float
    grad: np.ndarray           # Riemannian gradient, ambient coordinates
    grad_norm: float
    hess_tangent: np.ndarray | None  # (N-2) x (N-2) tangent Hessian
    basis1: np.ndarray | None
    basis2: np.ndarray | None


def _tangent_basis(w: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the hyperplane orthogonal to w, deterministic."""
    n = len(w)
    e = np.zeros(n)
    e[-1] = 1.0
    wn = w / np.linalg.norm(w)
    # Householder reflection mapping e_last -> wn; its first n-1 columns span
    # the tangent space.
    x = wn - e
    nx = np.linalg.norm(x)
    if nx < 1e-14:
        return np.eye(n)[:, : n - 1]
    x = x / nx
    refl = np.eye(n) - 2.0 * np.outer(x, x)
    return refl[:, : n - 1]


def evaluate(h: HamiltonianSample, pt: SpherePoint, order: int = 2) -> Evaluation:
    """Field value plus Riemannian gradient/Hessian at a product-sphere point.

    The gradient is the Euclidean one projected onto each tangent space; the
    Hessian is the projected Euclidean Hessian minus the radial correction
    (<grad_E, u> / N_i) I on each party's tangent block.
    """
    pt.check()
    n1, n2 = h.n1, h.n2
    value, egrad, ehess = euclidean_derivatives(h, pt, order=order)
    gu, gv = egrad[:n1], egrad[n1:]
    ru = gu - (pt.u @ gu / n1) * pt.u
    rv = gv - (pt.v @ gv / n2) * pt.v
    grad = np.concatenate([ru, rv])
    gnorm = float(np.linalg.norm(grad))
    if order < 2:
        return Evaluation(value=value, grad=grad, grad_norm=gnorm,
                          hess_tangent=None, basis1=None, basis2=None)
    b1 = _tangent_basis(pt.u)
    b2 = _tangent_basis(pt.v)
    big = np.zeros((n1 + n2, n1 + n2 - 2))
    big[:n1, : n1 - 1] = b1
    big[n1:, n1 - 1:] = b2
    tangent = big.T @ ehess @ big
    c1 = pt.u @ gu / n1
    c2 = pt.v @ gv / n2
    d = np.concatenate([np.full(n1 - 1, c1), np.full(n2 - 1, c2)])
    tangent = tangent - np.diag(d)
    return Evaluation(value=value, grad=grad, grad_norm=gnorm,
                      hess_tangent=tangent, basis1=b1, basis2=b2)


# ---------------------------------------------------------------------------
# batched value evaluation (free energy, Metropolis)


def _kron_pow(x: np.ndarray, p: int) -> np.ndarray:
    """Row-wise p-fold tensor power: (B, m) -> (B, m^p)."""
    out = np.ones((x.shape[0], 1))
    for _ in range(p):
        out = (out[:, :, None] * x[:, None, :]).reshape(x.shape[0], -1)
    return out


def value_batch(h: HamiltonianSample, us: np.ndarray, vs: np.ndarray,
                chunk: int = 20000) -> np.ndarray:
    """Field values (with field terms) at a batch of product-sphere points."""
    n_pts = us.shape[0]
    out = np.empty(n_pts)
    for lo in range(0, n_pts, chunk):
        u = us[lo:lo + chunk]
        v = vs[lo:lo + chunk]
        acc = h.spec.h1 * u.sum(axis=1) + h.spec.h2 * v.sum(axis=1)
        for p, q, beta in h.spec.active:
            gm = h.tensors[(p, q)].reshape(h.n1 ** p, h.n2 ** q)
            acc += beta * np.einsum(
                "bi,bi->b", _kron_pow(u, p) @ gm, _kron_pow(v, q)
            )
        out[lo:lo + chunk] = acc
    return out


# ---------------------------------------------------------------------------
# north-pole derivatives, sampled exactly in law


def _symmetric_noise(rng: np.random.Generator, b: int, m: int) -> np.ndarray:
    """Batch of symmetric matrices, off-diag var 1, diag var 2."""
    a = rng.normal(size=(b, m, m))
    return (a + a.transpose(0, 2, 1)) / math.sqrt(2.0)


def north_pole_derivatives_batch(
    spec: MixtureSpec,
    n1: int,
    n2: int,
    count: int,
    rng: np.random.Generator,
    coupled: bool = False,
):
    """Exact joint law of (X, grad X, hess X) at the double north pole.

    Returns (values (B,), tangent gradients (B, N-2), tangent Riemannian
    Hessians (B, N-2, N-2)).  At the pole every statistic is a linear
    functional of disjoint sets of coefficient entries except for the radial
    (Euler-identity) coupling of the diagonal to the field value, so the batch
    is drawn directly from the implied Gaussians instead of materializing the
    tensors.  ``coupled=True`` samples the decoupled surrogate: one mixed
    model per party built from the degree marginals, each with per-party
    covariance N xi^i(R^i), hence zero cross-party blocks.
    """
    n = n1 + n2
    t1, t2 = n1 - 1, n2 - 1
    if coupled:
        consts = mixture_constants(spec)
        terms = [(p, 0, math.sqrt(b2)) for p, b2 in sorted(consts.marginal1.items())]
        terms += [(0, q, math.sqrt(b2)) for q, b2 in sorted(consts.marginal2.items())]
    else:
        terms = [(p, q, b) for p, q, b in spec.active]

    h_vals = np.zeros(count)
    g1 = np.zeros((count, t1))
    g2 = np.zeros((count, t2))
    e11 = np.zeros((count, t1, t1))
    e22 = np.zeros((count, t2, t2))
    e12 = np.zeros((count, t1, t2))
    rad1 = np.zeros(count)
    rad2 = np.zeros(count)
    for p, q, beta in terms:
        sigma = math.sqrt(n / (n1 ** p * n2 ** q))
        amp = beta * sigma
        h_term = amp * n1 ** (p / 2) * n2 ** (q / 2) * rng.normal(size=count)
        h_vals += h_term
        rad1 += (p / n1) * h_term
        rad2 += (q / n2) * h_term
        if p >= 1:
            g1 += (amp * n1 ** ((p - 1) / 2) * n2 ** (q / 2) * math.sqrt(p)
                   * rng.normal(size=(count, t1)))
        if q >= 1:
            g2 += (amp * n1 ** (p / 2) * n2 ** ((q - 1) / 2) * math.sqrt(q)
                   * rng.normal(size=(count, t2)))
        if p >= 2:
            e11 += (amp * n1 ** ((p - 2) / 2) * n2 ** (q / 2)
                    * math.sqrt(p * (p - 1)) * _symmetric_noise(rng, count, t1))
        if q >= 2:
            e22 += (amp * n1 ** (p / 2) * n2 ** ((q - 2) / 2)
                    * math.sqrt(q * (q - 1)) * _symmetric_noise(rng, count, t2))
        if p >= 1 and q >= 1:
            e12 += (amp * n1 ** ((p - 1) / 2) * n2 ** ((q - 1) / 2)
                    * math.sqrt(p * q) * rng.normal(size=(count, t1, t2)))

    idx1 = np.arange(t1)
    idx2 = np.arange(t2)
    e11[:, idx1, idx1] -= rad1[:, None]
    e22[:, idx2, idx2] -= rad2[:, None]
    hessians = np.zeros((count, t1 + t2, t1 + t2))
    hessians[:, :t1, :t1] = e11
    hessians[:, t1:, t1:] = e22
    hessians[:, :t1, t1:] = e12
    hessians[:, t1:, :t1] = e12.transpose(0, 2, 1)
    grads = np.concatenate([g1, g2], axis=1)
    return h_vals, grads, hessians


# ---------------------------------------------------------------------------
# free-energy estimation


@dataclass
class FreeEnergyEstimate:
    value: float
    stderr: float
    per_disorder: np.ndarray
    n1: int
    n2: int


def estimate_free_energy(
    spec: MixtureSpec,
    n1: int,
    n2: int,
    n_disorder: int,
    n_sphere: int,
    rng,
    n_workers: int = 1,
) -> FreeEnergyEstimate:
    """Plain Monte Carlo free energy: (1/N) log of the sphere average of the
    Gibbs weight, averaged over disorder, stderr across disorder.

    Valid as an estimator at any temperature; informative only when the
    reported stderr is small, which requires small xi(1,1).
    """
    base = _seed_base(rng)
    n = n1 + n2

    def one(d: int) -> float:
        item = _item_rng(base, d)
        ham = sample_hamiltonian(spec, n1, n2, item)
        zs = item.normal(size=(n_sphere, n1 + n2))
        us = zs[:, :n1]
        vs = zs[:, n1:]
        us = us * (math.sqrt(n1) / np.linalg.norm(us, axis=1))[:, None]
        vs = vs * (math.sqrt(n2) / np.linalg.norm(vs, axis=1))[:, None]
        vals = value_batch(ham, us, vs)
        m = vals.max()
        log_z = m + math.log(np.exp(vals - m).mean())
        return log_z / n

    per = np.array(_parallel_map(one, n_disorder, n_workers))
    stderr = float(per.std(ddof=1) / math.sqrt(n_disorder)) if n_disorder > 1 else float("inf")
    return FreeEnergyEstimate(value=float(per.mean()), stderr=stderr,
                              per_disorder=per, n1=n1, n2=n2)


# ---------------------------------------------------------------------------
# overlap moments by Metropolis


@dataclass
class OverlapMoments:
    moment1: float        # E<(R1_12 - a0)^2>
    moment2: float
    stderr1: float
    stderr2: float
    a0: float
    b0: float
    acceptance_rate: float


def _reference_overlaps(spec: MixtureSpec) -> tuple[float, float]:
    """(a0, b0) of the fixed-point system; closed form when no interaction."""
    from .free_energy import crisanti_sommers_endpoint, solve_fixed_point

    if not spec.active:
        return (crisanti_sommers_endpoint(spec.h1, 0.0)[1],
                crisanti_sommers_endpoint(spec.h2, 0.0)[1])
    fp = solve_fixed_point(spec)
    return fp.a0, fp.b0


def estimate_overlap_moments(
    spec: MixtureSpec,
    n1: int,
    n2: int,
    mcmc: dict,
    rng,
    n_workers: int = 1,
) -> OverlapMoments:
    """Second moments of the two overlaps about (a0, b0).

    Two independent replica chains per disorder sample the Gibbs measure by
    random-walk Metropolis with tangent Gaussian proposals and reprojection;
    the proposal scale is tuned to 30-50% acceptance during burn-in.
    mcmc keys: steps (required), proposal_scale (required), and optional
    n_disorder (8), burn_in (steps // 4), thin (10).
    """
    steps = int(mcmc["steps"])
    scale0 = float(mcmc["proposal_scale"])
    n_disorder = int(mcmc.get("n_disorder", 8))
    burn_in = int(mcmc.get("burn_in", max(steps // 4, 50)))
    thin = int(mcmc.get("thin", 10))
    a0, b0 = _reference_overlaps(spec)
    base = _seed_base(rng)

    def one(d: int):
        item = _item_rng(base, d)
        ham = sample_hamiltonian(spec, n1, n2, item)
        pts = [random_point(n1, n2, item) for _ in range(2)]
        vals = [value_batch(ham, p.u[None, :], p.v[None, :])[0] for p in pts]
        scale = scale0
        accepts = trials = 0
        window_accepts = 0
        m1 = m2 = 0.0
        n_rec = 0
        for step in range(burn_in + steps):
            for c in range(2):
                pt, val = pts[c], vals[c]
                du = item.normal(size=n1)
                dv = item.normal(size=n2)
                du -= (pt.u @ du / n1) * pt.u
                dv -= (pt.v @ dv / n2) * pt.v
                cand = SpherePoint(u=pt.u + scale * du,
                                   v=pt.v + scale * dv).project()
                cval = value_batch(ham, cand.u[None, :], cand.v[None, :])[0]
                if math.log(item.uniform()) < cval - val:
                    pts[c], vals[c] = cand, cval
                    if step >= burn_in:
                        accepts += 1
                    else:
                        window_accepts += 1
                if step >= burn_in:
                    trials += 1
            if step < burn_in and (step + 1) % 50 == 0:
                rate = window_accepts / 100.0
                if rate > 0.5:
                    scale *= 1.15
                elif rate < 0.3:
                    scale /= 1.15
                window_accepts = 0
            if step >= burn_in and (step - burn_in) % thin == 0:
                r1 = pts[0].u @ pts[1].u / n1
                r2 = pts[0].v @ pts[1].v / n2
                m1 += (r1 - a0) ** 2
                m2 += (r2 - b0) ** 2
                n_rec += 1
        return m1 / n_rec, m2 / n_rec, accepts / max(trials, 1)

    rows = _parallel_map(one, n_disorder, n_workers)
    m1s = np.array([r[0] for r in rows])
    m2s = np.array([r[1] for r in rows])
    rate = float(np.mean([r[2] for r in rows]))
    if not (0.1 <= rate <= 0.7):
        warnings.warn(
            f"Metropolis acceptance rate {rate:.3f} outside [0.1, 0.7]",
            MixingWarning,
        )
    return OverlapMoments(
        moment1=float(m1s.mean()), moment2=float(m2s.mean()),
        stderr1=float(m1s.std(ddof=1)) / math.sqrt(n_disorder) if n_disorder > 1 else float("inf"),
        stderr2=float(m2s.std(ddof=1)) / math.sqrt(n_disorder) if n_disorder > 1 else float("inf"),
        a0=a0, b0=b0, acceptance_rate=rate,
    )


# ---------------------------------------------------------------------------
# local-minima enumeration


def _sign_symmetries(spec: MixtureSpec) -> list[tuple[float, float]]:
    """Nontrivial sign flips (e1, e2) leaving the field invariant in value."""
    out = []
    for e1, e2 in ((-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)):
        if e1 < 0 and spec.h1 != 0.0:
            continue
        if e2 < 0 and spec.h2 != 0.0:
            continue
        if all(e1 ** p * e2 ** q == 1.0 for p, q, _ in spec.active):
            out.append((e1, e2))
    return out


def _geodesic_close(p: SpherePoint, q: SpherePoint, tol: float) -> bool:
    n1, n2 = len(p.u), len(p.v)
    c1 = np.clip(p.u @ q.u / n1, -1.0, 1.0)
    c2 = np.clip(p.v @ q.v / n2, -1.0, 1.0)
    d1 = math.sqrt(n1) * math.acos(c1)
    d2 = math.sqrt(n2) * math.acos(c2)
    return max(d1, d2) < tol


def _newton_refine(h: HamiltonianSample, pt: SpherePoint, ev: Evaluation,
                   tol: float, max_steps: int = 40):
    """Damped Newton on the tangent critical-point system.

    Converges to the nearby critical point of any index; each step must
    reduce the gradient norm or it is halved, so the refinement never
    wanders far from the basin the descent delivered."""
    for _ in range(max_steps):
        if ev.grad_norm <= tol:
            return pt, ev, True
        full = evaluate(h, pt, order=2)
        gt = np.concatenate([
            full.basis1.T @ full.grad[: h.n1],
            full.basis2.T @ full.grad[h.n1:],
        ])
        try:
            delta = np.linalg.solve(full.hess_tangent, -gt)
        except np.linalg.LinAlgError:
            return pt, ev, False
        damp = 1.0
        improved = False
        while damp > 1e-6:
            nu = pt.u + damp * (full.basis1 @ delta[: h.n1 - 1])
            nv = pt.v + damp * (full.basis2 @ delta[h.n1 - 1:])
            cand = SpherePoint(u=nu, v=nv).project()
            cev = evaluate(h, cand, order=1)
            if cev.grad_norm < ev.grad_norm:
                pt, ev = cand, cev
                improved = True
                break
            damp *= 0.5
        if not improved:
            return pt, ev, False
    return pt, ev, ev.grad_norm <= tol


def _descend(h: HamiltonianSample, pt: SpherePoint, tol: float,
             max_iter: int = 2000) -> tuple[SpherePoint, bool]:
    """Projected gradient descent with backtracking, then Newton refinement."""
    ev = evaluate(h, pt, order=1)
    step = 1.0
    trigger = 0.1 * math.sqrt(h.n1 + h.n2)
    for _ in range(max_iter):
        if ev.grad_norm <= tol:
            return pt, True
        if ev.grad_norm <= trigger:
            pt, ev, done = _newton_refine(h, pt, ev, tol)
            if done:
                return pt, True
            # retry the refinement only after real descent progress
            trigger = ev.grad_norm * 0.3
        moved = False
        while step > 1e-14:
            cand = SpherePoint(u=pt.u - step * ev.grad[: h.n1],
                               v=pt.v - step * ev.grad[h.n1:]).project()
            cev = evaluate(h, cand, order=1)
            if cev.value <= ev.value - 0.5 * step * ev.grad_norm ** 2:
                pt, ev = cand, cev
                step *= 1.5
                moved = True
                break
            step *= 0.5
        if not moved:
            break
    return pt, ev.grad_norm <= tol


def find_local_minima(
    h: HamiltonianSample,
    n_starts: int,
    tol: float,
    rng,
    n_workers: int = 1,
) -> MinimaSearch:
    """Multistart enumeration of critical points reachable by descent.

    Converged points closer than the geodesic tolerance are merged; distinct
    points related by a sign symmetry of the field are kept as separate
    records (they are separate critical points) but annotated with
    ``duplicate_of``.  Records are sorted by energy.  Completeness is never
    claimed.
    """
    base = _seed_base(rng)
    symmetries = _sign_symmetries(h.spec)

    def one(s: int):
        item = _item_rng(base, s)
        return _descend(h, random_point(h.n1, h.n2, item), tol)

    results = _parallel_map(one, n_starts, n_workers)
    records: list[CriticalPointRecord] = []
    n_converged = 0
    next_id = 0
    for pt, ok in results:
        if not ok:
            continue
        n_converged += 1
        if any(_geodesic_close(pt, r.point, DEDUP_TOL) for r in records):
            continue
        dup = None
        for e1, e2 in symmetries:
            mirror = SpherePoint(u=e1 * pt.u, v=e2 * pt.v)
            hit = next((r for r in records
                        if _geodesic_close(mirror, r.point, DEDUP_TOL)), None)
            if hit is not None:
                dup = hit.record_id
                break
        ev = evaluate(h, pt, order=2)
        eigs = np.linalg.eigvalsh(ev.hess_tangent)
        eig_tol = 1e-8 * max(1.0, float(np.abs(eigs).max()))
        records.append(CriticalPointRecord(
            point=pt, energy=ev.value, grad_norm=ev.grad_norm,
            index=int(np.sum(eigs < -eig_tol)), record_id=next_id,
            duplicate_of=dup,
        ))
        next_id += 1
    records.sort(key=lambda r: r.energy)
    return MinimaSearch(records=records, n_starts=n_starts,
                        n_converged=n_converged)


# ---------------------------------------------------------------------------
# critical-point counting integral by Monte Carlo


def surface_volume(n_sites: int) -> float:
    """log of the sphere-volume normalization 2 (pi N)^{N/2} / Gamma(N/2)."""
    if n_sites < 1:
        raise DomainError("size must be >= 1")
    return (math.log(2.0) + 0.5 * n_sites * (math.log(math.pi) + math.log(n_sites))
            - math.lgamma(0.5 * n_sites))


def sphere_log_area(n_sites: int) -> float:
    """log surface area of the radius-sqrt(N) sphere in R^N:
    2 pi^{N/2} N^{(N-1)/2} / Gamma(N/2)."""
    if n_sites < 1:
        raise DomainError("size must be >= 1")
    return (math.log(2.0) + 0.5 * n_sites * math.log(math.pi)
            + 0.5 * (n_sites - 1) * math.log(n_sites)
            - math.lgamma(0.5 * n_sites))


@dataclass
class KacRiceEstimate:
    value: float
    stderr: float
    t: float
    index: int | None
    nodes: list[dict] = field(default_factory=list)
    log_prefactor: float = 0.0
    tail_fraction: float = 0.0


def kac_rice_mc(
    spec: MixtureSpec,
    n1: int,
    n2: int,
    t: float,
    n_x: int,
    n_mc: int,
    rng,
    index: int | None = 0,
    coupled: bool = False,
    n_workers: int = 1,
) -> KacRiceEstimate:
    """Expected number of critical points with value <= N t and the given
    index, by quadrature over the conditioning level and Monte Carlo over the
    conditional tangent Hessian.

    ``index=None`` counts critical points of every index (the value indicator
    alone); ``t=inf`` with ``index=None`` is the total critical-point count.
    Requires zero external fields and a unit-variance mixture.  The sphere
    measure uses the true surface areas of the radius-sqrt(N_i) spheres so the
    estimate is comparable with direct enumeration.
    """
    if spec.h1 != 0.0 or spec.h2 != 0.0:
        raise DomainError("counting requires zero external fields")
    if n1 + n2 > 24:
        raise DomainError("determinant Monte Carlo is capped at N1 + N2 <= 24")
    consts = mixture_constants(spec)
    if abs(consts.xi11 - 1.0) > 1e-9:
        raise DomainError("normalize the mixture to xi(1,1) = 1 first")
    n = n1 + n2
    if math.isinf(t):
        lo, hi = -8.0, 8.0
    else:
        lo, hi = t - 8.0, t
    xs, ws = np.polynomial.legendre.leggauss(n_x)
    xs = 0.5 * (hi - lo) * xs + 0.5 * (hi + lo)
    ws = 0.5 * (hi - lo) * ws
    base = _seed_base(rng)

    def one(i: int):
        item = _item_rng(base, i)
        x = float(xs[i])
        mats = sample_conditional_hessian_batch(consts, n1, n2, x, coupled,
                                                item, n_mc)
        eigs = np.linalg.eigvalsh(mats)
        dets = np.abs(np.prod(eigs, axis=1))
        if index is not None:
            dets = dets * ((eigs < 0.0).sum(axis=1) == index)
        mean = float(dets.mean())
        se = float(dets.std(ddof=1) / math.sqrt(n_mc)) if n_mc > 1 else 0.0
        return mean, se

    rows = _parallel_map(one, n_x, n_workers)
    log_pref = (
        sphere_log_area(n1) + sphere_log_area(n2)
        - 0.5 * ((n - 2) * math.log(2.0 * math.pi * n)
                 + (n1 - 1) * math.log(consts.xi1p / n1)
                 + (n2 - 1) * math.log(consts.xi2p / n2))
        + 0.5 * (math.log(n) - math.log(2.0 * math.pi))
    )
    pref = math.exp(log_pref)
    nodes = []
    total = 0.0
    var = 0.0
    for i, (mean, se) in enumerate(rows):
        gauss = math.exp(-0.5 * n * xs[i] ** 2)
        contrib = ws[i] * mean * gauss
        total += contrib
        var += (ws[i] * se * gauss) ** 2
        nodes.append({"x": float(xs[i]), "mean": mean, "stderr": se,
                      "contribution": pref * contrib})
    tail = abs(nodes[0]["contribution"]) / max(abs(pref * total), 1e-300)
    return KacRiceEstimate(
        value=pref * total, stderr=pref * math.sqrt(var), t=t, index=index,
        nodes=nodes, log_prefactor=log_pref, tail_fraction=tail,
    )


# ---------------------------------------------------------------------------
# ground-state scan


@dataclass
class GroundStateScan:
    minima: np.ndarray        # best found min H / N per disorder sample
    m0: float
    fractions: dict[float, float]
    n1: int
    n2: int


def ground_state_scan(
    spec: MixtureSpec,
    n1: int,
    n2: int,
    n_hams: int,
    n_starts: int,
    rng,
    tol: float = 1e-7,
    n_workers: int = 1,
) -> GroundStateScan:
    """Distribution of the (multistart) ground-state energy density, compared
    with the smallest zero of the counting upper bound."""
    from .complexity import smallest_zero_m0

    p, q = spec.pure_degrees()
    m0 = smallest_zero_m0(p, q, spec.gamma)
    base = _seed_base(rng)
    n = n1 + n2

    def one(d: int):
        item = _item_rng(base, d)
        ham = sample_hamiltonian(spec, n1, n2, item)
        search = find_local_minima(ham, n_starts, tol, item)
        if not search.records:
            return math.inf
        return min(r.energy for r in search.records) / n

    minima = np.array(_parallel_map(one, n_hams, n_workers))
    fractions = {
        eps: float(np.mean(minima < m0 - eps)) for eps in (0.05, 0.1, 0.2)
    }
    return GroundStateScan(minima=minima, m0=m0, fractions=fractions,
                           n1=n1, n2=n2)


# ---------------------------------------------------------------------------
# covariance spot check


def covariance_spot_check(
    spec: MixtureSpec,
    n1: int,
    n2: int,
    n_pairs: int,
    n_disorder: int,
    rng,
) -> list[dict]:
    """Empirical Cov(H(u,v), H(u',v')) / N against xi(R1, R2) at random
    point pairs; returns one row per pair with a 5-sigma verdict."""
    if isinstance(rng, np.random.Generator):
        gen = rng
    else:
        gen = np.random.default_rng(int(rng))
    pairs = [(random_point(n1, n2, gen), random_point(n1, n2, gen))
             for _ in range(n_pairs)]
    vals = np.empty((n_disorder, n_pairs, 2))
    base = _seed_base(gen)
    for d in range(n_disorder):
        ham = sample_hamiltonian(spec, n1, n2, _item_rng(base, d))
        for j, (a, b) in enumerate(pairs):
            vals[d, j, 0] = value_batch(ham, a.u[None, :], a.v[None, :])[0]
            vals[d, j, 1] = value_batch(ham, b.u[None, :], b.v[None, :])[0]
    n = n1 + n2
    rows = []
    for j, (a, b) in enumerate(pairs):
        # centered covariance so nonzero external fields do not bias the check
        xc = vals[:, j, 0] - vals[:, j, 0].mean()
        yc = vals[:, j, 1] - vals[:, j, 1].mean()
        prod = xc * yc / n
        emp = float(prod.mean()) * n_disorder / max(n_disorder - 1, 1)
        se = float(prod.std(ddof=1) / math.sqrt(n_disorder))
        r1 = a.u @ b.u / n1
        r2 = a.v @ b.v / n2
        target = xi_jet(spec, r1, r2, order=0).value
        rows.append({
            "r1": float(r1), "r2": float(r2), "empirical": emp,
            "target": target, "stderr": se,
            "passed": abs(emp - target) <= 5.0 * se,
        })
    return rows
