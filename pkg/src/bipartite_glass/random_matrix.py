"""Random-matrix samplers and the empirical Hessian-covariance oracle.

GOE normalization: entry variance (1 + delta_ij) / (2n), spectral edge at
+-sqrt2.  The conditional Hessian of the bipartite field at the double north
pole, given the field value N*x there, is

    [[G1, G ], [G^t, G2]] - diag blocks  (N/N_i) xi_i' x I,
    G_i = sqrt(N (N_i - 1) / N_i^2 * 2 xi_i'') M^{N_i - 1}
          + (sqrt(N) / N_i) alpha_i Z_i I,

with G an (N1-1) x (N2-1) i.i.d. Gaussian block of variance
N xi1' xi2' / (N1 N2) for the bipartite field and identically zero for the
decoupled surrogate.  Blocks live on the tangent spaces, hence the
(N_i - 1)-sized identities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonSymmetricError
from .mixture import MixtureConstants

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class GoeMatrix:
    n: int
    entries: np.ndarray


@dataclass(frozen=True)
class ConditionalHessian:
    n1: int               # tangent dimension of party 1 (N1 - 1)
    n2: int               # tangent dimension of party 2 (N2 - 1)
    g1: np.ndarray
    g2: np.ndarray
    g: np.ndarray
    x: float              # conditioning level (field value = N * x)
    assembled: np.ndarray


@dataclass
class CovarianceReport:
    n1: int
    n2: int
    samples: int
    coupled: bool
    items: list[dict] = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return all(item["passed"] for item in self.items)

    @property
    def max_abs_deviation(self) -> float:
        devs = [abs(item["empirical"] - item["target"]) for item in self.items]
        return max(devs) if devs else 0.0


def sample_goe(n: int, rng: np.random.Generator) -> GoeMatrix:
    """Symmetric Gaussian matrix with Var(M_ij) = (1 + delta_ij) / (2n)."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    # (a + a^T)/sqrt2 with a_ij ~ N(0, 1/(2n)) gives off-diagonal variance
    # 1/(2n) and diagonal variance 1/n, as required.
    a = rng.normal(size=(n, n)) / math.sqrt(2.0 * n)
    m = (a + a.T) / SQRT2
    return GoeMatrix(n=n, entries=m)


def eigenvalues(m: np.ndarray) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, ascending."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or not np.allclose(m, m.T, atol=1e-10):
        raise NonSymmetricError("expected a symmetric square matrix")
    return np.linalg.eigvalsh(m)


def smallest_eigenvalue(m: np.ndarray) -> float:
    return float(eigenvalues(m)[0])


def index_of(m: np.ndarray, tol: float = 0.0) -> int:
    """Number of negative eigenvalues (the index)."""
    return int(np.sum(eigenvalues(m) < -tol))


def sample_offdiag_block(n1: int, n2: int, var: float,
                         rng: np.random.Generator) -> np.ndarray:
    """i.i.d. centered Gaussian block with the given entry variance."""
    if var < 0.0:
        raise ValueError("variance must be nonnegative")
    if var == 0.0:
        return np.zeros((n1, n2))
    return rng.normal(scale=math.sqrt(var), size=(n1, n2))


def sample_conditional_hessian(
    consts: MixtureConstants,
    n1_sites: int,
    n2_sites: int,
    x: float,
    coupled: bool,
    rng: np.random.Generator,
) -> ConditionalHessian:
    """Draw the conditional tangent-space Hessian given field value N*x."""
    n = n1_sites + n2_sites
    t1, t2 = n1_sites - 1, n2_sites - 1
    blocks = []
    for sites, tdim, xi_pp, alpha in (
        (n1_sites, t1, consts.xi1pp, consts.alpha1),
        (n2_sites, t2, consts.xi2pp, consts.alpha2),
    ):
        goe_scale = math.sqrt(n * (sites - 1) / sites ** 2 * 2.0 * xi_pp)
        gi = goe_scale * sample_goe(tdim, rng).entries if tdim >= 1 else np.zeros((0, 0))
        if tdim >= 1:
            z = rng.normal()
            gi = gi + (math.sqrt(n) / sites) * alpha * z * np.eye(tdim)
        blocks.append(gi)
    g1, g2 = blocks
    var = 0.0 if coupled else n * consts.xi1p * consts.xi2p / (n1_sites * n2_sites)
    g = sample_offdiag_block(t1, t2, var, rng)
    shift1 = consts.xi1p * x * n / n1_sites
    shift2 = consts.xi2p * x * n / n2_sites
    assembled = np.block([
        [g1 - shift1 * np.eye(t1), g],
        [g.T, g2 - shift2 * np.eye(t2)],
    ])
    return ConditionalHessian(n1=t1, n2=t2, g1=g1, g2=g2, g=g, x=x,
                              assembled=assembled)


def sample_conditional_hessian_batch(
    consts: MixtureConstants,
    n1_sites: int,
    n2_sites: int,
    x: float,
    coupled: bool,
    rng: np.random.Generator,
    count: int,
) -> np.ndarray:
    """Batch of assembled conditional Hessians, (count, N-2, N-2)."""
    n = n1_sites + n2_sites
    t1, t2 = n1_sites - 1, n2_sites - 1
    out = np.zeros((count, t1 + t2, t1 + t2))
    offsets = (0, t1)
    for (sites, tdim, xi_pp, alpha, xi_p), lo in zip((
        (n1_sites, t1, consts.xi1pp, consts.alpha1, consts.xi1p),
        (n2_sites, t2, consts.xi2pp, consts.alpha2, consts.xi2p),
    ), offsets):
        if tdim < 1:
            continue
        goe_scale = math.sqrt(n * (sites - 1) / sites ** 2 * 2.0 * xi_pp)
        a = rng.normal(size=(count, tdim, tdim)) / math.sqrt(2.0 * tdim)
        gi = goe_scale * (a + a.transpose(0, 2, 1)) / SQRT2
        z = rng.normal(size=count)
        shift = xi_p * x * n / sites
        diag = (math.sqrt(n) / sites) * alpha * z - shift
        idx = np.arange(tdim)
        gi[:, idx, idx] += diag[:, None]
        out[:, lo:lo + tdim, lo:lo + tdim] = gi
    if not coupled:
        var = n * consts.xi1p * consts.xi2p / (n1_sites * n2_sites)
        g = rng.normal(scale=math.sqrt(var), size=(count, t1, t2))
        out[:, :t1, t1:] = g
        out[:, t1:, :t1] = g.transpose(0, 2, 1)
    return out


def _moment_with_stderr(samples: np.ndarray, n_batches: int = 20):
    """Mean and batch-means standard error of a per-sample statistic."""
    samples = np.asarray(samples, dtype=float)
    est = float(samples.mean())
    usable = (len(samples) // n_batches) * n_batches
    batches = samples[:usable].reshape(n_batches, -1).mean(axis=1)
    stderr = float(batches.std(ddof=1) / math.sqrt(n_batches))
    return est, stderr


def verify_hessian_covariance(
    spec,
    n1_sites: int,
    n2_sites: int,
    samples: int,
    rng: np.random.Generator,
    coupled: bool = False,
    sigma_gate: float = 5.0,
    batch: int = 2000,
) -> CovarianceReport:
    """Empirically verify the covariance structure of (X, grad X, hess X) at
    the double north pole against the closed forms, using exact finite-size
    field derivatives as the sample source.

    Each report item compares an empirical moment with its closed-form target
    at ``sigma_gate`` times the batch-means standard error of the estimator.
    Deterministic given the RNG state.
    """
    from . import simulator  # sample source; deferred to avoid an import cycle
    from .mixture import constants as mixture_constants

    consts = mixture_constants(spec)
    n = n1_sites + n2_sites
    t1, t2 = n1_sites - 1, n2_sites - 1

    h_vals = np.empty(samples)
    grads = np.empty((samples, t1 + t2))
    hessians = np.empty((samples, t1 + t2, t1 + t2))
    done = 0
    while done < samples:
        take = min(batch, samples - done)
        hv, gv, mv = simulator.north_pole_derivatives_batch(
            spec, n1_sites, n2_sites, take, rng, coupled=coupled
        )
        h_vals[done:done + take] = hv
        grads[done:done + take] = gv
        hessians[done:done + take] = mv
        done += take

    report = CovarianceReport(n1=n1_sites, n2=n2_sites, samples=samples,
                              coupled=coupled)

    def add(item: int, name: str, data: np.ndarray, target: float,
            exact_zero: bool = False):
        if exact_zero:
            emp = float(np.max(np.abs(data)))
            report.items.append({
                "item": item, "name": name, "empirical": emp,
                "target": target, "stderr": 0.0, "passed": emp == 0.0,
            })
            return
        emp, se = _moment_with_stderr(data)
        se = max(se, 1e-300)
        report.items.append({
            "item": item, "name": name, "empirical": emp, "target": target,
            "stderr": se, "passed": abs(emp - target) <= sigma_gate * se,
        })

    # item 1: gradient variance and independence from (X, hess X)
    add(1, "var_grad_party1", grads[:, 0] ** 2, consts.xi1p * n / n1_sites)
    add(1, "var_grad_party2", grads[:, t1] ** 2, consts.xi2p * n / n2_sites)
    add(1, "cov_grad_value", grads[:, 0] * h_vals, 0.0)
    add(1, "cov_grad_hess_diag", grads[:, 0] * hessians[:, 0, 0], 0.0)
    add(1, "cov_grad_hess_offdiag", grads[:, 0] * hessians[:, 0, 1], 0.0)

    # items 2-3: within-block covariance structure
    for item, lo, tdim, sites, xp, xpp, tag in (
        (2, 0, t1, n1_sites, consts.xi1p, consts.xi1pp, "11"),
        (3, t1, t2, n2_sites, consts.xi2p, consts.xi2pp, "22"),
    ):
        d0 = hessians[:, lo, lo]
        d1 = hessians[:, lo + 1, lo + 1]
        od = hessians[:, lo, lo + 1]
        add(item, f"var_diag_{tag}", d0 ** 2, n / sites ** 2 * (xp + 3 * xpp))
        add(item, f"var_offdiag_{tag}", od ** 2, n / sites ** 2 * xpp)
        add(item, f"cov_diag_diag_{tag}", d0 * d1, n / sites ** 2 * (xp + xpp))

    # item 4: cross-block diagonal correlation, other cross moments zero.
    # The decoupled surrogate has independent parties, so its cross-party
    # diagonal covariance vanishes.
    cross_target = n / (n1_sites * n2_sites) * consts.xi1p * consts.xi2p
    cross_uncond = 0.0 if coupled else cross_target
    add(4, "cov_diag11_diag22",
        hessians[:, 0, 0] * hessians[:, t1, t1], cross_uncond)
    add(4, "cov_diag11_offdiag22",
        hessians[:, 0, 0] * hessians[:, t1, t1 + 1], 0.0)

    # item 5: off-diagonal block variance (exactly zero for the surrogate)
    block = hessians[:, 0, t1]
    if coupled:
        add(5, "offdiag_block_zero", hessians[:, :t1, t1:], 0.0,
            exact_zero=True)
    else:
        add(5, "var_offdiag_block", block ** 2, cross_target)
        add(5, "cov_block_diag11", block * hessians[:, 0, 0], 0.0)
        add(5, "cov_block_diag22", block * hessians[:, t1, t1], 0.0)

    # item 6: correlation of Hessian entries with the field value
    add(6, "cov_diag11_value", hessians[:, 0, 0] * h_vals,
        -n / n1_sites * consts.xi1p)
    add(6, "cov_diag22_value", hessians[:, t1, t1] * h_vals,
        -n / n2_sites * consts.xi2p)
    add(6, "cov_offdiag_value", hessians[:, 0, 1] * h_vals, 0.0)

    # item 7: conditional structure via regression residuals on the value.
    # Targets follow from Gaussian conditioning applied to the unconditional
    # moments; for the bipartite field (pole variance N) they reduce to the
    # closed item-7 forms, for the decoupled surrogate (pole variance 2N for
    # unit marginals) the correction halves.
    var_h = n * consts.xi11 * (2.0 if coupled else 1.0)
    cov1 = -n * consts.xi1p / n1_sites
    cov2 = -n * consts.xi2p / n2_sites
    beta1 = cov1 / var_h
    beta2 = cov2 / var_h
    add(7, "regression_slope_diag11",
        hessians[:, 0, 0] * h_vals / var_h, beta1)
    add(7, "regression_slope_diag22",
        hessians[:, t1, t1] * h_vals / var_h, beta2)
    r11a = hessians[:, 0, 0] - beta1 * h_vals
    r11b = hessians[:, 1, 1] - beta1 * h_vals
    r22a = hessians[:, t1, t1] - beta2 * h_vals
    add(7, "cond_var_diag11", r11a ** 2,
        n / n1_sites ** 2 * (consts.xi1p + 3 * consts.xi1pp) - cov1 ** 2 / var_h)
    add(7, "cond_cov_diag11", r11a * r11b,
        n / n1_sites ** 2 * (consts.xi1p + consts.xi1pp) - cov1 ** 2 / var_h)
    add(7, "cond_var_diag22", r22a ** 2,
        n / n2_sites ** 2 * (consts.xi2p + 3 * consts.xi2pp) - cov2 ** 2 / var_h)
    add(7, "cond_cross_block_diag", r11a * r22a,
        cross_uncond - cov1 * cov2 / var_h)
    return report
