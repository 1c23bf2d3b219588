"""End-to-end acceptance suite.

One test per numbered criterion, each printing a single PASS/FAIL line on the
real stdout (bypassing capture) so the verdicts are visible in any run mode.
Expensive Monte Carlo results are computed once in module-scoped fixtures and
reused by the determinism criterion, which repeats them with a different
worker count and compares serialized bytes.
"""

import json
import math
import sys
import warnings

import numpy as np
import pytest

import mpmath as mp

from bipartite_glass import (
    MixingWarning,
    MixtureSpec,
    j_lower,
    limiting_free_energy,
    sample_goe,
    smallest_zero_m0,
    solve_fixed_point,
    upsilon0_pure,
    verify_hessian_covariance,
    xi_jet,
)
from bipartite_glass import simulator as sim
from bipartite_glass.cli import to_json
from bipartite_glass.complexity import goe_rate
from bipartite_glass.random_matrix import eigenvalues, sample_offdiag_block, smallest_eigenvalue
from conftest import mixed_12_21_spec, pure_spec
from test_free_energy import grid_fixed_point_oracle

SQRT2 = math.sqrt(2.0)


@pytest.fixture
def check(capsys):
    """Verdict reporter: one visible PASS/FAIL line per criterion."""

    def _check(num: int, label: str, passed: bool) -> None:
        verdict = "PASS" if passed else "FAIL"
        line = f"ACCEPTANCE {num:2d} [{verdict}] {label}"
        with capsys.disabled():
            print(line, flush=True)
        assert passed, f"criterion {num}: {label}"

    return _check


# ---------------------------------------------------------------------------
# shared expensive computations (reused by the determinism criterion)


def compute_free_energy_mc(n_workers: int):
    spec = pure_spec(2, 2, 0.1)
    return sim.estimate_free_energy(spec, 20, 20, 200, 100000, 424242,
                                    n_workers=n_workers)


def compute_covariance_reports():
    out = {}
    for coupled in (False, True):
        out[coupled] = verify_hessian_covariance(
            pure_spec(2, 2, 1.0), 6, 6, 100000,
            np.random.default_rng(77), coupled=coupled)
    return out


def compute_kac_rice_vs_enumeration(n_workers: int):
    spec22 = pure_spec(2, 2, 1.0)
    kr22 = sim.kac_rice_mc(spec22, 4, 4, 0.0, 64, 3000, 3131, index=0,
                           n_workers=n_workers)
    counts = []
    for d in range(500):
        h = sim.sample_hamiltonian(spec22, 4, 4, d)
        s = sim.find_local_minima(h, 30, 1e-7, np.random.default_rng(d),
                                  n_workers=n_workers)
        counts.append(sum(1 for r in s.records
                          if r.index == 0 and r.energy <= 0.0))
    kr11 = sim.kac_rice_mc(pure_spec(1, 1, 1.0), 2, 2, math.inf, 64, 4000,
                           999, index=None, n_workers=n_workers)
    return {"kr22": kr22, "enum22_mean": float(np.mean(counts)),
            "kr11": kr11}


@pytest.fixture(scope="module")
def free_energy_mc():
    return compute_free_energy_mc(n_workers=2)


@pytest.fixture(scope="module")
def covariance_reports():
    return compute_covariance_reports()


@pytest.fixture(scope="module")
def kac_rice_results():
    return compute_kac_rice_vs_enumeration(n_workers=2)


# ---------------------------------------------------------------------------
# criteria


def test_criterion_1_zero_field_identity(check):
    specs = [
        pure_spec(2, 2, 0.1),
        pure_spec(3, 2, 0.15, gamma=0.3),
        mixed_12_21_spec(),
        MixtureSpec(coefficients={(1, 1): 0.2, (2, 3): 0.1}, gamma=0.6),
    ]
    ok = True
    for spec in specs:
        res = limiting_free_energy(spec)
        target = xi_jet(spec, 1.0, 1.0, order=0).value / 2.0
        ok &= abs(res.value - target) <= 1e-10
        ok &= res.fixed_point.a0 == 0.0 and res.fixed_point.b0 == 0.0
    check(1, "zero-field free energy equals xi(1,1)/2 with (a0,b0)=(0,0)", ok)


def test_criterion_2_fixed_point_vs_grid_oracle(check):
    rng = np.random.default_rng(515151)
    degrees = [(1, 1), (2, 1), (1, 2), (2, 2), (3, 2)]
    ok = True
    for _ in range(10):
        n_terms = int(rng.integers(1, 4))
        picks = rng.choice(len(degrees), size=n_terms, replace=False)
        coeffs = {degrees[i]: float(rng.uniform(0.1, 1.0)) for i in picks}
        spec = MixtureSpec(coefficients=coeffs,
                           gamma=float(rng.uniform(0.3, 0.7)),
                           h1=float(rng.uniform(-0.1, 0.1)),
                           h2=float(rng.uniform(-0.1, 0.1)))
        total = xi_jet(spec, 1.0, 1.0, order=0).value
        scale = math.sqrt(float(rng.uniform(0.2, 1.0)) * 0.04 / total)
        spec = MixtureSpec(
            coefficients={k: b * scale for k, b in spec.coefficients.items()},
            gamma=spec.gamma, h1=spec.h1, h2=spec.h2)
        fp = solve_fixed_point(spec)
        a_g, b_g = grid_fixed_point_oracle(spec, step=1e-4)
        ok &= abs(fp.a0 - a_g) <= 2e-4 and abs(fp.b0 - b_g) <= 2e-4
        ok &= math.hypot(fp.residual1, fp.residual2) <= 1e-8
    check(2, "fixed point matches 2-D residual grid search on 10 random "
             "small models", ok)


def test_criterion_3_free_energy_monte_carlo(check, free_energy_mc):
    est = free_energy_mc
    gap = abs(est.value - 0.005)
    check(3, f"finite-N free energy {est.value:.6f} within 3 stderr + 0.003 "
             f"of 0.005", gap <= 3.0 * est.stderr + 0.003)


def test_criterion_4_overlap_concentration(check):
    spec = pure_spec(2, 2, 0.1)
    moments = {}
    for n_sites, steps, n_dis in ((20, 3000, 8), (40, 2000, 6),
                                  (80, 1000, 4)):
        om = sim.estimate_overlap_moments(
            spec, n_sites, n_sites,
            {"steps": steps, "proposal_scale": 0.5, "n_disorder": n_dis},
            606060 + n_sites, n_workers=2)
        moments[n_sites] = om.moment1
    ok = (moments[20] / moments[40] >= 1.5
          and moments[40] / moments[80] >= 1.5)
    zero_spec = MixtureSpec(coefficients={(2, 2): 0.0}, gamma=0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MixingWarning)
        om0 = sim.estimate_overlap_moments(
            zero_spec, 20, 20,
            {"steps": 4000, "proposal_scale": 0.8, "n_disorder": 8}, 717171)
    ok &= abs(om0.moment1 - 1.0 / 20.0) <= 3.0 * om0.stderr1
    check(4, f"overlap second moment halves with N "
             f"({moments[20]:.4f}/{moments[40]:.4f}/{moments[80]:.4f}) and "
             f"matches 1/N at zero coupling", ok)


def test_criterion_5_goe_and_rate_function_suite(check, rng):
    mp.mp.dps = 30
    ok = True
    for x in np.linspace(-50.0, -SQRT2, 60):
        ref = float(mp.quad(lambda z: mp.sqrt(z * z - 2), [mp.sqrt(2), -x]))
        ok &= abs(goe_rate(float(x)) - ref) <= 1e-10
    mins = [smallest_eigenvalue(sample_goe(1000, rng).entries)
            for _ in range(50)]
    edge = float(np.mean(mins))
    ok &= -1.50 <= edge <= -1.34
    tops = [float(eigenvalues(
        (g := sample_offdiag_block(200, 200, 1.0 / 200.0, rng)) @ g.T)[-1])
        for _ in range(20)]
    mp_edge = float(np.mean(tops))
    ok &= 3.7 <= mp_edge <= 4.3
    check(5, f"rate function to 1e-10, GOE edge {edge:.3f}, "
             f"Marchenko-Pastur edge {mp_edge:.3f}", ok)


def test_criterion_6_hessian_covariance(check, covariance_reports):
    plain = covariance_reports[False]
    coupled = covariance_reports[True]
    zero_item = [i for i in coupled.items if i["name"] == "offdiag_block_zero"]
    ok = (plain.all_pass and coupled.all_pass
          and zero_item and zero_item[0]["empirical"] == 0.0)
    check(6, "all Hessian covariance items pass at 5 sigma, coupled "
             "off-diagonal block exactly zero", ok)


def test_criterion_7_kac_rice_vs_enumeration(check, kac_rice_results):
    r = kac_rice_results
    ratio22 = r["kr22"].value / max(r["enum22_mean"], 1e-12)
    ratio11 = r["kr11"].value / 8.0
    ok = 0.5 <= ratio22 <= 2.0 and 1.0 / 1.5 <= ratio11 <= 1.5
    check(7, f"Kac-Rice {r['kr22'].value:.2f} vs enumeration "
             f"{r['enum22_mean']:.2f} (factor {ratio22:.2f}); bilinear total "
             f"{r['kr11'].value:.2f} vs SVD count 8", ok)


def test_criterion_8_counting_bound_sign_properties(check):
    mixed = mixed_12_21_spec()
    j_vals = [j_lower(mixed, float(t))[0] for t in np.linspace(-1.0, 4.0, 8)]
    j_positive = max(j_vals) > 0.0
    t_grid = np.linspace(-6.0, -SQRT2, 60)
    k_vals = [upsilon0_pure(2, 2, 0.5, float(t))[0] for t in t_grid]
    # positivity must clear numerical noise: the sup sits at the domain edge
    # where the bracket evaluates to 0 up to roundoff (~1e-16)
    k_positive_somewhere = any(math.isfinite(v) and v > 1e-9 for v in k_vals)
    k_diverges = k_vals[0] < -1.0 and k_vals[0] < k_vals[len(k_vals) // 2]
    ok = j_positive and k_positive_somewhere and k_diverges
    check(8, "J attains positive values; pure (2,2) K positive somewhere "
             "and diverging to -inf", ok)


def test_criterion_9_ground_state_bound(check):
    m0 = smallest_zero_m0(2, 2, 0.5)
    k_at_m0 = abs(upsilon0_pure(2, 2, 0.5, m0)[0])
    scan = sim.ground_state_scan(pure_spec(2, 2, 1.0), 20, 20, 100, 10,
                                 909090, n_workers=2)
    fraction = scan.fractions[0.2]
    ok = k_at_m0 <= 1e-7 and fraction == 0.0
    check(9, f"|K(m0)| = {k_at_m0:.2e} <= 1e-7 and zero of 100 minima below "
             f"N(m0 - 0.2) (observed fraction {fraction:.2f})", ok)


def test_criterion_10_determinism(check, free_energy_mc, covariance_reports,
                                  kac_rice_results):
    def digest_fe(est):
        return to_json({"value": est.value, "stderr": est.stderr,
                        "per_disorder": list(est.per_disorder)})

    def digest_cov(reports):
        return to_json({str(k): r.items for k, r in reports.items()})

    def digest_kr(r):
        return to_json({
            "kr22": [r["kr22"].value, r["kr22"].stderr],
            "enum22_mean": r["enum22_mean"],
            "kr11": [r["kr11"].value, r["kr11"].stderr],
        })

    fe2 = compute_free_energy_mc(n_workers=5)
    cov2 = compute_covariance_reports()
    kr2 = compute_kac_rice_vs_enumeration(n_workers=5)
    ok = (digest_fe(free_energy_mc) == digest_fe(fe2)
          and digest_cov(covariance_reports) == digest_cov(cov2)
          and digest_kr(kac_rice_results) == digest_kr(kr2))
    check(10, "repeating criteria 3, 6, 7 with identical seeds is "
              "byte-identical across worker counts", ok)
