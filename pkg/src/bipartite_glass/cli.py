"""Command-line entry point.

One binary, four subcommands mirroring the library modules:

    bipartite-glass free-energy --config model.json [--tol ...]
    bipartite-glass complexity  --config model.json --t-min A --t-max B --t-steps N [--m0]
    bipartite-glass rmt check|goe-edge ...
    bipartite-glass simulate free-energy|overlaps|minima|kac-rice|ground-state ...

Models are defined only through config documents (keys: coefficients as a
list of {p, q, beta}, gamma, h1, h2) so that every run is reproducible from
(config, seed, version).  Results and a RunManifest are written under --out
(default ./out).  Exit codes: 0 success, 2 validation/usage error, 3 numeric
non-convergence (results still written).  All floats are serialized with 17
significant digits; minus infinity as the literal `-inf`, unsupported cells
as `unsupported`.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import BipartiteGlassError, EmptyMixtureError
from .mixture import MixtureSpec, validate

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGED = 3

GOE_EDGE = -math.sqrt(2.0)


# ---------------------------------------------------------------------------
# serialization helpers (17 significant digits; -inf literal)


def format_float(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "unsupported"
    return format(float(x), ".17g")


def to_json(obj, indent: int = 0) -> str:
    """JSON text with floats at 17 significant digits and extended reals as
    the literals "-inf" / "inf" / "unsupported"."""
    pad = "  " * indent
    pad_in = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        rows = [
            f'{pad_in}{json.dumps(str(k))}: {to_json(v, indent + 1)}'
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(rows) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        rows = [f"{pad_in}{to_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(rows) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return '"unsupported"'
        if math.isinf(x):
            return '"-inf"' if x < 0 else '"inf"'
        return format(x, ".17g")
    return json.dumps(obj)


def _csv_cell(x) -> str:
    if x is None:
        return "unsupported"
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "unsupported"
    return format(x, ".17g")  # -inf prints as the literal '-inf'


def emit_curve_csv(curve, path: str) -> None:
    """Write a complexity curve as CSV with the fixed column contract."""
    try:
        with open(path, "w") as fh:
            fh.write("t,K,J,argmax_x,argmax_y1,argmax_y2,argmax_a,flags\n")
            for i, t in enumerate(curve.t_grid):
                d = curve.optimizer_diag[i]
                flags = d.note.replace(",", ";") if d.note else (
                    "converged" if d.converged else "not-converged"
                )
                row = [
                    _csv_cell(t),
                    _csv_cell(curve.k_values[i]),
                    _csv_cell(curve.j_values[i]),
                    _csv_cell(d.argmax_x),
                    _csv_cell(d.argmax_y1),
                    _csv_cell(d.argmax_y2),
                    _csv_cell(d.argmax_a),
                    flags,
                ]
                fh.write(",".join(row) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing curve CSV to {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# run manifest


class Run:
    """Collects outputs plus provenance and writes the manifest last."""

    def __init__(self, args, subcommand: str):
        self.out_dir = args.out
        self.subcommand = subcommand
        self.seed = getattr(args, "seed", None)
        self.params = {
            k: v for k, v in sorted(vars(args).items())
            if k not in ("func",) and not callable(v)
        }
        self.config_digest = None
        if getattr(args, "config", None):
            with open(args.config, "rb") as fh:
                self.config_digest = hashlib.sha256(fh.read()).hexdigest()
        self.outputs: dict[str, str] = {}
        self.started = time.time()
        os.makedirs(self.out_dir, exist_ok=True)

    def write_text(self, name: str, text: str) -> str:
        path = os.path.join(self.out_dir, name)
        with open(path, "w") as fh:
            fh.write(text)
        self.outputs[name] = hashlib.sha256(text.encode()).hexdigest()
        return path

    def write_json(self, name: str, obj) -> str:
        return self.write_text(name, to_json(obj) + "\n")

    def finish(self):
        manifest = {
            "subcommand": self.subcommand,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "parameters": self.params,
            "version": __version__,
            "wall_clock_seconds": time.time() - self.started,
            "outputs": dict(sorted(self.outputs.items())),
        }
        path = os.path.join(self.out_dir, "manifest.json")
        with open(path, "w") as fh:
            fh.write(to_json(manifest) + "\n")


def load_spec(path: str, allow_empty: bool = False) -> MixtureSpec:
    with open(path) as fh:
        doc = json.load(fh)
    spec = MixtureSpec.from_dict(doc)
    try:
        validate(spec)
    except EmptyMixtureError:
        if not allow_empty:
            raise
    return spec


def _n_workers(args) -> int:
    if getattr(args, "workers", None):
        return int(args.workers)
    return int(os.environ.get("BIPARTITE_GLASS_THREADS", "1"))


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_free_energy(args) -> int:
    from .free_energy import limiting_free_energy

    spec = load_spec(args.config)
    run = Run(args, "free-energy")
    res = limiting_free_energy(spec, tol=args.tol, max_iter=args.max_iter)
    fp = res.fixed_point
    run.write_json("free_energy.json", {
        "value": res.value,
        "a0": fp.a0,
        "b0": fp.b0,
        "residuals": [fp.residual1, fp.residual2],
        "iterations": fp.iterations,
        "converged": fp.converged,
        "hessian_psd": res.hessian_psd,
        "grid_min_agrees": res.grid_min_agrees,
    })
    run.finish()
    return EXIT_OK if fp.converged else EXIT_NONCONVERGED


def cmd_complexity(args) -> int:
    from .complexity import curve

    spec = load_spec(args.config)
    run = Run(args, "complexity")
    grid = np.linspace(args.t_min, args.t_max, args.t_steps)
    c = curve(spec, grid)
    path = os.path.join(run.out_dir, "complexity.csv")
    emit_curve_csv(c, path)
    with open(path) as fh:
        run.outputs["complexity.csv"] = hashlib.sha256(
            fh.read().encode()).hexdigest()
    if args.m0:
        if not spec.is_pure():
            raise BipartiteGlassError("--m0 requires a pure model")
        run.write_json("m0.json", {"m0": c.m0 if c.m0 is not None else float("nan")})
    run.finish()
    return EXIT_OK


def cmd_rmt_check(args) -> int:
    from .random_matrix import verify_hessian_covariance

    spec = load_spec(args.config)
    run = Run(args, "rmt check")
    report = verify_hessian_covariance(
        spec, args.n1, args.n2, args.samples,
        np.random.default_rng(args.seed), coupled=args.coupled,
    )
    run.write_json("covariance_report.json", {
        "n1": report.n1,
        "n2": report.n2,
        "samples": report.samples,
        "coupled": report.coupled,
        "all_pass": report.all_pass,
        "max_abs_deviation": report.max_abs_deviation,
        "items": report.items,
    })
    run.finish()
    return EXIT_OK


def cmd_rmt_goe_edge(args) -> int:
    from .random_matrix import sample_goe, smallest_eigenvalue

    run = Run(args, "rmt goe-edge")
    rng = np.random.default_rng(args.seed)
    mins = [
        smallest_eigenvalue(sample_goe(args.n, rng).entries)
        for _ in range(args.samples)
    ]
    mins = np.asarray(mins)
    run.write_json("goe_edge.json", {
        "mean_lambda_min": float(mins.mean()),
        "stderr": float(mins.std(ddof=1) / math.sqrt(len(mins)))
        if len(mins) > 1 else float("inf"),
        "target": GOE_EDGE,
        "n": args.n,
        "samples": args.samples,
    })
    run.finish()
    return EXIT_OK


def cmd_sim_free_energy(args) -> int:
    from . import simulator

    spec = load_spec(args.config, allow_empty=True)
    run = Run(args, "simulate free-energy")
    est = simulator.estimate_free_energy(
        spec, args.n1, args.n2, args.n_disorder, args.n_sphere,
        args.seed, n_workers=_n_workers(args),
    )
    run.write_json("simulate_free_energy.json", {
        "value": est.value,
        "stderr": est.stderr,
        "n1": est.n1,
        "n2": est.n2,
        "n_disorder": args.n_disorder,
        "n_sphere": args.n_sphere,
    })
    run.finish()
    return EXIT_OK


def cmd_sim_overlaps(args) -> int:
    from . import simulator

    spec = load_spec(args.config, allow_empty=True)
    run = Run(args, "simulate overlaps")
    mcmc = {
        "steps": args.steps,
        "proposal_scale": args.proposal_scale,
        "n_disorder": args.n_disorder,
        "thin": args.thin,
    }
    if args.burn_in is not None:
        mcmc["burn_in"] = args.burn_in
    om = simulator.estimate_overlap_moments(
        spec, args.n1, args.n2, mcmc, args.seed, n_workers=_n_workers(args),
    )
    run.write_json("simulate_overlaps.json", {
        "moment1": om.moment1,
        "moment2": om.moment2,
        "stderr1": om.stderr1,
        "stderr2": om.stderr2,
        "a0": om.a0,
        "b0": om.b0,
        "acceptance_rate": om.acceptance_rate,
    })
    run.finish()
    return EXIT_OK


def cmd_sim_minima(args) -> int:
    from . import simulator

    spec = load_spec(args.config)
    run = Run(args, "simulate minima")
    ham = simulator.sample_hamiltonian(spec, args.n1, args.n2, args.seed)
    search = simulator.find_local_minima(
        ham, args.n_starts, args.tol, np.random.default_rng(args.seed),
        n_workers=_n_workers(args),
    )
    lines = ["energy,index,grad_norm,duplicate_of"]
    for r in search.records:
        dup = "" if r.duplicate_of is None else str(r.duplicate_of)
        lines.append(
            f"{format_float(r.energy)},{r.index},{format_float(r.grad_norm)},{dup}"
        )
    run.write_text("minima.csv", "\n".join(lines) + "\n")
    run.write_json("minima.json", {
        "n_records": len(search.records),
        "n_starts": search.n_starts,
        "n_converged": search.n_converged,
        "best_energy": search.records[0].energy if search.records else float("nan"),
    })
    run.finish()
    return EXIT_OK


def cmd_sim_kac_rice(args) -> int:
    from . import simulator

    spec = load_spec(args.config)
    run = Run(args, "simulate kac-rice")
    t = float(args.t)
    index = None if args.all_indices else args.index
    est = simulator.kac_rice_mc(
        spec, args.n1, args.n2, t, args.n_x, args.n_mc, args.seed,
        index=index, coupled=args.coupled, n_workers=_n_workers(args),
    )
    run.write_json("kac_rice.json", {
        "value": est.value,
        "stderr": est.stderr,
        "t": est.t,
        "index": est.index,
        "log_prefactor": est.log_prefactor,
        "tail_fraction": est.tail_fraction,
        "nodes": est.nodes,
    })
    run.finish()
    return EXIT_OK


def cmd_sim_ground_state(args) -> int:
    from . import simulator

    spec = load_spec(args.config)
    run = Run(args, "simulate ground-state")
    scan = simulator.ground_state_scan(
        spec, args.n1, args.n2, args.n_hams, args.n_starts, args.seed,
        tol=args.tol, n_workers=_n_workers(args),
    )
    run.write_json("ground_state.json", {
        "m0": scan.m0,
        "minima": list(scan.minima),
        "fractions_below": {format_float(k): v for k, v in scan.fractions.items()},
        "n1": scan.n1,
        "n2": scan.n2,
    })
    run.finish()
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="bipartite-glass",
        description="Bipartite spherical model: free energy, complexity "
                    "bounds, random-matrix checks, finite-size simulation.",
    )
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, config=True, seed=False):
        p.add_argument("--out", default="./out", help="output directory")
        p.add_argument("--workers", type=int, default=None,
                       help="worker count (default: BIPARTITE_GLASS_THREADS or 1)")
        if config:
            p.add_argument("--config", required=True, help="model config JSON")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("free-energy", help="limiting free energy")
    common(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=10000)
    p.set_defaults(func=cmd_free_energy)

    p = sub.add_parser("complexity", help="counting bounds on a threshold grid")
    common(p)
    p.add_argument("--t-min", type=float, required=True)
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--t-steps", type=int, required=True)
    p.add_argument("--m0", action="store_true",
                   help="also emit the smallest zero of the upper bound")
    p.set_defaults(func=cmd_complexity)

    rmt = sub.add_parser("rmt", help="random-matrix samplers and checks")
    rsub = rmt.add_subparsers(dest="rmt_command", required=True)
    p = rsub.add_parser("check", help="empirical Hessian covariance report")
    common(p, seed=True)
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--n2", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--coupled", action="store_true")
    p.set_defaults(func=cmd_rmt_check)
    p = rsub.add_parser("goe-edge", help="mean smallest eigenvalue vs -sqrt(2)")
    common(p, config=False, seed=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.set_defaults(func=cmd_rmt_goe_edge)

    simp = sub.add_parser("simulate", help="finite-size Monte Carlo oracles")
    ssub = simp.add_subparsers(dest="simulate_command", required=True)

    def sim_common(p):
        common(p, seed=True)
        p.add_argument("--n1", type=int, required=True)
        p.add_argument("--n2", type=int, required=True)

    p = ssub.add_parser("free-energy")
    sim_common(p)
    p.add_argument("--n-disorder", type=int, default=100)
    p.add_argument("--n-sphere", type=int, default=10000)
    p.set_defaults(func=cmd_sim_free_energy)

    p = ssub.add_parser("overlaps")
    sim_common(p)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--proposal-scale", type=float, default=0.5)
    p.add_argument("--n-disorder", type=int, default=8)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--thin", type=int, default=10)
    p.set_defaults(func=cmd_sim_overlaps)

    p = ssub.add_parser("minima")
    sim_common(p)
    p.add_argument("--n-starts", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-7)
    p.set_defaults(func=cmd_sim_minima)

    p = ssub.add_parser("kac-rice")
    sim_common(p)
    p.add_argument("--t", required=True,
                   help="threshold level (a float, or 'inf' for the total count)")
    p.add_argument("--n-x", type=int, default=96)
    p.add_argument("--n-mc", type=int, default=2000)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--all-indices", action="store_true")
    p.add_argument("--coupled", action="store_true")
    p.set_defaults(func=cmd_sim_kac_rice)

    p = ssub.add_parser("ground-state")
    sim_common(p)
    p.add_argument("--n-hams", type=int, default=100)
    p.add_argument("--n-starts", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-7)
    p.set_defaults(func=cmd_sim_ground_state)

    return top


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors already; normalize anything else
        return EXIT_VALIDATION if exc.code not in (0,) else 0
    try:
        return args.func(args)
    except (BipartiteGlassError, FileNotFoundError, KeyError,
            json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(run())
