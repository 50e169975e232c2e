"""Study pipelines behind the command line: each writes one artifact subdirectory."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .boxparam import BoxParametrization, build_covering, covering_invariants, predicted_net_size, star_norm_check
from .boxparam import net_spacing, tail_cut
from .config import ConfigError, ExperimentConfig, dump_config
from .errors import HolowidthError
from .multiidx import MultiIndex, enumerate_indices, n_term_select, stechkin_tail, total_degree_set
from .pde import Grid, coercivity_check
from .problems import bumps_box, constant_box, decaying_box
from .taylor import AffineProblem, bound_audit, bound_setup, compute_taylor, summability_check
from .widths import SemilinearProblem, SnapshotSet, sample_parameters, sample_snapshots, width_report

log = logging.getLogger(__name__)

STUDIES = ("taylor", "bounds", "widths", "cover", "semilinear")


@dataclass
class Setup:
    cfg: ExperimentConfig
    grid: Grid
    box: BoxParametrization
    problem: AffineProblem | SemilinearProblem
    s_hint: float | None
    threads: int = 1


def _resolve(path: str, base: Path) -> Path:
    p = Path(path)
    return p if p.is_absolute() else base / p


def build_setup(cfg: ExperimentConfig, base_dir: Path, threads: int = 1) -> Setup:
    spec = cfg.problem
    grid = Grid(spec.grid.m, spec.grid.N)
    if isinstance(spec.abar, str):
        vals, g, _ = io.read_field(_resolve(spec.abar, base_dir))
        if g != grid:
            raise ConfigError(f"abar file is on {g}, problem grid is {grid}")
        abar = grid.edge_values(vals)
    else:
        abar = grid.edge_values(float(spec.abar))
    d = spec.directions
    s_hint = d.s
    if d.family == "bumps":
        box = bumps_box(grid, d.J, d.s, d.c)
    elif d.family == "decaying":
        box = decaying_box(grid, d.J, d.c, d.s, seed=d.seed)
    elif d.family == "constant":
        box = constant_box(grid, d.values)
    else:
        rows = []
        for p in d.paths:
            vals, g, loc = io.read_field(_resolve(p, base_dir))
            if g != grid or loc != io.EDGES:
                raise ConfigError(f"direction file {p} must hold edge values on {grid}")
            rows.append(vals)
        box = BoxParametrization(abar, np.array(rows))
    box = BoxParametrization(abar, box.directions)
    if spec.load in ("const1", "sinpi"):
        f = spec.load
    else:
        f, g, _ = io.read_field(_resolve(spec.load, base_dir))
        if g != grid:
            raise ConfigError(f"load file is on {g}, problem grid is {grid}")
    f = spec.load_scale * grid.load_values(f)
    if spec.kind == "affine":
        problem = AffineProblem.from_box(box, f, grid)
    else:
        sl = cfg.studies.semilinear
        problem = SemilinearProblem(grid, abar, box.directions, f,
                                    tol=sl.tol if sl else 1e-10, max_iter=sl.max_iter if sl else 50)
    return Setup(cfg, grid, box, problem, s_hint, threads)


def run_taylor(st: Setup, out: Path) -> dict:
    study = st.cfg.studies.taylor
    prob = st.problem
    J = prob.J_act
    if study.strategy == "total_degree":
        lam = total_degree_set(J, study.max_degree)
    else:
        setup = bound_setup(prob)
        # uniform radii design: a valid Cauchy bound that is monotone in nu
        rho = 1 + 6 * setup.eps / (10 * J * np.maximum(setup.star_norms, 1e-300))

        def weight(nu):
            return setup.B * float(np.prod([rho[j - 1] ** (-v) for j, v in nu.items]))

        lam = enumerate_indices(J, study.max_degree, weight, study.threshold)
    table = compute_taylor(prob, lam)
    ordered = sorted(table.index_set, key=MultiIndex.sort_key)
    with open(out / "index.txt", "w") as fh:
        for nu in ordered:
            fh.write(f"{nu}\t{io.fmt(table.norms[nu])}\n")
    io.write_taylor_archive(out / "coefficients.hwt", table.coefficients, st.grid)
    io.write_csv(out / "taylor.csv", ["nu", "degree", "norm"],
                 ((str(nu), nu.degree, table.norms[nu]) for nu in ordered))
    n = study.n_terms if study.n_terms is not None else min(len(lam), 60)
    summary = {"index_count": len(lam), "max_degree": study.max_degree, "strategy": study.strategy, "n_terms": n}
    if n >= 1:
        tail, bound = stechkin_tail(table.norms, study.p, n)
        sel = n_term_select(table.norms, n)
        summary.update({"p": study.p, "tail_sum": tail, "stechkin_bound": bound,
                        "selected": [str(nu) for nu in sel]})
    return summary


def run_bounds(st: Setup, out: Path) -> dict:
    study = st.cfg.studies.bounds
    prob = st.problem
    setup = bound_setup(prob, study.eps if study.eps_policy == "fixed" else None)
    table = compute_taylor(prob, total_degree_set(prob.J_act, study.degree_cap))
    rows = bound_audit(table, setup)
    io.write_csv(out / "bounds.csv", ["nu", "degree", "norm", "cauchy_bound", "factorial_bound", "violation"],
                 ((str(r.nu), r.nu.degree, r.norm, r.cauchy, r.factorial, int(r.violation)) for r in rows))
    summ = summability_check(setup.star_norms, setup.eps, study.p)
    return {
        "eps": setup.eps, "B": setup.B, "ellipticity_floor": prob.r, "degree_cap": study.degree_cap,
        "index_count": len(rows), "violations": sum(r.violation for r in rows),
        "dbar_l1": summ["dbar_l1"], "condition_ok": summ["condition_ok"],
        "dbar_lp": summ["dbar_lp"], "lp_ok": summ["lp_ok"], "p": study.p,
    }


def run_widths(st: Setup, out: Path, snapshots: Path | None = None) -> dict:
    study = st.cfg.studies.widths
    if snapshots is not None:
        params, fields, grid = io.read_snapshots(snapshots)
        if grid != st.grid:
            raise ConfigError(f"snapshot archive is on {grid}, problem grid is {st.grid}")
        snap = SnapshotSet(params, fields, grid)
    else:
        snap = sample_snapshots(st.problem, study.sampler, study.m, seed=st.cfg.seed, threads=st.threads)
        io.write_snapshots(out / "snapshots.hws", snap.params, snap.fields, st.grid)
    n_max = min(study.n_max, snap.m)
    s = study.s if study.s is not None else st.s_hint
    rep = width_report(snap, n_max, study.window, s=s, delta=study.delta)
    io.write_csv(out / "widths.csv", ["n", "svd_rms", "greedy_max"], rep.rows())
    summary = {
        "snapshots": snap.m, "sampler": study.sampler, "n_max": n_max,
        "window": list(rep.greedy_fit.window),
        "greedy_slope": rep.greedy_fit.slope, "greedy_intercept": rep.greedy_fit.intercept,
        "greedy_r2": rep.greedy_fit.r2,
        "svd_slope": rep.svd_fit.slope if rep.svd_fit else None,
        "greedy_order": [int(i) for i in rep.greedy_order],
    }
    if rep.verdict is not None:
        summary["rate_transfer"] = rep.verdict
    return summary


def predict_cover(st: Setup) -> dict:
    study = st.cfg.studies.cover
    J = tail_cut(st.box.norms, study.epsilon)
    if J == 0:
        return {"J": 0, "eta": None, "predicted_M": 1}
    eta = net_spacing(st.box.norms, J, study.epsilon)
    size = predicted_net_size(J, eta)
    return {"J": J, "eta": eta, "predicted_M": size}


def run_cover(st: Setup, out: Path) -> dict:
    study = st.cfg.studies.cover
    pred = predict_cover(st)
    log.info("cover: J = %s, predicted net size %s", pred["J"], pred["predicted_M"])
    rng = np.random.default_rng(st.cfg.seed)
    samples = rng.uniform(-1.0, 1.0, size=(study.samples, st.box.J_act))
    cov = build_covering(st.box, study.epsilon, samples, J_cap=study.J_cap, max_centers=study.max_centers)
    ok, margin = star_norm_check(cov)
    inv = covering_invariants(cov)
    covered = bool(np.all(cov.contains(samples)))
    report = {
        "epsilon": cov.epsilon, "J": cov.J, "eta": cov.eta, "M": cov.M, "predicted_net_size": pred["predicted_M"],
        "star_norm_sum": float(np.sum(cov.star_norms)), "star_norm_ok": ok, "star_norm_margin": margin,
        "invariants": inv, "samples": study.samples, "samples_covered": covered,
    }
    io.write_summary(out / "covering.txt", report)
    if study.dump_centers:
        io.write_centers(out / "centers.hwc", cov.center_coords)
    return report


def run_semilinear(st: Setup, out: Path) -> dict:
    study = st.cfg.studies.semilinear
    prob = st.problem
    params = np.zeros((study.samples, prob.J_act))
    if study.samples > 1:
        params[1:] = np.random.default_rng(st.cfg.seed).uniform(-1, 1, size=(study.samples - 1, prob.J_act))
    rows, hist_rows = [], []
    for i, y in enumerate(params):
        a = prob.coefficient(y)
        u = prob.solve(y)
        res = u.meta["residuals"]
        bound, passed = coercivity_check(a, u, seed=i)
        floor = float(np.exp(-np.max(np.abs(a))))
        rows.append((i, len(res) - 1, res[-1], bound, floor, int(passed)))
        hist_rows.extend((i, k, r) for k, r in enumerate(res))
    io.write_csv(out / "semilinear.csv",
                 ["sample", "newton_iterations", "final_residual", "coercivity_estimate", "exp_floor", "pass"], rows)
    io.write_csv(out / "newton_history.csv", ["sample", "iteration", "residual_dual_norm"], hist_rows)
    return {
        "samples": study.samples, "all_pass": all(r[5] for r in rows),
        "max_newton_iterations": max(r[1] for r in rows),
        "min_coercivity_margin": min(r[3] - r[4] for r in rows),
    }


RUNNERS = {
    "taylor": run_taylor, "bounds": run_bounds, "widths": run_widths,
    "cover": run_cover, "semilinear": run_semilinear,
}


def run_studies(cfg: ExperimentConfig, out: Path, base_dir: Path, only: str | None = None,
                threads: int = 1, snapshots: Path | None = None) -> dict:
    """Run configured studies into ``out``; on failure leave a FAILED marker and re-raise."""
    out.mkdir(parents=True, exist_ok=True)
    for stale in ("FAILED", "manifest"):
        (out / stale).unlink(missing_ok=True)
    (out / "config.echo").write_text(dump_config(cfg))
    names = [only] if only else [s for s in STUDIES if getattr(cfg.studies, s) is not None]
    if only and getattr(cfg.studies, only) is None:
        raise ConfigError(f"{only!r} study is not configured")
    for name in names:
        if name in cfg.randomized() and cfg.seed is None:
            raise ConfigError(f"study {name!r} is randomized and needs a seed")
    results = {}
    try:
        st = build_setup(cfg, base_dir, threads)
        for name in names:
            sub = out / name
            sub.mkdir(exist_ok=True)
            log.info("running %s", name)
            if name == "widths":
                summary = run_widths(st, sub, snapshots)
            else:
                summary = RUNNERS[name](st, sub)
            io.write_summary(sub / "summary.yaml", summary)
            results[name] = summary
    except (HolowidthError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        (out / "FAILED").write_text(f"{type(exc).__name__}: {exc}\n")
        io.write_manifest(out)
        raise
    io.write_manifest(out)
    return results


def collect_report(dirs: list[Path]) -> list[tuple]:
    rows = []
    for d in dirs:
        for summary in sorted(Path(d).glob("*/summary.yaml")):
            data = io.read_summary(summary)
            for key, value in _flatten(data):
                rows.append((str(d), summary.parent.name, key, value))
        cover = Path(d) / "cover" / "covering.txt"
        if cover.exists() and not (Path(d) / "cover" / "summary.yaml").exists():
            for key, value in _flatten(io.read_summary(cover)):
                rows.append((str(d), "cover", key, value))
    return rows


def _flatten(data, prefix=""):
    for k, v in data.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        elif isinstance(v, list):
            if len(v) <= 8:
                yield key, " ".join(str(x) for x in v)
        else:
            yield key, v
