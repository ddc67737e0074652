"""Config-driven experiment runner and verifier.

Subcommands:

    npgm run CONFIG           execute one run per seed, write trace CSVs + summary
    npgm sweep CONFIG --grid gamma=5,1,0.5 [--grid beta=...]
    npgm verify SUITE [...]   run named certification suites, write a report
    npgm ingest-movielens PATH   parse a u.data file into a dense .npy matrix

Configs are YAML with a fixed key set; unknown keys are rejected and every
validation error names the offending key.  Trace CSVs carry the columns
k,f,grad_norm,stationarity,lyapunov,elapsed_ns with floats printed to 17
significant digits; the lyapunov column is empty when f_star is unknown.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import itertools
import json
import sys
from pathlib import Path
from typing import Optional, Union

import numpy as np
import yaml

from npgm import analysis
from npgm.kernels import KERNEL_NAMES, SHAPES, ReferenceFunction, make_reference
from npgm.optimizers import METHODS, STOCHASTIC_METHODS, RunTrace, run
from npgm.problems import (
    Problem,
    StochasticOracle,
    load_movielens,
    make_matrix_factorization,
    make_noise_example,
    make_phase_retrieval,
    make_selfcal_cosh,
)

CSV_HEADER = "k,f,grad_norm,stationarity,lyapunov,elapsed_ns"
PROBLEM_NAMES = ("selfcal_cosh", "noise_example", "matrix_factorization", "phase_retrieval")
STOCHASTIC_PROBLEMS = ("noise_example", "phase_retrieval")
CERTIFICATES = ("thm22", "thm24", "thm27", "thm31", "thm34", "thm35")
_DETERMINISTIC_CERTS = ("thm22", "thm24", "thm27")

_PROBLEM_KEYS = {
    "selfcal_cosh": {"name", "dim"},
    "noise_example": {"name"},
    "matrix_factorization": {"name", "rank", "data", "m", "n", "data_seed"},
    "phase_retrieval": {"name", "n", "m", "data_seed"},
}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the bad key."""


@dataclasses.dataclass
class ExperimentConfig:
    problem: dict
    method: str
    ref: dict
    gamma: float
    beta: float
    batch: int
    iterations: int
    eval_every: int
    eta: Optional[float]
    seeds: list
    x0: Optional[list]
    init_scale: float
    output_dir: str
    certificates: list

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _expect(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{key}: {message}")


def _as_float(raw, key: str) -> float:
    _expect(isinstance(raw, (int, float)) and not isinstance(raw, bool), key, f"expected a number, got {raw!r}")
    return float(raw)


def _as_int(raw, key: str) -> int:
    _expect(isinstance(raw, int) and not isinstance(raw, bool), key, f"expected an integer, got {raw!r}")
    return int(raw)


def parse_config_dict(data: dict) -> ExperimentConfig:
    """Validate a raw mapping and resolve defaults."""
    _expect(isinstance(data, dict), "config", "top level must be a mapping")
    known = {"problem", "method", "ref", "gamma", "beta", "batch", "iterations",
             "eval_every", "eta", "seeds", "x0", "init_scale", "output_dir", "certificates"}
    for key in data:
        _expect(key in known, key, "unknown key")
    for key in ("problem", "method", "ref", "gamma", "iterations", "seeds", "output_dir"):
        _expect(key in data, key, "missing required key")

    problem = dict(data["problem"]) if isinstance(data["problem"], dict) else None
    _expect(problem is not None, "problem", "expected a mapping")
    name = problem.get("name")
    _expect(name in PROBLEM_NAMES, "problem.name", f"expected one of {PROBLEM_NAMES}, got {name!r}")
    allowed = _PROBLEM_KEYS[name]
    for key in problem:
        _expect(key in allowed, f"problem.{key}", "unknown key for this problem")
    if name == "selfcal_cosh":
        _expect(_as_int(problem.get("dim", 0), "problem.dim") >= 1, "problem.dim", "must be >= 1")
    elif name == "matrix_factorization":
        _expect("rank" in problem, "problem.rank", "missing required key")
        _expect(_as_int(problem["rank"], "problem.rank") >= 1, "problem.rank", "must be >= 1")
        if "data" not in problem:
            for key in ("m", "n"):
                _expect(_as_int(problem.get(key, 0), f"problem.{key}") >= 2,
                        f"problem.{key}", "synthetic matrix needs m, n >= 2")
            problem.setdefault("data_seed", 0)
    elif name == "phase_retrieval":
        for key in ("n", "m"):
            _expect(_as_int(problem.get(key, 0), f"problem.{key}") >= 1, f"problem.{key}", "must be >= 1")
        problem.setdefault("data_seed", 0)

    method = data["method"]
    _expect(method in METHODS, "method", f"expected one of {METHODS}, got {method!r}")
    if method in STOCHASTIC_METHODS:
        _expect(name in STOCHASTIC_PROBLEMS, "method",
                f"{method!r} needs a stochastic problem ({STOCHASTIC_PROBLEMS})")

    ref_raw = data["ref"]
    _expect(isinstance(ref_raw, dict), "ref", "expected a mapping")
    for key in ref_raw:
        _expect(key in {"kernel", "shape", "scale", "eps"}, f"ref.{key}", "unknown key")
    ref = {
        "kernel": ref_raw.get("kernel"),
        "shape": ref_raw.get("shape", "isotropic"),
        "scale": _as_float(ref_raw.get("scale", 1.0), "ref.scale"),
        "eps": _as_float(ref_raw.get("eps", 1.0), "ref.eps"),
    }
    _expect(ref["kernel"] in KERNEL_NAMES, "ref.kernel",
            f"expected one of {KERNEL_NAMES}, got {ref['kernel']!r}")
    _expect(ref["shape"] in SHAPES, "ref.shape", f"expected one of {SHAPES}, got {ref['shape']!r}")
    _expect(ref["scale"] > 0, "ref.scale", "must be positive")
    _expect(ref["eps"] > 0, "ref.eps", "must be positive")

    gamma = _as_float(data["gamma"], "gamma")
    _expect(gamma > 0, "gamma", "must be positive")
    beta = _as_float(data.get("beta", 0.0), "beta")
    _expect(0.0 <= beta < 1.0, "beta", "must lie in [0, 1)")
    batch = _as_int(data.get("batch", 1), "batch")
    _expect(batch >= 1, "batch", "must be >= 1")
    iterations = _as_int(data["iterations"], "iterations")
    _expect(iterations >= 1, "iterations", "must be >= 1")
    eval_every = _as_int(
        data.get("eval_every", 10 if method in STOCHASTIC_METHODS else 1), "eval_every")
    _expect(eval_every >= 1, "eval_every", "must be >= 1")

    eta = data.get("eta")
    if method == "clipped":
        _expect(eta is not None, "eta", "required for the clipped method")
        eta = _as_float(eta, "eta")
        _expect(eta > 0, "eta", "must be positive")
    else:
        _expect(eta is None, "eta", "only meaningful for the clipped method")

    seeds = data["seeds"]
    _expect(isinstance(seeds, list) and seeds, "seeds", "expected a non-empty list")
    seeds = [_as_int(s, "seeds") for s in seeds]

    x0 = data.get("x0")
    if x0 is not None:
        _expect(isinstance(x0, list) and x0, "x0", "expected a non-empty list of numbers or null")
        x0 = [_as_float(v, "x0") for v in x0]
    init_scale = _as_float(data.get("init_scale", 1.0), "init_scale")
    _expect(init_scale > 0, "init_scale", "must be positive")

    certificates = data.get("certificates", [])
    _expect(isinstance(certificates, list), "certificates", "expected a list")
    for cert in certificates:
        _expect(cert in CERTIFICATES, "certificates", f"unknown certificate {cert!r}")
    if certificates:
        _validate_certificates(certificates, name, method, ref, gamma, beta, eval_every, seeds)

    return ExperimentConfig(
        problem=problem, method=method, ref=ref, gamma=gamma, beta=beta, batch=batch,
        iterations=iterations, eval_every=eval_every, eta=eta, seeds=seeds, x0=x0,
        init_scale=init_scale, output_dir=str(data["output_dir"]), certificates=list(certificates),
    )


def _validate_certificates(certs, problem_name, method, ref, gamma, beta, eval_every, seeds):
    deterministic = [c for c in certs if c in _DETERMINISTIC_CERTS]
    stochastic = [c for c in certs if c not in _DETERMINISTIC_CERTS]
    if deterministic:
        _expect(problem_name == "selfcal_cosh", "certificates",
                f"{deterministic} need problem selfcal_cosh (known L, mu, f_star)")
        _expect(method in ("npgm", "mnpgm"), "method", f"{deterministic} need npgm or mnpgm")
        _expect(ref["kernel"] == "cosh" and ref["shape"] == "isotropic" and ref["scale"] == 1.0,
                "ref", f"{deterministic} need the unit cosh isotropic reference")
    if "thm22" in certs:
        _expect(beta < 0.5, "beta", "thm22 certificate needs beta < 0.5")
        _expect(0.0 < gamma <= 1.0, "gamma", "thm22 certificate needs gamma = alpha/L with alpha <= 1")
    if "thm24" in certs:
        _expect(0.0 < beta < 0.5, "beta", "thm24 certificate needs beta in (0, 0.5)")
        _expect(0.0 < gamma <= 1.0, "gamma", "thm24 certificate needs gamma <= 1/L")
    if "thm27" in certs:
        _expect(0.0 < beta < 1.0, "beta", "thm27 certificate needs beta in (0, 1)")
    if stochastic:
        _expect(problem_name == "noise_example", "certificates",
                f"{stochastic} need problem noise_example")
        _expect(method == "snpgm", "method", f"{stochastic} need method snpgm")
        _expect(ref["kernel"] == "cosh" and ref["scale"] == 1.0, "ref",
                f"{stochastic} need a unit cosh reference")
        _expect(len(seeds) >= 30, "seeds", f"{stochastic} need at least 30 seeds")


def parse_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    return parse_config_dict(data)


def emit_config(config: ExperimentConfig) -> str:
    """Canonical YAML form; parse(emit(config)) == config."""
    return yaml.safe_dump(config.to_dict(), sort_keys=True)


def build_problem(config: ExperimentConfig) -> Union[Problem, StochasticOracle]:
    spec = config.problem
    name = spec["name"]
    if name == "selfcal_cosh":
        return make_selfcal_cosh(spec["dim"])
    if name == "noise_example":
        return make_noise_example()
    if name == "phase_retrieval":
        return make_phase_retrieval(spec["n"], spec["m"], spec["data_seed"])
    if "data" in spec:
        path = Path(spec["data"])
        A = np.load(path) if path.suffix == ".npy" else load_movielens(path)
    else:
        from npgm.rng import gaussian, make_rng

        A = gaussian(make_rng(spec["data_seed"]), (spec["m"], spec["n"]))
    return make_matrix_factorization(A, spec["rank"])


def build_ref(config: ExperimentConfig) -> ReferenceFunction:
    return make_reference(config.ref["kernel"], config.ref["shape"],
                          scale=config.ref["scale"], eps=config.ref["eps"])


def _fmt(value) -> str:
    if value is None:
        return ""
    return format(float(value), ".17g")


def write_trace_csv(trace: RunTrace, path: Path) -> None:
    lines = [CSV_HEADER]
    for rec in trace.records:
        lines.append(",".join([
            str(rec.k), _fmt(rec.f), _fmt(rec.grad_norm), _fmt(rec.stationarity),
            _fmt(rec.lyapunov), str(rec.elapsed_ns),
        ]))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def execute_run(config: ExperimentConfig, seed: int, csv_path: Path) -> dict:
    """Run one seed and persist its trace; returns a summary entry."""
    target = build_problem(config)
    ref = build_ref(config)
    trace = run(
        target, config.method, ref,
        iterations=config.iterations, gamma=config.gamma, beta=config.beta,
        batch=config.batch, eval_every=config.eval_every, seed=seed,
        x0=None if config.x0 is None else np.asarray(config.x0, dtype=float),
        init_scale=config.init_scale, eta=config.eta, config_echo=config.to_dict(),
    )
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, csv_path)
    return {
        "seed": seed,
        "csv": csv_path.name,
        "status": trace.status,
        "abort_reason": trace.abort_reason,
        "final_f": trace.records[-1].f,
        "min_stationarity": min(r.stationarity for r in trace.records),
        "rows": len(trace.records),
    }


def _job(args) -> dict:
    config_dict, seed, csv_path = args
    return execute_run(parse_config_dict(config_dict), seed, Path(csv_path))


def _run_seeds(config: ExperimentConfig, out_dir: Path, jobs: int, seed_offset: int) -> list[dict]:
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(config.to_dict(), seed + seed_offset, str(out_dir / f"seed{seed + seed_offset}.csv"))
             for seed in config.seeds]
    if jobs <= 1:
        return [_job(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_job, tasks))


def _resolve_x0(config: ExperimentConfig, target) -> np.ndarray:
    """Initial point the certificates are stated for (first seed's draw)."""
    if config.x0 is not None:
        return np.asarray(config.x0, dtype=float)
    from npgm.rng import gaussian, make_rng

    problem = target.base if isinstance(target, StochasticOracle) else target
    rng = make_rng(config.seeds[0])
    if problem.default_init is not None:
        return problem.default_init(rng)
    return config.init_scale * gaussian(rng, problem.dim)


def _run_certificates(config: ExperimentConfig) -> list[dict]:
    target = build_problem(config)
    ref = build_ref(config)
    x0 = _resolve_x0(config, target)
    reports = []
    for cert in config.certificates:
        if cert == "thm22":
            alpha = config.gamma  # L = 1 on selfcal_cosh
            out = [analysis.certify_thm22(target, ref, 1.0, alpha, config.beta,
                                          config.iterations, x0).as_report()]
        elif cert == "thm24":
            c, lyap = analysis.certify_thm24(target, ref, 1.0, config.beta, config.gamma,
                                             config.iterations, x0)
            out = [c.as_report(), lyap]
        elif cert == "thm27":
            out = [analysis.certify_thm27(target, ref, 1.0, config.beta,
                                          config.iterations, x0).as_report()]
        elif cert == "thm31":
            out = [analysis.certify_thm31(target, ref, config.gamma, config.iterations,
                                          config.seeds, x0, batch=config.batch)]
        elif cert == "thm34":
            out = analysis.certify_thm34(target, ref, config.gamma, config.iterations,
                                         config.seeds, x0)
        else:
            out = [analysis.certify_thm35(target, ref, config.gamma, config.iterations,
                                          config.seeds, x0, eval_every=config.eval_every).as_report()]
        reports.extend(out)
    return [_report_dict(r) for r in reports]


def _report_dict(report: analysis.CheckReport) -> dict:
    return {
        "name": report.name,
        "samples": report.samples,
        "worst_residual": report.worst_residual,
        "tolerance": report.tolerance,
        "passed": report.passed,
        "witnesses": [repr(w) for w in report.witnesses],
    }


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_run(config: ExperimentConfig, out: Optional[str] = None, jobs: int = 1,
            seed_offset: int = 0) -> int:
    out_dir = Path(out) if out else Path(config.output_dir)
    entries = _run_seeds(config, out_dir, jobs, seed_offset)
    certificates = _run_certificates(config) if config.certificates else []
    summary = {"config": config.to_dict(), "runs": entries, "certificates": certificates}
    _write_json(out_dir / "summary.json", summary)
    ok = all(e["status"] == "ok" for e in entries) and all(c["passed"] for c in certificates)
    for entry in entries:
        print(f"seed {entry['seed']}: {entry['status']} final_f={entry['final_f']:.6g} -> {entry['csv']}")
    for cert in certificates:
        print(f"{'PASS' if cert['passed'] else 'FAIL'} {cert['name']} "
              f"worst_residual={cert['worst_residual']:.3e}")
    return 0 if ok else 1


def parse_grid(specs: list[str]) -> dict:
    """Parse repeated --grid key=v1,v2,... options over gamma and/or beta."""
    if not specs:
        raise ConfigError("grid: at least one --grid gamma=... or --grid beta=... is required")
    grid = {}
    for spec in specs:
        key, _, values = spec.partition("=")
        if key not in ("gamma", "beta") or not values:
            raise ConfigError(f"grid: expected gamma=... or beta=..., got {spec!r}")
        try:
            grid[key] = [float(v) for v in values.split(",")]
        except ValueError as exc:
            raise ConfigError(f"grid: non-numeric value in {spec!r}") from exc
        if not grid[key]:
            raise ConfigError(f"grid: empty value list in {spec!r}")
    return grid


def cmd_sweep(config: ExperimentConfig, grid: dict, out: Optional[str] = None,
              jobs: int = 1, seed_offset: int = 0) -> int:
    out_root = Path(out) if out else Path(config.output_dir)
    keys = sorted(grid)
    combos = list(itertools.product(*(grid[k] for k in keys)))
    results = []
    ok = True
    for combo in combos:
        overrides = dict(zip(keys, combo))
        raw = config.to_dict()
        raw.update(overrides)
        raw["certificates"] = []
        sub = parse_config_dict(raw)
        label = "_".join(f"{k}{v:g}" for k, v in overrides.items())
        entries = _run_seeds(sub, out_root / label, jobs, seed_offset)
        finals = [e["final_f"] for e in entries if e["status"] == "ok"]
        ok = ok and all(e["status"] == "ok" for e in entries)
        results.append({
            "params": overrides,
            "dir": label,
            "runs": entries,
            "mean_final_f": float(np.mean(finals)) if finals else None,
        })
    ranked = sorted((r for r in results if r["mean_final_f"] is not None),
                    key=lambda r: r["mean_final_f"])
    summary = {"config": config.to_dict(), "grid": grid, "results": results,
               "ranking": [{"params": r["params"], "mean_final_f": r["mean_final_f"]}
                           for r in ranked]}
    _write_json(out_root / "sweep_summary.json", summary)
    for rank, r in enumerate(ranked, start=1):
        print(f"#{rank} {r['params']} mean_final_f={r['mean_final_f']:.6g}")
    return 0 if ok else 1


def cmd_verify(suites: list[str], out: Optional[str] = None) -> int:
    reports = analysis.run_suites(suites)
    lines = []
    for report in reports:
        status = "PASS" if report.passed else "FAIL"
        line = (f"{status} {report.name} samples={report.samples} "
                f"worst_residual={report.worst_residual:.6e} tolerance={report.tolerance:.1e}")
        if report.witnesses:
            line += f" witnesses={report.witnesses[:3]!r}"
        lines.append(line)
        print(line)
    ok = all(r.passed for r in reports)
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "verify_report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        _write_json(out_dir / "verify_summary.json",
                    {"passed": ok, "reports": [_report_dict(r) for r in reports]})
    return 0 if ok else 1


def cmd_ingest_movielens(path: str, out: Optional[str] = None) -> int:
    A = load_movielens(path)
    out_dir = Path(out) if out else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / "movielens.npy"
    np.save(target, A)
    nnz = int(np.count_nonzero(A))
    print(f"ingested {A.shape[0]}x{A.shape[1]} matrix with {nnz} nonzeros -> {target}")
    _write_json(out_dir / "movielens_meta.json",
                {"users": A.shape[0], "items": A.shape[1], "nonzeros": nnz})
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="npgm", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a config, one trace CSV per seed")
    p_run.add_argument("config")
    p_sweep = sub.add_parser("sweep", help="cross-product sweep over gamma/beta")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--grid", action="append", default=[],
                         help="key=v1,v2,... over gamma and/or beta (repeatable)")
    for p in (p_run, p_sweep):
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--jobs", type=int, default=1, help="parallel jobs")
        p.add_argument("--seed-offset", type=int, default=0)

    p_verify = sub.add_parser("verify", help="run certification suites")
    p_verify.add_argument("suites", nargs="+", help="suite names or 'all'")
    p_verify.add_argument("--out", default=None)

    p_ingest = sub.add_parser("ingest-movielens", help="parse a u.data ratings file")
    p_ingest.add_argument("path")
    p_ingest.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(parse_config(args.config), args.out, args.jobs, args.seed_offset)
        if args.command == "sweep":
            return cmd_sweep(parse_config(args.config), parse_grid(args.grid),
                             args.out, args.jobs, args.seed_offset)
        if args.command == "verify":
            return cmd_verify(args.suites, args.out)
        return cmd_ingest_movielens(args.path, args.out)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
