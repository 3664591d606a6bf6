"""Experiment configuration, orchestration and machine-readable reports.

A validated :class:`ExperimentConfig` drives: dataset construction, problem
assembly, per-seed solver runs in a worker pool, optional certification and
rate/gap analyses, and serialization (one trace CSV per seed plus one
aggregate JSON report validated against the shipped schema).

The configuration hash covers every semantics-affecting field; two configs
with equal hash produce byte-identical report bodies modulo the timing block.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os
import time
import warnings
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import jsonschema
import numpy as np

from .datasets import Dataset, generate_synthetic, parse_libsvm
from .geometry import Box
from .problems import (ErmProblem, LassoBoxProblem, Problem, QuadraticProblem,
                       SvmDualProblem, global_lipschitz_bound)
from .rates import (GapReport, estimate_kappa_f, measured_rate,
                    rate_rcfdm_general, rate_rcfdm_zero_z, rate_rfdm,
                    sdca_iteration_bound, svm_sigma_sq)
from .solvers import (OPTION_I, OPTION_II, SolverConfig, Trace, run_cyclic_cd,
                      run_projected_gradient, run_scdm)
from .verify import check_rcfdm, check_rfdm, ReplayError

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _take(d: dict, allowed: dict, where: str) -> dict:
    """Strict key extraction: rejects unknown keys, fills defaults."""
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object, got {type(d).__name__}")
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    return {k: d.get(k, default) for k, default in allowed.items()}


@dataclass
class ExperimentConfig:
    problem: dict
    dataset: Optional[dict]
    solver: dict
    seeds: list
    epsilon: Optional[float]
    verify: dict
    rates: dict
    gap: dict
    output_dir: str
    workers: Optional[int]

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        top = _take(raw, {
            "problem": None, "dataset": None, "solver": None,
            "seeds": [0], "epsilon": None, "verify": {}, "rates": {},
            "gap": {}, "output_dir": "out", "workers": None,
        }, "config")
        if top["problem"] is None:
            raise ConfigError("config requires a 'problem' section")
        problem = _take(top["problem"], {
            "kind": None, "lam": None, "loss": "logistic", "l1": 0.0,
            "q": None, "diag": None, "hessian": None, "linear": None,
            "box": None, "normalize": True,
        }, "problem")
        if problem["kind"] not in ("svm-dual", "erm", "lasso", "quadratic"):
            raise ConfigError(f"unknown problem kind {problem['kind']!r}")
        dataset = top["dataset"]
        if dataset is not None:
            dataset = _take(dataset, {
                "source": None, "path": None, "generator": None,
                "n": None, "d": None, "seed": 0, "delta": None,
                "margin": 0.1,
            }, "dataset")
            if dataset["source"] not in ("file", "synthetic"):
                raise ConfigError("dataset.source must be 'file' or 'synthetic'")
        solver = _take(top["solver"] or {}, {
            "kind": "scdm", "option": "I", "w": "L", "omega": None,
            "max_iters": 1000, "record_every": None, "x0": None,
            "stall_tol": None,
        }, "solver")
        if solver["kind"] not in ("scdm", "cyclic", "pgd"):
            raise ConfigError(f"unknown solver kind {solver['kind']!r}")
        if solver["kind"] == "scdm" and solver["option"] not in (OPTION_I, OPTION_II):
            raise ConfigError("solver.option must be 'I' or 'II'")
        if not isinstance(solver["max_iters"], int) or solver["max_iters"] < 0:
            raise ConfigError("solver.max_iters must be a nonnegative integer")
        if not (isinstance(solver["w"], (list, tuple))
                or solver["w"] in ("L", "ones")):
            raise ConfigError("solver.w must be 'L', 'ones' or an explicit vector")
        verify = _take(top["verify"], {
            "rcfdm": False, "rfdm": False, "check_every": None,
        }, "verify")
        rates = _take(top["rates"], {
            "enabled": False, "measured": False, "reference_iters": None,
        }, "rates")
        gap = _take(top["gap"], {
            "enabled": False, "epsilons": [0.1], "n_seeds": 64,
        }, "gap")
        seeds = top["seeds"]
        if (not isinstance(seeds, (list, tuple)) or len(seeds) == 0
                or not all(isinstance(s, int) for s in seeds)):
            raise ConfigError("seeds must be a nonempty list of integers")
        if len(set(seeds)) != len(seeds):
            raise ConfigError("seeds must be distinct")
        return cls(problem=problem, dataset=dataset, solver=solver,
                   seeds=list(seeds), epsilon=top["epsilon"], verify=verify,
                   rates=rates, gap=gap, output_dir=top["output_dir"],
                   workers=top["workers"])

    def semantic_dict(self) -> dict:
        """The semantics-affecting portion (drives the config hash)."""
        return {
            "problem": self.problem, "dataset": self.dataset,
            "solver": self.solver, "seeds": self.seeds,
            "epsilon": self.epsilon, "verify": self.verify,
            "rates": self.rates, "gap": self.gap,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic_dict(), sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    return ExperimentConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# problem assembly


def build_dataset(cfg: ExperimentConfig) -> Optional[Dataset]:
    spec = cfg.dataset
    if spec is None:
        return None
    if spec["source"] == "file":
        if not spec["path"]:
            raise ConfigError("dataset.source='file' requires dataset.path")
        classification = cfg.problem["kind"] in ("svm-dual", "erm")
        return parse_libsvm(spec["path"], classification=classification)
    gen = {k: v for k, v in spec.items()
           if k not in ("source",) and v is not None}
    out = generate_synthetic(gen)
    if not isinstance(out, Dataset):
        raise ConfigError("dataset generator did not produce a dataset; "
                          "use problem.kind='quadratic' for synthetic quadratics")
    return out


def build_problem(cfg: ExperimentConfig, dataset: Optional[Dataset]) -> Problem:
    kind = cfg.problem["kind"]
    if kind == "quadratic":
        if cfg.problem["diag"] is not None:
            H = np.diag(np.asarray(cfg.problem["diag"], dtype=float))
        elif cfg.problem["hessian"] is not None:
            H = np.asarray(cfg.problem["hessian"], dtype=float)
        else:
            raise ConfigError("quadratic problem requires 'diag' or 'hessian'")
        n = H.shape[0]
        lin = (np.zeros(n) if cfg.problem["linear"] is None
               else np.asarray(cfg.problem["linear"], dtype=float))
        box_spec = cfg.problem["box"]
        if box_spec is None:
            box = Box.free(n)
        elif (isinstance(box_spec, (list, tuple)) and len(box_spec) == 2
              and np.isscalar(box_spec[0])):
            box = Box.cube(n, float(box_spec[0]), float(box_spec[1]))
        elif isinstance(box_spec, dict):
            box = Box(np.asarray(box_spec["lower"], float),
                      np.asarray(box_spec["upper"], float))
        else:
            raise ConfigError("quadratic box must be null, [lo, hi] or "
                              "{'lower': [...], 'upper': [...]}")
        return QuadraticProblem(H, lin, box)
    if dataset is None:
        raise ConfigError(f"problem kind {kind!r} requires a dataset section")
    if kind == "svm-dual":
        if cfg.problem["lam"] is None:
            raise ConfigError("svm-dual requires problem.lam")
        if cfg.problem["normalize"]:
            dataset = dataset if dataset.normalized else dataset.normalize_rows()
        else:
            warnings.warn(
                "row normalization disabled: the duality-gap iteration bound "
                "assumes ||a_i|| <= 1 and may not hold", stacklevel=2)
        return SvmDualProblem(dataset.dense(), dataset.labels, cfg.problem["lam"])
    if kind == "erm":
        if cfg.problem["lam"] is None:
            raise ConfigError("erm requires problem.lam")
        return ErmProblem(dataset.dense(), dataset.labels, cfg.problem["lam"],
                          loss=cfg.problem["loss"])
    # lasso: dataset rows are the design matrix, labels the regression target
    q = None if cfg.problem["q"] is None else np.asarray(cfg.problem["q"], float)
    return LassoBoxProblem(dataset.dense(), dataset.labels, q=q,
                           l1=cfg.problem["l1"])


def resolve_w(spec, p: Problem) -> np.ndarray:
    if isinstance(spec, (list, tuple)):
        return np.asarray(spec, dtype=float)
    if spec == "ones":
        return np.ones(p.n)
    return p.lipschitz.copy()


def validate_pipeline(cfg: ExperimentConfig, p: Problem) -> None:
    """Cross-section checks that must fail before any run starts."""
    if cfg.verify["rfdm"] and not p.box.is_free():
        raise ConfigError("expectation-mode certification (verify.rfdm) "
                          "requires an unconstrained problem")
    if cfg.verify["rfdm"] and not (cfg.solver["kind"] == "scdm"
                                   and cfg.solver["option"] == OPTION_I):
        raise ConfigError("verify.rfdm requires solver kind 'scdm', option 'I'")
    if cfg.verify["rcfdm"] and cfg.solver["kind"] != "scdm":
        raise ConfigError("verify.rcfdm requires solver kind 'scdm'")
    if cfg.gap["enabled"] and not isinstance(p, SvmDualProblem):
        raise ConfigError("the duality-gap experiment requires an svm-dual problem")


# ---------------------------------------------------------------------------
# runs


def _solver_config(cfg: ExperimentConfig, p: Problem, seed: int) -> SolverConfig:
    return SolverConfig(
        w=resolve_w(cfg.solver["w"], p),
        omega=cfg.solver["omega"],
        max_iters=cfg.solver["max_iters"],
        seed=seed,
        record_every=cfg.solver["record_every"],
        x0=None if cfg.solver["x0"] is None else np.asarray(cfg.solver["x0"], float),
        gap_tol=cfg.epsilon,
        stall_tol=cfg.solver["stall_tol"],
    )


def run_single(p: Problem, cfg: ExperimentConfig, seed: int) -> Trace:
    sc = _solver_config(cfg, p, seed)
    kind = cfg.solver["kind"]
    if kind == "scdm":
        return run_scdm(p, sc, option=cfg.solver["option"])
    if kind == "cyclic":
        return run_cyclic_cd(p, sc)
    return run_projected_gradient(p, sc)


def _pool_entry(args):
    p, cfg, seed = args
    return seed, run_single(p, cfg, seed)


def reference_solve(p: Problem, iters: Optional[int] = None,
                    gap_tol: float = 1e-12, seed: int = 10_000):
    """High-precision exact-minimization run used as the (x*, f*) reference."""
    if iters is None:
        iters = max(400 * p.n, 20_000)
    sc = SolverConfig(max_iters=iters, seed=seed, gap_tol=gap_tol,
                      gap_every=p.n)
    tr = run_scdm(p, sc, option=OPTION_I)
    x_star = tr.final_x
    return x_star, float(tr.f[len(tr)]), tr


def mean_gap_experiment(p: SvmDualProblem, epsilons, n_seeds: int = 64,
                        seed_base: int = 0, kappa_hat: Optional[float] = None,
                        reference=None) -> list[GapReport]:
    """Multi-seed duality-gap means against the theoretical iteration bound.

    Runs exact coordinate minimization from the origin with w = L for each
    seed up to the largest bound, recording gaps every n iterations, and
    fills each :class:`GapReport` with the observed mean behavior.
    """
    if reference is None:
        reference = reference_solve(p)
    x_star, f_star, ref_trace = reference
    w = p.lipschitz
    if kappa_hat is None:
        kappa_hat = estimate_kappa_f(p, ref_trace, x_star, f_star, w)
    f0 = p.value(p.box.clip(np.zeros(p.n)))
    initial = f0 - f_star + float(np.dot(w, x_star * x_star))
    sigma_sq = svm_sigma_sq(p)
    reports = [sdca_iteration_bound(eps, p.lam, sigma_sq, p.n, kappa_hat, initial)
               for eps in epsilons]
    k_max = max(r.iteration_bound for r in reports)
    if k_max == 0:
        for r in reports:
            r.observed_iteration = 0
            r.mean_gap_at_bound = float(p.duality_gap(p.box.clip(np.zeros(p.n))))
            r.n_seeds = n_seeds
        return reports
    record = p.n
    ks = np.arange(0, k_max + 1, record)
    gap_sum = np.zeros(len(ks))
    final_gaps = {r.iteration_bound: 0.0 for r in reports}
    for s in range(n_seeds):
        sc = SolverConfig(max_iters=k_max, seed=seed_base + s)
        tr = run_scdm(p, sc, option=OPTION_I)
        for j, k in enumerate(ks):
            gap_sum[j] += p.duality_gap(tr.iterate(int(k)))
        for kb in final_gaps:
            final_gaps[kb] += p.duality_gap(tr.iterate(int(kb)))
    mean_gaps = gap_sum / n_seeds
    for r in reports:
        r.n_seeds = n_seeds
        r.mean_gap_at_bound = final_gaps[r.iteration_bound] / n_seeds
        hit = np.nonzero(mean_gaps <= r.epsilon)[0]
        r.observed_iteration = int(ks[hit[0]]) if len(hit) else None
    return reports


# ---------------------------------------------------------------------------
# serialization


def format_float(v: float) -> str:
    return f"{v:.17g}"


def write_trace_csv(trace: Trace, path) -> None:
    """Columns: k, i, f, disp_w_sq, gap (empty where not applicable)."""
    k_total = len(trace)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("k,i,f,disp_w_sq,gap\n")
        for k in range(k_total + 1):
            i = ""
            disp = ""
            if k < k_total:
                ci = int(trace.coords[k])
                i = str(ci) if ci >= 0 else ""
                disp = format_float(float(trace.disp_w_sq[k]))
            gap = trace.gaps.get(k)
            gap_s = format_float(gap) if gap is not None else ""
            fh.write(f"{k},{i},{format_float(float(trace.f[k]))},{disp},{gap_s}\n")


def report_schema() -> dict:
    text = resources.files("fdmkit").joinpath("schemas/report.schema.json").read_text()
    return json.loads(text)


def validate_report(report: dict) -> None:
    jsonschema.validate(report, report_schema())


@dataclass
class ExperimentResult:
    report: dict
    report_path: str
    trace_paths: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        if any(s["status"] != "ok" for s in self.report["seeds"]):
            return 2
        if not self.report["aggregate"]["certificates_all_passed"]:
            return 3
        return 0


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Execute a validated configuration end to end.

    Per-seed solver failures are isolated (recorded with status 'failed');
    the aggregate report always lands on disk.  Certification failures mark
    the certificate as not passed rather than aborting the experiment.
    """
    t0 = time.perf_counter()
    dataset = build_dataset(cfg)
    problem = build_problem(cfg, dataset)
    validate_pipeline(cfg, problem)
    os.makedirs(cfg.output_dir, exist_ok=True)
    w = resolve_w(cfg.solver["w"], problem)

    workers = cfg.workers or os.cpu_count() or 1
    jobs = [(problem, cfg, seed) for seed in cfg.seeds]
    traces: dict[int, Trace] = {}
    failures: dict[int, str] = {}
    if workers > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(_pool_entry, job): job[2] for job in jobs}
            for fut in concurrent.futures.as_completed(futs):
                seed = futs[fut]
                try:
                    _, tr = fut.result()
                    traces[seed] = tr
                except Exception as exc:  # noqa: BLE001 - isolate per seed
                    failures[seed] = f"{type(exc).__name__}: {exc}"
    else:
        for job in jobs:
            seed = job[2]
            try:
                traces[seed] = run_single(problem, cfg, seed)
            except Exception as exc:  # noqa: BLE001 - isolate per seed
                failures[seed] = f"{type(exc).__name__}: {exc}"

    reference = None
    f_star = None
    kappa_hat = None
    rate_block = None
    if cfg.rates["enabled"]:
        reference = reference_solve(problem, iters=cfg.rates["reference_iters"])
        x_star, f_star, ref_trace = reference
        kappa_hat = estimate_kappa_f(problem, ref_trace, x_star, f_star, w)
        lfw = global_lipschitz_bound(problem.lipschitz, w)
        if cfg.solver["kind"] == "scdm" and cfg.solver["option"] == OPTION_II:
            rc = rate_rcfdm_zero_z(kappa_hat, 1.0, problem.n)
        elif cfg.solver["kind"] == "scdm":
            beta = float(np.sqrt(2.0 * (lfw**2 + 1.0)))
            rc = rate_rcfdm_general(kappa_hat, problem.gamma(w), beta, 1.0,
                                    problem.n)
        else:
            rc = rate_rfdm(kappa_hat, problem.gamma(w), 0.0, 1.0, lfw)
        rate_block = rc.as_dict()

    seed_entries = []
    trace_paths = {}
    all_certs_passed = True
    for seed in cfg.seeds:
        if seed in failures:
            seed_entries.append({"seed": seed, "status": "failed",
                                 "error": failures[seed]})
            continue
        tr = traces[seed]
        csv_name = f"trace_seed{seed}.csv"
        csv_path = os.path.join(cfg.output_dir, csv_name)
        write_trace_csv(tr, csv_path)
        trace_paths[seed] = csv_path
        entry = {
            "seed": seed, "status": "ok", "iterations": len(tr),
            "stop_reason": tr.stop_reason,
            "final_f": float(tr.f[len(tr)]), "trace_csv": csv_name,
            "certificates": [],
        }
        if cfg.verify["rcfdm"]:
            try:
                cert = check_rcfdm(tr, problem, w,
                                   check_every=cfg.verify["check_every"] or 1)
                entry["certificates"].append(cert.as_dict())
                all_certs_passed = all_certs_passed and cert.passed
            except ReplayError as exc:
                entry["certificates"].append(
                    {"framework": "rcfdm", "passed": False,
                     "replay_error": str(exc)})
                all_certs_passed = False
        if cfg.verify["rfdm"]:
            try:
                cert = check_rfdm(tr, problem, w,
                                  check_every=cfg.verify["check_every"])
                entry["certificates"].append(cert.as_dict())
                all_certs_passed = all_certs_passed and cert.passed
            except ReplayError as exc:
                entry["certificates"].append(
                    {"framework": "rfdm", "passed": False,
                     "replay_error": str(exc)})
                all_certs_passed = False
        if cfg.rates["measured"] and f_star is not None:
            try:
                entry["measured_rate"] = measured_rate(tr, f_star)
            except ValueError:
                entry["measured_rate"] = None
        seed_entries.append(entry)

    gap_block = None
    if cfg.gap["enabled"]:
        if reference is None:
            reference = reference_solve(problem)
        reports = mean_gap_experiment(problem, cfg.gap["epsilons"],
                                      n_seeds=cfg.gap["n_seeds"],
                                      kappa_hat=kappa_hat, reference=reference)
        gap_block = [r.as_dict() for r in reports]

    ok_finals = [e["final_f"] for e in seed_entries if e["status"] == "ok"]
    report = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": cfg.config_hash(),
        "config": cfg.semantic_dict(),
        "problem": {"kind": cfg.problem["kind"], "n": problem.n,
                    "box_free": problem.box.is_free()},
        "seeds": seed_entries,
        "failed_seeds": sorted(failures),
        "aggregate": {
            "certificates_all_passed": all_certs_passed,
            "mean_final_f": float(np.mean(ok_finals)) if ok_finals else None,
            "rate_constants": rate_block,
            "kappa_hat": kappa_hat,
            "f_star_reference": f_star,
            "gap_reports": gap_block,
        },
        "timing": {"wall_s": time.perf_counter() - t0},
    }
    validate_report(report)
    report_path = os.path.join(cfg.output_dir, "report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ExperimentResult(report=report, report_path=report_path,
                            trace_paths=trace_paths)
