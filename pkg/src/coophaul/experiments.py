"""Monte-Carlo experiment driver: scenario sweeps, baselines, decentralized
convergence studies, aggregation, and figure-data CSV emission."""

from __future__ import annotations

import csv
import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import decentral, dynclust, netmodel, presets, sparse_mcp
from .equalize import lmmse, mse, rates

EXPERIMENTS = (
    "mse_vs_traffic",
    "rate_vs_traffic",
    "cdf_distributed",
    "cdf_static",
    "dynamic_rate",
    "cluster_map",
    "admm_convergence",
    "oi_convergence",
)


class ExperimentError(RuntimeError):
    """Spec invalid or too many drops failed (over the failure budget)."""


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: what to run, on which scenario, how many drops."""

    experiment: str
    scenario: netmodel.ScenarioConfig = field(default_factory=netmodel.ScenarioConfig)
    drops: int = 200
    lambda_grid_points: int = 30
    lambda_values_rel: tuple = ()
    traffic_targets: tuple = (18, 54)
    greedy_sizes: tuple = (1, 2, 4, 8, 16)
    n_clusters: int = 7
    n_clusters_list: tuple = ()
    clusters_preset: str = "seven_clusters"
    intra_mode: str = "both"
    rho: float = 0.1
    comm_rule: str = "nearest"
    admm_rounds: int = 2000
    shift_eps: float = 0.1
    solver_kkt_tol: float = 1e-4

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ExperimentError(f"unknown experiment {self.experiment!r}")
        if self.drops < 1:
            raise ExperimentError("drops must be >= 1")

    @classmethod
    def from_file(cls, path) -> "ExperimentSpec":
        text = Path(path).read_text()
        scenario_names = {f.name for f in dataclasses.fields(netmodel.ScenarioConfig)}
        spec_kwargs = {}
        scenario_kwargs = {}
        for key, value in _parse_pairs(text).items():
            if key in scenario_names:
                scenario_kwargs[key] = netmodel._coerce(
                    value, _field_type(netmodel.ScenarioConfig, key)
                )
            elif key == "experiment" or _has_field(cls, key):
                spec_kwargs[key] = (
                    value if key == "experiment" else netmodel._coerce(value, _field_type(cls, key))
                )
            else:
                raise ExperimentError(f"unknown config key {key!r}")
        if "experiment" not in spec_kwargs:
            raise ExperimentError("config must set 'experiment'")
        return cls(scenario=netmodel.ScenarioConfig(**scenario_kwargs), **spec_kwargs)


def _parse_pairs(text: str) -> dict:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ExperimentError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        pairs[key] = value
    return pairs


def _field_type(cls, name):
    for f in dataclasses.fields(cls):
        if f.name == name:
            return f.type
    raise ExperimentError(f"unknown config key {name!r}")


def _has_field(cls, name) -> bool:
    return any(f.name == name for f in dataclasses.fields(cls))


@dataclass
class AggregateResult:
    """Everything run_experiment aggregated, plus the per-drop raw records.

    series maps a series name to {"grid": x-values, "<metric>": (drops, points)
    arrays}; pooled_rates holds flattened per-user rate samples for CDFs;
    extras carries experiment-specific payloads (cluster maps, round logs).
    """

    experiment: str
    drops: int
    base_seed: int
    series: dict = field(default_factory=dict)
    pooled_rates: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)


def _mean_se(values: np.ndarray):
    mean = values.mean(axis=0)
    if values.shape[0] > 1:
        se = values.std(axis=0, ddof=1) / math.sqrt(values.shape[0])
    else:
        se = np.zeros_like(mean)
    return mean, se


def _experiment_solver_opts(spec: ExperimentSpec) -> sparse_mcp.SolverOptions:
    return sparse_mcp.SolverOptions(kkt_tol=spec.solver_kkt_tol)


def _rel_grid(spec: ExperimentSpec) -> np.ndarray:
    """Relative penalty grid, descending, with the unpenalized endpoint."""
    grid = np.logspace(-3.0, 0.0, spec.lambda_grid_points)[::-1]
    return np.concatenate([grid, [0.0]])


def _sweep_record(spec: ExperimentSpec, seed: int) -> dict:
    real = netmodel.realize_scenario(spec.scenario, seed)
    groups = sparse_mcp.GroupStructure.from_realization(real)
    penalty = sparse_mcp.PenaltySpec("distributed")
    lam_max = sparse_mcp.lambda_max(real.H, groups, penalty)
    rel = _rel_grid(spec)
    points = sparse_mcp.lambda_sweep(
        real.H, groups, penalty, rel * lam_max, opts=_experiment_solver_opts(spec)
    )
    rec = {"lambda_rel": rel, "lam_max": lam_max, "mse": [], "traffic": [],
           "sum_rate": [], "per_cell_rate": [], "rates_per_point": []}
    for p in points:
        report = rates(p.equalizer.W, real.H, real.serving_bs, real.n_bs)
        rec["mse"].append(p.mse)
        rec["traffic"].append(p.traffic)
        rec["sum_rate"].append(report.sum_rate)
        rec["per_cell_rate"].append(report.per_cell_rate)
        rec["rates_per_point"].append(report.rate)
    rec["rates_per_point"] = np.array(rec["rates_per_point"])
    return rec


def _greedy_record(spec: ExperimentSpec, seed: int) -> dict:
    real = netmodel.realize_scenario(spec.scenario, seed)
    groups = sparse_mcp.GroupStructure.from_realization(real)
    rec = {"sizes": list(spec.greedy_sizes), "traffic": [], "per_cell_rate": [],
           "rates_per_size": []}
    for size in spec.greedy_sizes:
        clustering, eq = dynclust.greedy_cluster(real.H, groups, size)
        report = rates(eq.W, real.H, real.serving_bs, real.n_bs)
        rec["traffic"].append(dynclust.intra_cluster_traffic(clustering, "distributed"))
        rec["per_cell_rate"].append(report.per_cell_rate)
        rec["rates_per_size"].append(report.rate)
    rec["rates_per_size"] = np.array(rec["rates_per_size"])
    return rec


def _static_record(spec: ExperimentSpec, seed: int) -> dict:
    real = netmodel.realize_scenario(spec.scenario, seed)
    groups = sparse_mcp.GroupStructure.from_realization(real)
    clustering = presets.clustering_preset(spec.clusters_preset, real.n_bs)
    penalty = sparse_mcp.PenaltySpec("static_cut", clustering=clustering)
    lam_max = sparse_mcp.lambda_max(real.H, groups, penalty)
    rel = np.asarray(spec.lambda_values_rel or (1.0, 0.05, 0.01), dtype=float)
    opts = sparse_mcp.SolverOptions(kkt_tol=spec.solver_kkt_tol * max(1.0, lam_max))
    rec = {"lambda_rel": rel, "inter_traffic": [], "rates": [], "mse": [],
           "per_cell_rate": []}
    warm = sparse_mcp.restricted_lmmse(real.H, groups)
    for r in np.sort(rel)[::-1]:
        eq = sparse_mcp.solve_group_lasso(
            real.H, groups, penalty, float(r * lam_max), opts, warm_start=warm
        )
        warm = eq.W
        traffic_matrix = sparse_mcp.backhaul_matrix(eq.W, groups)
        cross = clustering.labels[:, None] != clustering.labels[None, :]
        thr = 1e-6 * max(1.0, float(traffic_matrix.max()))
        rec["inter_traffic"].append(int(np.count_nonzero((traffic_matrix > thr) & cross)))
        report = rates(eq.W, real.H, real.serving_bs, real.n_bs)
        rec["rates"].append(report.rate)
        rec["mse"].append(mse(eq.W, real.H))
        rec["per_cell_rate"].append(report.per_cell_rate)
    rec["lambda_rel"] = np.sort(rel)[::-1]
    return rec


def _dynamic_record(spec: ExperimentSpec, seed: int) -> dict:
    real = netmodel.realize_scenario(spec.scenario, seed)
    groups = sparse_mcp.GroupStructure.from_realization(real)
    dist_penalty = sparse_mcp.PenaltySpec("distributed")
    lam_max = sparse_mcp.lambda_max(real.H, groups, dist_penalty)
    lam_rel = float(spec.lambda_values_rel[0]) if spec.lambda_values_rel else 1.0
    n_list = list(spec.n_clusters_list or range(1, real.n_bs + 1))
    opts = sparse_mcp.SolverOptions(kkt_tol=spec.solver_kkt_tol * max(1.0, lam_max))
    rec = {"n_clusters": n_list, "inter_traffic": [], "intra_distributed": [],
           "intra_head": [], "per_cell_rate": [], "rates_per_n": [], "iters": []}
    for n_c in n_list:
        result = dynclust.dynamic_mcp(
            real.H, groups, lam_rel * lam_max, n_c, opts=opts, seed=seed
        )
        traffic_matrix = sparse_mcp.backhaul_matrix(result.equalizer.W, groups)
        labels = result.clustering.labels
        cross = labels[:, None] != labels[None, :]
        thr = 1e-6 * max(1.0, float(traffic_matrix.max()))
        rec["inter_traffic"].append(int(np.count_nonzero((traffic_matrix > thr) & cross)))
        rec["intra_distributed"].append(
            dynclust.intra_cluster_traffic(result.clustering, "distributed")
        )
        rec["intra_head"].append(dynclust.intra_cluster_traffic(result.clustering, "head"))
        report = rates(result.equalizer.W, real.H, real.serving_bs, real.n_bs)
        rec["per_cell_rate"].append(report.per_cell_rate)
        rec["rates_per_n"].append(report.rate)
        rec["iters"].append(result.iterations)
    return rec


def _run_drops(spec: ExperimentSpec, base_seed: int, worker, threads: int = 1):
    seeds = [base_seed + i for i in range(spec.drops)]
    records = [None] * spec.drops
    failures = []
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for i, out in enumerate(pool.map(_drop_shim, [(worker, spec, s) for s in seeds])):
                records[i] = out
    else:
        for i, s in enumerate(seeds):
            records[i] = _drop_shim((worker, spec, s))
    good = []
    for i, out in enumerate(records):
        if isinstance(out, dict) and "error" in out:
            failures.append((i, seeds[i], out["error"]))
        else:
            good.append(out)
    if len(failures) > 0.01 * spec.drops:
        raise ExperimentError(
            f"{len(failures)}/{spec.drops} drops failed (budget 1%): "
            + "; ".join(str(f) for f in failures[:3])
        )
    return good, failures


_WORKERS = {}


def _drop_shim(job):
    worker, spec, seed = job
    try:
        return _WORKERS[worker](spec, seed)
    except Exception as exc:  # logged, counted against the failure budget
        return {"error": f"{type(exc).__name__}: {exc}"}


_WORKERS.update(
    {
        "sweep": _sweep_record,
        "greedy": _greedy_record,
        "static": _static_record,
        "dynamic": _dynamic_record,
    }
)


def _stack(records, key):
    return np.array([r[key] for r in records])


def run_mse_vs_traffic(spec: ExperimentSpec, base_seed: int, threads: int = 1) -> AggregateResult:
    records, failures = _run_drops(spec, base_seed, "sweep", threads)
    result = AggregateResult(spec.experiment, spec.drops, base_seed, failures=failures)
    result.series["proposed"] = {
        "grid": records[0]["lambda_rel"],
        "mse": _stack(records, "mse"),
        "traffic": _stack(records, "traffic"),
        "sum_rate": _stack(records, "sum_rate"),
        "per_cell_rate": _stack(records, "per_cell_rate"),
        "lam_max": np.array([r["lam_max"] for r in records]),
    }
    return result


def run_rate_vs_traffic(spec: ExperimentSpec, base_seed: int, threads: int = 1) -> AggregateResult:
    result = run_mse_vs_traffic(spec, base_seed, threads)
    result.experiment = spec.experiment
    records, failures = _run_drops(spec, base_seed, "greedy", threads)
    result.failures.extend(failures)
    result.series["greedy"] = {
        "grid": np.array(records[0]["sizes"]),
        "traffic": _stack(records, "traffic").astype(float),
        "per_cell_rate": _stack(records, "per_cell_rate"),
    }
    return result


def run_cdf_distributed(spec: ExperimentSpec, base_seed: int, threads: int = 1) -> AggregateResult:
    sweep_records, fail1 = _run_drops(spec, base_seed, "sweep", threads)
    greedy_spec = dataclasses.replace(spec, greedy_sizes=(2, 4))
    greedy_records, fail2 = _run_drops(greedy_spec, base_seed, "greedy", threads)
    result = AggregateResult(
        spec.experiment, spec.drops, base_seed, failures=fail1 + fail2
    )
    for target in spec.traffic_targets:
        pooled = []
        for rec in sweep_records:
            idx = int(np.argmin(np.abs(np.asarray(rec["traffic"]) - target)))
            pooled.append(rec["rates_per_point"][idx])
        result.pooled_rates[f"proposed_t{target}"] = np.concatenate(pooled)
    for j, size in enumerate(greedy_spec.greedy_sizes):
        result.pooled_rates[f"greedy_s{size}"] = np.concatenate(
            [rec["rates_per_size"][j] for rec in greedy_records]
        )
    result.series["summary"] = {
        "grid": np.asarray(spec.traffic_targets, dtype=float),
        "traffic": np.array(
            [
                [rec["traffic"][int(np.argmin(np.abs(np.asarray(rec["traffic"]) - t)))]
                 for t in spec.traffic_targets]
                for rec in sweep_records
            ],
            dtype=float,
        ),
    }
    return result


def run_cdf_static(spec: ExperimentSpec, base_seed: int, threads: int = 1) -> AggregateResult:
    records, failures = _run_drops(spec, base_seed, "static", threads)
    result = AggregateResult(spec.experiment, spec.drops, base_seed, failures=failures)
    rel = records[0]["lambda_rel"]
    result.series["static"] = {
        "grid": rel,
        "inter_traffic": _stack(records, "inter_traffic").astype(float),
        "mse": _stack(records, "mse"),
        "per_cell_rate": _stack(records, "per_cell_rate"),
    }
    for j, r in enumerate(rel):
        result.pooled_rates[f"lam{_fmt_rel(r)}"] = np.concatenate(
            [rec["rates"][j] for rec in records]
        )
    return result


def run_dynamic_rate(spec: ExperimentSpec, base_seed: int, threads: int = 1) -> AggregateResult:
    records, failures = _run_drops(spec, base_seed, "dynamic", threads)
    result = AggregateResult(spec.experiment, spec.drops, base_seed, failures=failures)
    result.series["dynamic"] = {
        "grid": np.array(records[0]["n_clusters"], dtype=float),
        "inter_traffic": _stack(records, "inter_traffic").astype(float),
        "intra_distributed": _stack(records, "intra_distributed").astype(float),
        "intra_head": _stack(records, "intra_head").astype(float),
        "per_cell_rate": _stack(records, "per_cell_rate"),
        "iters": _stack(records, "iters").astype(float),
    }
    greedy_records, fail2 = _run_drops(spec, base_seed, "greedy", threads)
    result.failures.extend(fail2)
    result.series["greedy"] = {
        "grid": np.array(greedy_records[0]["sizes"], dtype=float),
        "traffic": _stack(greedy_records, "traffic").astype(float),
        "per_cell_rate": _stack(greedy_records, "per_cell_rate"),
    }
    return result


def run_cluster_map(spec: ExperimentSpec, base_seed: int, threads: int = 1) -> AggregateResult:
    real = netmodel.realize_scenario(spec.scenario, base_seed)
    groups = sparse_mcp.GroupStructure.from_realization(real)
    penalty = sparse_mcp.PenaltySpec("distributed")
    lam_max = sparse_mcp.lambda_max(real.H, groups, penalty)
    lam_rel = float(spec.lambda_values_rel[0]) if spec.lambda_values_rel else 0.1
    opts = sparse_mcp.SolverOptions(kkt_tol=spec.solver_kkt_tol * max(1.0, lam_max))
    outcome = dynclust.dynamic_mcp(
        real.H, groups, lam_rel * lam_max, spec.n_clusters, opts=opts, seed=base_seed
    )
    traffic_matrix = sparse_mcp.backhaul_matrix(outcome.equalizer.W, groups)
    result = AggregateResult(spec.experiment, 1, base_seed)
    result.extras["clustering"] = outcome.clustering
    result.extras["traffic_matrix"] = traffic_matrix
    result.extras["realization"] = real
    result.extras["objective_trace"] = outcome.objective_trace
    return result


def _decentral_instance(spec: ExperimentSpec, base_seed: int):
    real = netmodel.realize_balanced_scenario(spec.scenario, base_seed)
    H, _ = decentral.aligned_channel(real)
    n = real.n_bs
    groups = decentral.trivial_groups(n)
    graph = decentral.build_comm_graph(real.geometry, spec.comm_rule)
    return real, H, groups, graph


def run_admm_convergence(spec: ExperimentSpec, base_seed: int, threads: int = 1) -> AggregateResult:
    real, H, groups, graph = _decentral_instance(spec, base_seed)
    clustering = presets.clustering_preset(
        spec.clusters_preset if real.n_bs == 19 else "singletons", real.n_bs
    )
    penalty = sparse_mcp.PenaltySpec("static_cut", clustering=clustering)
    lam_max = sparse_mcp.lambda_max(H, groups, penalty)
    lam_rel = float(spec.lambda_values_rel[0]) if spec.lambda_values_rel else 0.4
    lam = lam_rel * lam_max
    opts = sparse_mcp.SolverOptions(kkt_tol=1e-7 * max(1.0, lam_max), max_iterations=500_000)
    ref = sparse_mcp.solve_group_lasso(H, groups, penalty, lam, opts)
    coeff = penalty.coefficients(real.n_bs)
    ref_obj = mse(ref.W, H) + lam * float(
        np.sum(coeff * sparse_mcp.backhaul_matrix(ref.W, groups))
    )
    run = decentral.admm_static(
        H, clustering, lam, spec.rho, graph, spec.admm_rounds,
        reference=ref.W, reference_objective=ref_obj,
    )
    result = AggregateResult(spec.experiment, 1, base_seed)
    result.extras["round_log"] = run.log
    result.extras["reference_objective"] = ref_obj
    return result


def run_oi_convergence(spec: ExperimentSpec, base_seed: int, threads: int = 1) -> AggregateResult:
    real, H, groups, graph = _decentral_instance(spec, base_seed)
    penalty = sparse_mcp.PenaltySpec("distributed")
    lam_max = sparse_mcp.lambda_max(H, groups, penalty)
    lam_rel = float(spec.lambda_values_rel[0]) if spec.lambda_values_rel else 0.02
    opts = sparse_mcp.SolverOptions(kkt_tol=1e-6 * max(1.0, lam_max))
    eq = sparse_mcp.solve_group_lasso(H, groups, penalty, lam_rel * lam_max, opts)
    pair = dynclust.laplacian_pair(sparse_mcp.backhaul_matrix(eq.W, groups))
    evals, evecs = np.linalg.eigh(pair.sym)
    lam1_central = max(abs(float(evals[0])), abs(float(evals[-1])))
    n_c = spec.n_clusters
    projector_central = evecs[:, :n_c] @ evecs[:, :n_c].T

    rows = [pair.sym[b] for b in range(real.n_bs)]
    net = decentral.SyncNetwork(graph)
    phase1 = decentral.decentralized_oi(
        rows, 1, graph, seed=base_seed, net=net, max_iters=spec.admm_rounds,
        tol=1e-14, track_projectors=False,
    )
    shift = float(phase1.eig_magnitudes[0]) + spec.shift_eps
    shifted = []
    for b, row in enumerate(rows):
        r = -np.asarray(row, dtype=float).copy()
        r[b] += shift
        shifted.append(r)
    phase2 = decentral.decentralized_oi(
        shifted, n_c, graph, seed=base_seed + 1, net=net,
        max_iters=spec.admm_rounds, tol=1e-13, track_projectors=True,
    )
    result = AggregateResult(spec.experiment, 1, base_seed)
    result.extras["phase1_history"] = [
        abs(float(h[0]) - lam1_central) for h in phase1.eig_history
    ]
    result.extras["phase2_gaps"] = [
        float(np.linalg.norm(p - projector_central, 2)) for p in phase2.projectors
    ]
    result.extras["lam1_central"] = lam1_central
    result.extras["lam1_decentralized"] = float(phase1.eig_magnitudes[0])
    return result


_RUNNERS = {
    "mse_vs_traffic": run_mse_vs_traffic,
    "rate_vs_traffic": run_rate_vs_traffic,
    "cdf_distributed": run_cdf_distributed,
    "cdf_static": run_cdf_static,
    "dynamic_rate": run_dynamic_rate,
    "cluster_map": run_cluster_map,
    "admm_convergence": run_admm_convergence,
    "oi_convergence": run_oi_convergence,
}


def run_experiment(spec: ExperimentSpec, base_seed: int = 0, out_dir=None, threads: int = 1):
    """Execute an experiment and, when out_dir is given, write its CSVs.

    Returns (AggregateResult, list of written paths).  Drop seeds are
    base_seed + drop index, so reruns are byte-identical.
    """
    result = _RUNNERS[spec.experiment](spec, base_seed, threads)
    paths = []
    if out_dir is not None:
        paths = emit_figure_data(result, out_dir)
        if result.failures:
            fail_path = Path(out_dir) / "failures.csv"
            with fail_path.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["drop", "seed", "error"])
                writer.writerows(result.failures)
            paths.append(fail_path)
    return result, paths


def _fmt(x) -> str:
    return f"{x:.12g}"


def _fmt_rel(r: float) -> str:
    return f"{r:g}"


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _write_sweep_csv(path: Path, series: dict):
    mse_mean, mse_se = _mean_se(series["mse"])
    traffic_mean, _ = _mean_se(series["traffic"].astype(float))
    rate_mean, rate_se = _mean_se(series["per_cell_rate"])
    rows = [
        [_fmt(g), _fmt(mse_mean[j]), _fmt(mse_se[j]), _fmt(traffic_mean[j]),
         _fmt(rate_mean[j]), _fmt(rate_se[j])]
        for j, g in enumerate(series["grid"])
    ]
    return _write_csv(
        path, ["lambda", "mse_mean", "mse_se", "traffic_mean", "rate_mean", "rate_se"], rows
    )


def _write_greedy_csv(path: Path, series: dict):
    traffic_mean, _ = _mean_se(series["traffic"])
    rate_mean, rate_se = _mean_se(series["per_cell_rate"])
    rows = [
        [int(s), _fmt(traffic_mean[j]), _fmt(rate_mean[j]), _fmt(rate_se[j])]
        for j, s in enumerate(series["grid"])
    ]
    return _write_csv(
        path, ["cluster_size", "traffic_mean", "rate_mean", "rate_se"], rows
    )


def _write_cdf_csv(path: Path, samples: np.ndarray):
    r = np.sort(samples)
    ecdf = np.arange(1, r.size + 1) / r.size
    rows = [[_fmt(v), _fmt(p)] for v, p in zip(r, ecdf)]
    return _write_csv(path, ["rate", "cdf"], rows)


def emit_figure_data(result: AggregateResult, out_dir) -> list:
    """Write the figure-facing CSVs for one aggregated experiment."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    kind = result.experiment

    if kind in ("mse_vs_traffic", "rate_vs_traffic"):
        paths.append(_write_sweep_csv(out / "sweep.csv", result.series["proposed"]))
        if "greedy" in result.series:
            paths.append(_write_greedy_csv(out / "greedy.csv", result.series["greedy"]))
        paths.append(_write_drops_csv(out / "drops.csv", result))
    elif kind == "cdf_distributed":
        for name, samples in sorted(result.pooled_rates.items()):
            paths.append(_write_cdf_csv(out / f"cdf_{name}.csv", samples))
    elif kind == "cdf_static":
        for name, samples in sorted(result.pooled_rates.items()):
            paths.append(_write_cdf_csv(out / f"cdf_{name}.csv", samples))
        series = result.series["static"]
        inter_mean, _ = _mean_se(series["inter_traffic"])
        rows = []
        for j, r in enumerate(series["grid"]):
            p10 = float(np.quantile(result.pooled_rates[f"lam{_fmt_rel(r)}"], 0.10))
            rows.append([_fmt(r), _fmt(inter_mean[j]), _fmt(p10)])
        paths.append(
            _write_csv(out / "static_summary.csv",
                       ["lambda_rel", "inter_traffic_mean", "rate_p10"], rows)
        )
    elif kind == "dynamic_rate":
        series = result.series["dynamic"]
        rate_mean, rate_se = _mean_se(series["per_cell_rate"])
        inter_mean, _ = _mean_se(series["inter_traffic"])
        for mode in ("distributed", "head"):
            intra_mean, _ = _mean_se(series[f"intra_{mode}"])
            rows = [
                [int(n), _fmt(inter_mean[j] + intra_mean[j]), _fmt(rate_mean[j]),
                 _fmt(rate_se[j])]
                for j, n in enumerate(series["grid"])
            ]
            paths.append(
                _write_csv(out / f"dynamic_rate_{mode}.csv",
                           ["n_clusters", "traffic_mean", "rate_mean", "rate_se"], rows)
            )
        paths.append(_write_greedy_csv(out / "greedy.csv", result.series["greedy"]))
    elif kind == "cluster_map":
        real = result.extras["realization"]
        clustering = result.extras["clustering"]
        traffic_matrix = result.extras["traffic_matrix"]
        pos = real.geometry.bs_positions
        rows = [
            [b, _fmt(pos[b, 0]), _fmt(pos[b, 1]), int(clustering.labels[b])]
            for b in range(real.n_bs)
        ]
        paths.append(_write_csv(out / "clusters.csv", ["bs", "x_m", "y_m", "cluster"], rows))
        rows = [
            ["bs", b, _fmt(pos[b, 0]), _fmt(pos[b, 1]), int(clustering.labels[b])]
            for b in range(real.n_bs)
        ] + [
            ["ms", u, _fmt(real.ms_positions[u, 0]), _fmt(real.ms_positions[u, 1]),
             int(clustering.labels[real.serving_bs[u]])]
            for u in range(real.n_users)
        ]
        paths.append(
            _write_csv(out / "map_points.csv", ["role", "id", "x_m", "y_m", "cluster"], rows)
        )
        thr = 1e-6 * max(1.0, float(traffic_matrix.max()))
        rows = []
        labels = clustering.labels
        for b in range(real.n_bs):
            for b2 in range(real.n_bs):
                if b != b2 and traffic_matrix[b, b2] > thr:
                    rows.append(
                        [b, b2, _fmt(traffic_matrix[b, b2]), int(labels[b] != labels[b2])]
                    )
        paths.append(
            _write_csv(out / "edges.csv", ["src_bs", "dst_bs", "weight", "inter_cluster"], rows)
        )
    elif kind == "admm_convergence":
        log = result.extras["round_log"]
        rows = [
            [k, _fmt(log.objective_gap[k]), _fmt(log.max_disagreement[k]),
             _fmt(log.dist_to_centralized[k])]
            for k in range(len(log))
        ]
        paths.append(
            _write_csv(out / "rounds.csv",
                       ["round", "objective_gap", "max_disagreement", "dist_to_centralized"],
                       rows)
        )
    elif kind == "oi_convergence":
        gaps = result.extras["phase2_gaps"]
        eig_err = abs(result.extras["lam1_decentralized"] - result.extras["lam1_central"])
        rows = [
            [k, _fmt(eig_err), _fmt(0.0), _fmt(gaps[k])] for k in range(len(gaps))
        ]
        paths.append(
            _write_csv(out / "rounds.csv",
                       ["round", "objective_gap", "max_disagreement", "dist_to_centralized"],
                       rows)
        )
        rows = [
            [k, _fmt(err), _fmt(0.0), _fmt(err)]
            for k, err in enumerate(result.extras["phase1_history"])
        ]
        paths.append(
            _write_csv(out / "rounds_phase1.csv",
                       ["round", "objective_gap", "max_disagreement", "dist_to_centralized"],
                       rows)
        )
    return paths


def _write_drops_csv(path: Path, result: AggregateResult):
    series = result.series["proposed"]
    rows = []
    for d in range(series["mse"].shape[0]):
        for j, g in enumerate(series["grid"]):
            rows.append(
                [d, result.base_seed + d, _fmt(g), _fmt(series["mse"][d, j]),
                 _fmt(float(series["traffic"][d, j])), _fmt(series["per_cell_rate"][d, j])]
            )
    return _write_csv(
        path, ["drop", "seed", "lambda_rel", "mse", "traffic", "per_cell_rate"], rows
    )
