"""Command line interface: fit, graph, cluster, anomaly, bench.

Configuration comes from a JSON file with strict validation (unknown keys
are rejected with their path). Seeds and output directory can be overridden
on the command line. All runs are deterministic: rerunning a command with
the same config and seed reproduces the primary outputs byte for byte. The
one exception is bench_timings.json, which records wall-clock numbers and
is documented as non-reproducible; the bench verdict file is separate.

Exit codes: 0 success, 1 invalid config or input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import anomaly as anom
from . import clustering as clus
from .data import (Dataset, anomaly_labels_for_split, gen_clusters,
                   gen_line_circle, gen_linear_subspace, load_csv,
                   sample_clusters_nominal, split_ionosphere)
from .kernels import gram, kernel_from_config, median_bandwidth
from .lowrank import (LambdaRule, fit, offblock_bound, prox_gradient_solve,
                      save_model)
from .similarity import (cross_structure_edge_fraction, distance_matrix,
                         knn_graph, structured_similarity, write_edge_list)
from .util import InputError, fmt9

GENERATORS = ("line-circle", "clusters", "linear-subspace")


def _expect(cfg, path, allowed):
    if not isinstance(cfg, dict):
        raise InputError(f"{path}: expected an object")
    extra = set(cfg) - set(allowed)
    if extra:
        raise InputError(f"{path}: unknown key(s) {sorted(extra)}")


def _num(cfg, key, path, default=None, required=False, kind=float, lo=None, hi=None):
    if key not in cfg:
        if required:
            raise InputError(f"{path}.{key}: required")
        return default
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InputError(f"{path}.{key}: expected a number, got {v!r}")
    if kind is int and int(v) != v:
        raise InputError(f"{path}.{key}: expected an integer, got {v!r}")
    v = kind(v)
    if lo is not None and v < lo:
        raise InputError(f"{path}.{key}: must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise InputError(f"{path}.{key}: must be <= {hi}, got {v}")
    return v


@dataclass
class DatasetConfig:
    generator: str | None = None
    n_per_class: int = 200
    noise_std: float = 0.05
    n_train: int = 20
    n_test_nominal: int = 50
    n_test_anomalous: int = 50
    path: str | None = None
    has_header: bool = False
    label_column: object = None
    ionosphere_split: bool = False

    @staticmethod
    def from_dict(cfg: dict, path: str = "dataset") -> "DatasetConfig":
        _expect(cfg, path, {"generator", "n_per_class", "noise_std", "n_train",
                            "n_test_nominal", "n_test_anomalous", "path",
                            "has_header", "label_column", "ionosphere_split"})
        gen = cfg.get("generator")
        src = cfg.get("path")
        if (gen is None) == (src is None):
            raise InputError(f"{path}: give exactly one of 'generator' or 'path'")
        if gen is not None and gen not in GENERATORS:
            raise InputError(f"{path}.generator: unknown generator {gen!r}")
        return DatasetConfig(
            generator=gen,
            n_per_class=_num(cfg, "n_per_class", path, 200, kind=int, lo=1),
            noise_std=_num(cfg, "noise_std", path, 0.05, lo=0.0),
            n_train=_num(cfg, "n_train", path, 20, kind=int, lo=1),
            n_test_nominal=_num(cfg, "n_test_nominal", path, 50, kind=int, lo=1),
            n_test_anomalous=_num(cfg, "n_test_anomalous", path, 50, kind=int, lo=1),
            path=src,
            has_header=bool(cfg.get("has_header", False)),
            label_column=cfg.get("label_column"),
            ionosphere_split=bool(cfg.get("ionosphere_split", False)),
        )


@dataclass
class RunConfig:
    experiment: str
    seed: int
    out: str
    dataset: DatasetConfig
    kernel: dict
    lam: LambdaRule
    graph: dict
    cluster: dict
    anomaly: dict
    bench: dict
    raw: dict

    @staticmethod
    def load(path: str, experiment: str, seed_override=None, out_override=None) -> "RunConfig":
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except FileNotFoundError:
            raise InputError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from None
        _expect(cfg, "config", {"experiment", "seed", "out", "dataset", "kernel",
                                "lambda", "fit", "graph", "cluster", "anomaly", "bench"})
        stated = cfg.get("experiment")
        if stated is not None and stated != experiment:
            raise InputError(
                f"config.experiment is {stated!r} but the {experiment!r} command was invoked")
        if "dataset" not in cfg:
            raise InputError("config.dataset: required")
        ds = DatasetConfig.from_dict(cfg["dataset"])

        lam_cfg = cfg.get("lambda", {"rule": "relative", "value": 0.1})
        _expect(lam_cfg, "config.lambda", {"rule", "value"})
        lam = LambdaRule(kind=lam_cfg.get("rule", "relative"),
                         value=_num(lam_cfg, "value", "config.lambda", 0.1, lo=0.0))

        seed = seed_override if seed_override is not None else _num(cfg, "seed", "config", 0, kind=int, lo=0)
        out = out_override if out_override is not None else cfg.get("out")
        if out is None:
            raise InputError("config.out: required (or pass --out)")

        resolved = dict(cfg)
        resolved["experiment"] = experiment
        resolved["seed"] = seed
        resolved["out"] = out
        return RunConfig(experiment=experiment, seed=int(seed), out=str(out),
                         dataset=ds, kernel=cfg.get("kernel", {"type": "linear"}),
                         lam=lam, graph=cfg.get("graph", {}),
                         cluster=cfg.get("cluster", {}),
                         anomaly=cfg.get("anomaly", {}), bench=cfg.get("bench", {}),
                         raw=resolved)

    @property
    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _single_dataset(cfg: RunConfig) -> Dataset:
    ds = cfg.dataset
    if ds.generator == "line-circle":
        return gen_line_circle(ds.n_per_class, ds.noise_std, cfg.seed)
    if ds.generator is not None:
        raise InputError(
            f"dataset.generator {ds.generator!r} produces a train/test pair; "
            "this command needs a single dataset (use line-circle or a CSV)")
    return load_csv(ds.path, has_header=ds.has_header, label_column=ds.label_column)


def _anomaly_traintest(cfg: RunConfig, repeat: int):
    ds = cfg.dataset
    rep_seed = cfg.seed + repeat
    if ds.generator == "clusters":
        tt = gen_clusters(rep_seed, ds.n_train, ds.n_test_nominal, ds.n_test_anomalous)
        return tt.train, tt.test, tt.test.labels
    if ds.generator == "linear-subspace":
        tt = gen_linear_subspace(rep_seed, ds.n_train, ds.n_test_nominal, ds.n_test_anomalous)
        return tt.train, tt.test, tt.test.labels
    if ds.generator is not None:
        raise InputError(f"dataset.generator {ds.generator!r} is not an anomaly source")
    if not ds.ionosphere_split:
        raise InputError("anomaly on a CSV needs dataset.ionosphere_split = true")
    full = _ION_CACHE.get(ds.path)
    if full is None:
        full = load_csv(ds.path, has_header=ds.has_header, label_column=ds.label_column)
        _ION_CACHE[ds.path] = full
    plan = split_ionosphere(full, rep_seed)
    return full.take(plan.train), full.take(plan.test), anomaly_labels_for_split(full, plan)


_ION_CACHE: dict = {}


def _resolve_kernel(cfg: RunConfig, data) -> object:
    return kernel_from_config(cfg.kernel, data=data, path="config.kernel")


def _round9(x: float) -> float:
    return float(fmt9(x))


def _write_json(doc: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def cmd_fit(cfg: RunConfig) -> None:
    data = _single_dataset(cfg)
    kern = _resolve_kernel(cfg, data)
    model = fit(gram(kern, data), cfg.lam)
    os.makedirs(cfg.out, exist_ok=True)
    save_model(model, os.path.join(cfg.out, "model.json"))

    vals = model.spectrum.values
    report = {
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "n": model.n,
        "d": data.d,
        "lambda": _round9(model.lam),
        "sigma_max": _round9(float(vals[0]) if vals.size else 0.0),
        "rank": model.rank,
        "eigenvalues_top": [_round9(v) for v in vals[:10]],
        "fingerprint": data.fingerprint,
    }
    if data.labels is not None:
        cross = data.labels[:, None] != data.labels[None, :]
        report["offblock_bound"] = _round9(offblock_bound(model))
        report["observed_cross_max"] = _round9(float(np.max(np.abs(model.z[cross]))))
    _write_json(report, os.path.join(cfg.out, "fit_report.json"))
    print(f"fit: n={model.n} rank={model.rank} lambda={fmt9(model.lam)} "
          f"sigma_max={report['sigma_max']}")
    if "offblock_bound" in report:
        print(f"fit: offblock bound={report['offblock_bound']} "
              f"observed cross max={report['observed_cross_max']}")
    print(f"fit: wrote model.json and fit_report.json to {cfg.out}")


def cmd_graph(cfg: RunConfig) -> None:
    _expect(cfg.graph, "config.graph", {"k", "bandwidth"})
    k = _num(cfg.graph, "k", "config.graph", 3, kind=int, lo=1)
    data = _single_dataset(cfg)
    kern = _resolve_kernel(cfg, data)

    bw = cfg.graph.get("bandwidth", "median")
    if bw == "median":
        bw = median_bandwidth(data)
    elif isinstance(bw, bool) or not isinstance(bw, (int, float)):
        raise InputError(f"config.graph.bandwidth: expected a number or 'median', got {bw!r}")

    x = data.X
    sq = np.sum(x * x, axis=0)
    d2 = np.clip(sq[:, None] + sq[None, :] - 2.0 * (x.T @ x), 0.0, None)
    np.fill_diagonal(d2, 0.0)
    euclid = knn_graph(-np.sqrt(d2), k, construction=f"euclidean-knn({k})")

    model = fit(gram(kern, data), cfg.lam)
    sim = structured_similarity(model, data, bandwidth=float(bw))
    struct = knn_graph(-distance_matrix(sim), k, construction=f"structural-knn({k})")

    os.makedirs(cfg.out, exist_ok=True)
    write_edge_list(euclid, os.path.join(cfg.out, "edges_euclidean.txt"))
    write_edge_list(struct, os.path.join(cfg.out, "edges_structural.txt"))
    report = {
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "k": k,
        "bandwidth": _round9(float(bw)),
        "n": data.n,
        "edges_euclidean": len(euclid.edges),
        "edges_structural": len(struct.edges),
    }
    if data.labels is not None:
        report["cross_fraction_euclidean"] = _round9(
            cross_structure_edge_fraction(euclid, data.labels))
        report["cross_fraction_structural"] = _round9(
            cross_structure_edge_fraction(struct, data.labels))
        print(f"graph: cross fraction euclidean={report['cross_fraction_euclidean']} "
              f"structural={report['cross_fraction_structural']}")
    _write_json(report, os.path.join(cfg.out, "graph_report.json"))
    print(f"graph: wrote edge lists and graph_report.json to {cfg.out}")


def cmd_cluster(cfg: RunConfig, trials_override=None) -> None:
    _expect(cfg.cluster, "config.cluster", {"k", "trials", "runs", "bandwidth"})
    k = _num(cfg.cluster, "k", "config.cluster", None, required=True, kind=int, lo=1)
    trials = trials_override if trials_override is not None else \
        _num(cfg.cluster, "trials", "config.cluster", 100, kind=int, lo=1)
    runs = cfg.cluster.get("runs")
    if not isinstance(runs, list) or not runs:
        raise InputError("config.cluster.runs: need a nonempty list of runs")

    data = _single_dataset(cfg)
    if data.labels is None:
        raise InputError("cluster experiments need labeled data")
    kern = _resolve_kernel(cfg, data)
    bw = cfg.cluster.get("bandwidth", "median")
    if bw == "median":
        bw = median_bandwidth(data)
    elif isinstance(bw, bool) or not isinstance(bw, (int, float)):
        raise InputError(f"config.cluster.bandwidth: expected a number or 'median', got {bw!r}")

    rows = []
    for i, run in enumerate(runs):
        _expect(run, f"config.cluster.runs[{i}]", {"representation", "algorithm"})
        rep = run.get("representation")
        alg = run.get("algorithm")
        summ = clus.run_trials(data, rep, alg, k, int(trials), cfg.seed,
                               kernel=kern, lam=cfg.lam, bandwidth=float(bw))
        rows.append(summ)
        print(f"cluster: {rep}/{alg} mean_error={fmt9(summ.mean_error)} "
              f"std={fmt9(summ.std_error)} over {summ.trials} trials")

    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "cluster_summary.csv")
    with open(path, "w") as fh:
        fh.write("dataset,representation,algorithm,k,mean_error,std_error,trials\n")
        for s in rows:
            fh.write(f"{s.dataset},{s.representation},{s.algorithm},{s.k},"
                     f"{fmt9(s.mean_error)},{fmt9(s.std_error)},{s.trials}\n")
    print(f"cluster: wrote {path}")


def _write_roc_csv(curve: anom.RocCurve, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("fpr,tpr\n")
        for f, t in zip(curve.fpr, curve.tpr):
            fh.write(f"{fmt9(f)},{fmt9(t)}\n")


def _write_repeats_csv(curves: list, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("repeat,fpr,tpr\n")
        for r, c in enumerate(curves):
            for f, t in zip(c.fpr, c.tpr):
                fh.write(f"{r},{fmt9(f)},{fmt9(t)}\n")


def cmd_anomaly(cfg: RunConfig, alpha_override=None, literal_override=False) -> None:
    _expect(cfg.anomaly, "config.anomaly",
            {"mode", "repeats", "alpha", "baseline_neighbors", "literal_decision_rule"})
    mode = cfg.anomaly.get("mode", "full")
    if mode not in ("full", "split"):
        raise InputError(f"config.anomaly.mode: must be full|split, got {mode!r}")
    repeats = _num(cfg.anomaly, "repeats", "config.anomaly", 100, kind=int, lo=1)
    alpha = alpha_override if alpha_override is not None else \
        _num(cfg.anomaly, "alpha", "config.anomaly", 0.05)
    if not (0.0 < alpha < 1.0):
        raise InputError(f"config.anomaly.alpha: must lie in (0, 1), got {alpha}")
    neighbors = _num(cfg.anomaly, "baseline_neighbors", "config.anomaly", 2, kind=int, lo=1)
    literal = literal_override or bool(cfg.anomaly.get("literal_decision_rule", False))

    klrr_curves, base_curves = [], []
    klrr_aucs, base_aucs = [], []
    flagged = 0
    total = 0
    for rep in range(int(repeats)):
        train, test, labels = _anomaly_traintest(cfg, rep)
        kern = _resolve_kernel(cfg, train)
        model = anom.fit_anomaly(train, kern, cfg.lam, mode=mode,
                                 seed=cfg.seed + rep if mode == "split" else None)
        reports = anom.score_batch(model, test)
        p = np.array([r.p for r in reports])
        nom = p[labels == 0]
        ano = p[labels == 1]
        if nom.size == 0 or ano.size == 0:
            raise InputError(
                f"repeat {rep}: test set lacks one of the classes "
                f"({nom.size} nominal, {ano.size} anomalous)")
        c = anom.roc(nom, ano)
        klrr_curves.append(c)
        klrr_aucs.append(c.auc)
        pb = anom.knn_pvalues(train, test, int(neighbors))
        cb = anom.roc(pb[labels == 0], pb[labels == 1])
        base_curves.append(cb)
        base_aucs.append(cb.auc)
        flagged += int(np.sum([anom.decide(v, alpha, literal) for v in p]))
        total += p.size

    os.makedirs(cfg.out, exist_ok=True)
    _write_roc_csv(anom.mean_roc(klrr_curves), os.path.join(cfg.out, "roc_klrr_mean.csv"))
    _write_roc_csv(anom.mean_roc(base_curves), os.path.join(cfg.out, "roc_baseline_mean.csv"))
    _write_repeats_csv(klrr_curves, os.path.join(cfg.out, "roc_klrr_repeats.csv"))
    _write_repeats_csv(base_curves, os.path.join(cfg.out, "roc_baseline_repeats.csv"))
    metrics = {
        "auc_klrr": _round9(float(np.mean(klrr_aucs))),
        "auc_knn": _round9(float(np.mean(base_aucs))),
        "alpha": _round9(float(alpha)),
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
    }
    _write_json(metrics, os.path.join(cfg.out, "metrics.json"))
    print(f"anomaly: auc_klrr={metrics['auc_klrr']} auc_knn={metrics['auc_knn']} "
          f"over {repeats} repeats")
    print(f"anomaly: flagged {flagged}/{total} test points at alpha={fmt9(alpha)}"
          + (" (literal rule)" if literal else ""))
    print(f"anomaly: wrote ROC files and metrics.json to {cfg.out}")


def cmd_bench(cfg: RunConfig) -> None:
    _expect(cfg.bench, "config.bench", {"sizes", "budget_seconds", "oracle_n"})
    sizes = cfg.bench.get("sizes", [100, 300, 1000])
    if (not isinstance(sizes, list) or not sizes
            or any(isinstance(s, bool) or not isinstance(s, int) or s < 2 for s in sizes)):
        raise InputError("config.bench.sizes: need a list of integers >= 2")
    budget = _num(cfg.bench, "budget_seconds", "config.bench", 10.0, lo=0.0)
    oracle_n = _num(cfg.bench, "oracle_n", "config.bench", 0, kind=int, lo=0)

    gram_secs, fit_secs = {}, {}
    for n in sizes:
        data = sample_clusters_nominal(n, cfg.seed)
        kern = _resolve_kernel(cfg, data)
        t0 = time.perf_counter()
        g = gram(kern, data)
        t1 = time.perf_counter()
        fit(g, cfg.lam)
        t2 = time.perf_counter()
        gram_secs[str(n)] = t1 - t0
        fit_secs[str(n)] = t2 - t1
        print(f"bench: n={n} gram={t1 - t0:.3f}s fit={t2 - t1:.3f}s")

    within = None
    if 1000 in sizes:
        within = bool(fit_secs["1000"] < budget)

    speedup = None
    oracle_secs = closed_secs = None
    if oracle_n:
        data = sample_clusters_nominal(int(oracle_n), cfg.seed)
        kern = _resolve_kernel(cfg, data)
        g = gram(kern, data)
        t0 = time.perf_counter()
        model = fit(g, cfg.lam)
        closed_secs = time.perf_counter() - t0
        t0 = time.perf_counter()
        prox_gradient_solve(g, model.lam)
        oracle_secs = time.perf_counter() - t0
        speedup = oracle_secs / max(closed_secs, 1e-12)
        print(f"bench: oracle n={oracle_n} closed={closed_secs:.3f}s "
              f"iterative={oracle_secs:.3f}s speedup={speedup:.1f}x")

    os.makedirs(cfg.out, exist_ok=True)
    report = {
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "sizes": list(sizes),
        "budget_seconds": _round9(budget),
        "within_budget": within,
        "oracle_n": int(oracle_n),
        "closed_form_at_least_10x": None if speedup is None else bool(speedup >= 10.0),
    }
    _write_json(report, os.path.join(cfg.out, "bench_report.json"))
    timings = {
        "note": "wall-clock timings; not covered by the byte-identical rerun guarantee",
        "gram_seconds": gram_secs,
        "fit_seconds": fit_secs,
        "closed_seconds": closed_secs,
        "oracle_seconds": oracle_secs,
    }
    _write_json(timings, os.path.join(cfg.out, "bench_timings.json"))
    print(f"bench: wrote bench_report.json and bench_timings.json to {cfg.out}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="klrr",
        description="Low-rank kernel representations: fitting, graphs, clustering, anomaly detection")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("fit", "fit a representation and write the model file"),
            ("graph", "write Euclidean and structural k-NN edge lists"),
            ("cluster", "run repeated clustering trials and write a summary table"),
            ("anomaly", "run repeated anomaly experiments and write ROC data"),
            ("bench", "time the closed-form fit and compare to the iterative solver")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override config.seed")
        p.add_argument("--out", default=None, help="override config.out")
        if name == "cluster":
            p.add_argument("--trials", type=int, default=None, help="override config.cluster.trials")
        if name == "anomaly":
            p.add_argument("--alpha", type=float, default=None, help="override config.anomaly.alpha")
            p.add_argument("--literal-decision-rule", action="store_true",
                           help="flag points with p > alpha instead of p <= alpha")

    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config, args.command, args.seed, args.out)
        if args.command == "fit":
            cmd_fit(cfg)
        elif args.command == "graph":
            cmd_graph(cfg)
        elif args.command == "cluster":
            cmd_cluster(cfg, trials_override=args.trials)
        elif args.command == "anomaly":
            cmd_anomaly(cfg, alpha_override=args.alpha,
                        literal_override=args.literal_decision_rule)
        elif args.command == "bench":
            cmd_bench(cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (np.linalg.LinAlgError, FloatingPointError, MemoryError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
