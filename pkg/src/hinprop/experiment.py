"""Seed splits, baselines, the full evaluation protocol and report emission.

The protocol mirrors the usual transductive setup: for each seed fraction
and repeat, reveal a stratified random subset of the ground-truth labels,
fit per-path weights on the revealed seeds, fuse the normalized per-path
similarities, propagate, and score accuracy over the non-seed labeled
nodes.  Per-repeat randomness is derived from the experiment seed with
SeedSequence, so reports are byte-identical across runs and independent of
execution order (repeats may run in worker threads).

Per-path PathSim matrices and their degree normalizations depend only on
the graph, not on the seed split, so they are computed once per dataset in
a PathOperatorCache.  Only the beta-weighted combination changes across
repeats; it is assembled block by block into one reusable n x n buffer.
"""

from __future__ import annotations

import concurrent.futures
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .datagen import GenConfig, generate_dataset
from .graph import HinGraph, load_dataset
from .metapath import DEFAULT_METAPATHS, MetaPath, PathFactor, parse_metapath
from .propagate import (FLAG_UNREACHABLE, LabelResult, PropagationConfig,
                        assign_labels, label_matrix, normalize_degrees,
                        propagate, spectral_radius_estimate)
from .weights import (BetaWeights, SvrConfig, build_training_pairs,
                      fit_metapath_weights)

METHOD_NAMES = ("tpathmine", "knn", "majority")


def split_seeds(truth: np.ndarray, fraction: float, rng_seed) -> tuple[np.ndarray, np.ndarray]:
    """Stratified seed/evaluation split of the labeled nodes.

    Draws ceil(fraction * n_labeled) seeds, allocated across classes by
    largest remainder with a floor of one seed per nonempty class (so the
    total can exceed the ceiling when classes are tiny).  Returns sorted
    index arrays (seeds, evaluation).  Deterministic in rng_seed.
    """
    truth = np.asarray(truth)
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    labeled = np.nonzero(truth > 0)[0]
    if len(labeled) == 0:
        raise ValueError("no labeled nodes to split")
    class_ids = np.unique(truth[labeled])
    counts = np.array([(truth[labeled] == c).sum() for c in class_ids])
    total = max(math.ceil(fraction * len(labeled)), len(class_ids))

    exact = fraction * counts
    quotas = np.clip(np.floor(exact).astype(np.int64), 1, counts)
    remainders = exact - np.floor(exact)
    # np.argsort is stable, so equal remainders resolve by class order.
    while quotas.sum() < total:
        room = quotas < counts
        order = np.argsort(-remainders, kind="stable")
        grew = False
        for c in order:
            if room[c]:
                quotas[c] += 1
                grew = True
                if quotas.sum() == total:
                    break
        if not grew:
            break
    while quotas.sum() > total:
        order = np.argsort(remainders, kind="stable")[::-1]
        shrank = False
        for c in order[::-1]:
            if quotas[c] > 1:
                quotas[c] -= 1
                shrank = True
                if quotas.sum() == total:
                    break
        if not shrank:
            break

    rng = np.random.default_rng(rng_seed)
    picks = []
    for c, q in zip(class_ids, quotas):
        members = labeled[truth[labeled] == c]
        picks.append(rng.choice(members, size=int(q), replace=False))
    seed_idx = np.sort(np.concatenate(picks))
    eval_idx = np.setdiff1d(labeled, seed_idx)
    return seed_idx, eval_idx


def accuracy(predicted: np.ndarray, truth: np.ndarray, eval_idx: np.ndarray) -> float:
    """Percent of evaluation nodes whose predicted class matches the truth."""
    eval_idx = np.asarray(eval_idx)
    if len(eval_idx) == 0:
        raise ValueError("empty evaluation set")
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    return 100.0 * float(np.mean(predicted[eval_idx] == truth[eval_idx]))


def knn_baseline(s_com: np.ndarray, seed_labels: np.ndarray, k: int = 5) -> LabelResult:
    """Majority vote among the k most similar seeds under S_com.

    Seed nodes keep their own label.  Similarity ties at the k-th position
    resolve toward the lower node index, vote ties toward the lower class
    id.  Nodes with zero similarity to every seed get class 1 and the
    "unreachable" flag.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    seed_labels = np.asarray(seed_labels)
    n = len(seed_labels)
    seeds = np.nonzero(seed_labels > 0)[0]
    if len(seeds) == 0:
        raise ValueError("need at least one seed")
    labels = seed_labels.astype(np.int64).copy()
    flags = [""] * n
    others = np.nonzero(seed_labels <= 0)[0]
    if len(others) == 0:
        return LabelResult(labels=labels, flags=flags)

    sims = np.asarray(s_com)[np.ix_(others, seeds)]
    k_eff = min(k, len(seeds))
    if k_eff < len(seeds):
        kth = np.partition(sims, len(seeds) - k_eff, axis=1)[:, len(seeds) - k_eff]
    else:
        kth = np.full(len(others), -np.inf)
    seed_classes = seed_labels[seeds]
    n_classes = int(seed_classes.max())
    for pos, node in enumerate(others):
        row = sims[pos]
        if not (row > 0).any():
            labels[node] = 1
            flags[node] = FLAG_UNREACHABLE
            continue
        cand = np.nonzero(row >= kth[pos])[0]
        # stable sort on the negated similarities keeps candidates in
        # ascending seed-index order within each tie group
        order = np.argsort(-row[cand], kind="stable")[:k_eff]
        votes = np.bincount(seed_classes[cand[order]], minlength=n_classes + 1)
        labels[node] = int(votes[1:].argmax()) + 1
    return LabelResult(labels=labels, flags=flags)


def majority_baseline(seed_labels: np.ndarray) -> LabelResult:
    """Assign every non-seed node the most frequent seed class."""
    seed_labels = np.asarray(seed_labels)
    seeds = np.nonzero(seed_labels > 0)[0]
    if len(seeds) == 0:
        raise ValueError("need at least one seed")
    votes = np.bincount(seed_labels[seeds])
    top = int(votes[1:].argmax()) + 1
    labels = np.where(seed_labels > 0, seed_labels, top).astype(np.int64)
    return LabelResult(labels=labels, flags=[""] * len(seed_labels))


def _sparse_normalized_scatter(factor):
    """Flat indices and values of a sparse path's normalized PathSim.

    Returns (lin, vals, inv_sqrt) where lin holds row*n + col positions of
    the nonzero entries of D^{-1/2} PathSim D^{-1/2}, so assembly can add
    the whole path with one fancy-index update.
    """
    n = factor.n
    m = (factor.h @ factor.h_t).tocsr()
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(m.indptr))
    cols = m.indices.astype(np.int64)
    denom = factor.diag[rows] + factor.diag[cols]
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(denom > 0, 2.0 * m.data / np.where(denom > 0, denom, 1.0), 0.0)
    inv = normalize_degrees(np.bincount(rows, weights=vals, minlength=n))
    vals *= inv[rows]
    vals *= inv[cols]
    keep = vals != 0.0
    return rows[keep] * n + cols[keep], vals[keep], inv


class PathOperatorCache:
    """Split-independent per-path operators for one graph.

    Holds a PathFactor per meta-path plus the PathSim row-sum normalizers.
    Paths that are expensive to re-evaluate are materialized once, as one
    contiguous stack of dense normalized matrices within a memory budget,
    so assembly is a single vector-matrix product over the stack.  Sparse
    leftover paths are precomputed as flat scatter indices plus values;
    anything else is rebuilt block by block on every assembly.  ``assemble``
    produces the beta-weighted combined operator, ``pair_features`` the
    per-pair PathSim feature matrix used to fit beta.
    """

    def __init__(self, graph: HinGraph, paths, block_rows: int = 2048,
                 mem_budget_bytes: float = 2.6e9):
        self.graph = graph
        self.paths = [parse_metapath(p, graph) if isinstance(p, str) else p
                      for p in paths]
        self.names = [p.name for p in self.paths]
        self.n = graph.n_target
        self.block_rows = block_rows
        self.factors = [PathFactor(p, graph) for p in self.paths]
        self.beta_memo: dict[tuple, BetaWeights] = {}

        # Estimated flops to rebuild the full PathSim matrix per assembly.
        costs = []
        for f in self.factors:
            if f._sparse:
                nnz = f.h.nnz
                costs.append(nnz * max(1.0, nnz / max(1, f.n)))
            else:
                costs.append(float(f.n) * f.n * f.inner_dim)
        bytes_each = 8.0 * self.n * self.n
        budget = mem_budget_bytes
        dense_idx = []
        for k in np.argsort(-np.asarray(costs), kind="stable"):
            if bytes_each <= budget:
                budget -= bytes_each
                dense_idx.append(int(k))
        self._dense_idx = sorted(dense_idx)
        self._stack = (np.empty((len(self._dense_idx), self.n, self.n))
                       if self._dense_idx else None)
        self.materialized: dict[int, np.ndarray] = {}
        self.inv_sqrt: list[np.ndarray] = [None] * len(self.factors)
        self._scatter: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for slot, k in enumerate(self._dense_idx):
            m = self.factors[k].pathsim_matrix(self.block_rows,
                                               out=self._stack[slot])
            inv = normalize_degrees(m.sum(axis=1))
            for start in range(0, self.n, self.block_rows):
                stop = min(start + self.block_rows, self.n)
                m[start:stop] *= inv[start:stop, None]
                m[start:stop] *= inv[None, :]
            self.materialized[k] = m
            self.inv_sqrt[k] = inv
        for k, factor in enumerate(self.factors):
            if k in self.materialized:
                continue
            if factor._sparse:
                lin, vals, inv = _sparse_normalized_scatter(factor)
                self._scatter[k] = (lin, vals)
                self.inv_sqrt[k] = inv
            else:
                self.inv_sqrt[k] = normalize_degrees(
                    factor.pathsim_row_sums(self.block_rows))

    def pair_features(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        """PathSim feature matrix (len(i), n_paths) for node index pairs."""
        out = np.empty((len(np.asarray(i)), len(self.factors)), dtype=np.float64)
        for k, factor in enumerate(self.factors):
            out[:, k] = factor.pair_values(i, j)
        return out

    def assemble(self, beta_normalized, out: np.ndarray | None = None) -> np.ndarray:
        """Combined operator sum_k beta_k D_k^{-1/2} W_k D_k^{-1/2}.

        ``out`` may be a preallocated (n, n) float64 buffer to reuse across
        repeats; its previous contents are overwritten.
        """
        beta = np.asarray(beta_normalized, dtype=np.float64)
        if len(beta) != len(self.factors):
            raise ValueError(f"{len(self.factors)} paths but {len(beta)} weights")
        if out is None:
            out = np.empty((self.n, self.n), dtype=np.float64)
        elif out.shape != (self.n, self.n):
            raise ValueError("output buffer has wrong shape")
        flat = out.reshape(-1)
        live = [slot for slot, k in enumerate(self._dense_idx) if beta[k] != 0.0]
        if not live:
            out.fill(0.0)
        elif len(live) == 1:
            np.multiply(self._stack[live[0]], beta[self._dense_idx[live[0]]],
                        out=out)
        else:
            coeff = np.array([beta[k] for k in self._dense_idx])
            np.dot(coeff, self._stack.reshape(len(self._dense_idx), -1),
                   out=flat)
        for k, (lin, vals) in self._scatter.items():
            if beta[k] != 0.0:
                # scatter indices are unique, so fancy-index += is exact
                flat[lin] += beta[k] * vals
        for k, factor in enumerate(self.factors):
            if (beta[k] == 0.0 or k in self.materialized
                    or k in self._scatter):
                continue
            for start in range(0, self.n, self.block_rows):
                stop = min(start + self.block_rows, self.n)
                block = factor.rows(start, stop)
                # fold the path weight into the row scaling to avoid a
                # full-block temporary
                block *= (beta[k] * self.inv_sqrt[k][start:stop])[:, None]
                block *= self.inv_sqrt[k][None, :]
                out[start:stop] += block
        return out


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one evaluation run."""

    fractions: tuple = (0.1, 0.2, 0.3, 0.4, 0.5)
    repeats: int = 5
    methods: tuple = METHOD_NAMES
    metapaths: tuple = tuple(DEFAULT_METAPATHS)
    svr: SvrConfig = field(default_factory=SvrConfig)
    prop: PropagationConfig = field(default_factory=PropagationConfig)
    max_pairs: int = 10_000
    target_mode: str = "connections"
    knn_k: int = 5
    rng_seed: int = 0
    gen: GenConfig | None = None
    dataset_dir: str | None = None

    def __post_init__(self):
        self.fractions = tuple(float(f) for f in self.fractions)
        self.methods = tuple(self.methods)
        self.metapaths = tuple(self.metapaths)
        for f in self.fractions:
            if not 0.0 < f < 1.0:
                raise ValueError(f"seed fraction {f} outside (0, 1)")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        for m in self.methods:
            if m not in METHOD_NAMES:
                raise ValueError(f"unknown method {m!r}")
        if not self.methods:
            raise ValueError("no methods requested")
        if self.max_pairs < 1:
            raise ValueError("max_pairs must be >= 1")
        if self.knn_k < 1:
            raise ValueError("knn_k must be >= 1")


@dataclass
class CellRecord:
    method: str
    fraction: float
    repeat: int
    accuracy: float


@dataclass
class ExperimentReport:
    """Per-cell accuracies plus fitted weights and diagnostics.

    ``betas``, ``spectral`` and ``wall_times`` are keyed by
    (fraction_index, repeat).  Wall times are informational only and are
    never written into the deterministic report artifacts.
    """

    fractions: tuple
    methods: tuple
    repeats: int
    path_names: tuple
    records: list[CellRecord]
    betas: dict = field(default_factory=dict)
    spectral: dict = field(default_factory=dict)
    wall_times: dict = field(default_factory=dict)

    def accuracies(self, method: str, fraction_idx: int) -> np.ndarray:
        fraction = self.fractions[fraction_idx]
        vals = [r.accuracy for r in self.records
                if r.method == method and r.fraction == fraction]
        return np.asarray(vals)

    def mean_accuracy(self, method: str, fraction_idx: int) -> float:
        return float(self.accuracies(method, fraction_idx).mean())

    def std_accuracy(self, method: str, fraction_idx: int) -> float:
        return float(self.accuracies(method, fraction_idx).std())

    def beta_matrix(self) -> np.ndarray:
        """Normalized weights stacked as (n_cells, n_paths), cell order."""
        keys = sorted(self.betas)
        return np.vstack([self.betas[k].normalized for k in keys])

    def max_spectral(self) -> float:
        return max(self.spectral.values()) if self.spectral else 0.0


def _cell_seeds(base_seed: int, fraction_idx: int, repeat: int) -> tuple[int, int]:
    ss = np.random.SeedSequence((int(base_seed), fraction_idx, repeat))
    split_seed, pair_seed = (int(s) for s in ss.generate_state(2, np.uint64))
    return split_seed, pair_seed


def _with_context(exc: Exception, fraction: float, repeat: int) -> Exception:
    msg = f"fraction {fraction:g} repeat {repeat}: {exc}"
    try:
        return type(exc)(msg)
    except Exception:
        return RuntimeError(msg)


def resolve_dataset(spec: ExperimentSpec) -> tuple[HinGraph, np.ndarray]:
    """Load or generate the dataset referenced by the spec."""
    if spec.dataset_dir is not None:
        return load_dataset(spec.dataset_dir)
    if spec.gen is not None:
        return generate_dataset(spec.gen)
    raise ValueError("spec names neither a dataset directory nor a generator config")


def _fit_cell_beta(spec: ExperimentSpec, cache: PathOperatorCache, graph,
                   seed_labels, seed_idx, pair_seed: int) -> BetaWeights:
    key = (spec.rng_seed, pair_seed, spec.max_pairs, spec.target_mode,
           spec.svr.epsilon, spec.svr.C, spec.svr.max_iter, spec.svr.tol,
           tuple(cache.names))
    hit = cache.beta_memo.get(key)
    if hit is not None:
        return hit
    pairs = build_training_pairs(graph, cache.factors, seed_idx,
                                 spec.max_pairs, pair_seed,
                                 labels=seed_labels,
                                 target_mode=spec.target_mode)
    beta = fit_metapath_weights(pairs, spec.svr)
    cache.beta_memo[key] = beta
    return beta


def _run_cell(spec: ExperimentSpec, cache, graph, truth, fraction_idx: int,
              repeat: int, out_buf: np.ndarray | None):
    fraction = spec.fractions[fraction_idx]
    try:
        t0 = time.perf_counter()
        split_seed, pair_seed = _cell_seeds(spec.rng_seed, fraction_idx, repeat)
        seed_idx, eval_idx = split_seeds(truth, fraction, split_seed)
        seed_labels = np.zeros_like(np.asarray(truth))
        seed_labels[seed_idx] = np.asarray(truth)[seed_idx]

        accs: dict[str, float] = {}
        beta = None
        rho = None
        if "majority" in spec.methods:
            res = majority_baseline(seed_labels)
            accs["majority"] = accuracy(res.labels, truth, eval_idx)
        if cache is not None:
            beta = _fit_cell_beta(spec, cache, graph, seed_labels, seed_idx,
                                  pair_seed)
            s_com = cache.assemble(beta.normalized, out=out_buf)
            rho = spectral_radius_estimate(lambda v: s_com @ v, cache.n,
                                           max_iter=15)
            if "tpathmine" in spec.methods:
                y = label_matrix(seed_labels, graph.schema.n_classes)
                scores = propagate(s_com, y, spec.prop)
                res = assign_labels(scores)
                accs["tpathmine"] = accuracy(res.labels, truth, eval_idx)
            if "knn" in spec.methods:
                res = knn_baseline(s_com, seed_labels, spec.knn_k)
                accs["knn"] = accuracy(res.labels, truth, eval_idx)
        wall = time.perf_counter() - t0
        return fraction_idx, repeat, accs, beta, rho, wall
    except Exception as exc:
        raise _with_context(exc, fraction, repeat) from exc


def run_experiment(spec: ExperimentSpec, graph: HinGraph | None = None,
                   truth: np.ndarray | None = None,
                   cache: PathOperatorCache | None = None,
                   threads: int = 1) -> ExperimentReport:
    """Execute the full protocol and return the aggregated report.

    ``graph``/``truth``/``cache`` may be passed to share a dataset and its
    path operators across runs (parameter sweeps); otherwise they are
    resolved from the spec.  With ``threads > 1`` the (fraction, repeat)
    cells run in a thread pool; results are merged in deterministic cell
    order, so the report does not depend on the thread count.
    """
    if graph is None:
        graph, truth = resolve_dataset(spec)
    if truth is None:
        raise ValueError("graph passed without its truth labels")
    needs_model = bool({"tpathmine", "knn"} & set(spec.methods))
    if needs_model and cache is None:
        cache = PathOperatorCache(graph, spec.metapaths)
    if not needs_model:
        cache = None

    cells = [(fi, r) for fi in range(len(spec.fractions))
             for r in range(spec.repeats)]
    outcomes = {}
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {pool.submit(_run_cell, spec, cache, graph, truth,
                                   fi, r, None): (fi, r)
                       for fi, r in cells}
            for fut in concurrent.futures.as_completed(futures):
                fi, r, accs, beta, rho, wall = fut.result()
                outcomes[(fi, r)] = (accs, beta, rho, wall)
    else:
        out_buf = (np.empty((cache.n, cache.n), dtype=np.float64)
                   if cache is not None else None)
        for fi, r in cells:
            fi, r, accs, beta, rho, wall = _run_cell(
                spec, cache, graph, truth, fi, r, out_buf)
            outcomes[(fi, r)] = (accs, beta, rho, wall)

    records = []
    betas, spectral, wall_times = {}, {}, {}
    for fi, fraction in enumerate(spec.fractions):
        for method in spec.methods:
            for r in range(spec.repeats):
                accs, beta, rho, wall = outcomes[(fi, r)]
                records.append(CellRecord(method=method, fraction=fraction,
                                          repeat=r, accuracy=accs[method]))
        for r in range(spec.repeats):
            accs, beta, rho, wall = outcomes[(fi, r)]
            if beta is not None:
                betas[(fi, r)] = beta
            if rho is not None:
                spectral[(fi, r)] = rho
            wall_times[(fi, r)] = wall
    return ExperimentReport(
        fractions=spec.fractions, methods=spec.methods, repeats=spec.repeats,
        path_names=tuple(cache.names) if cache is not None else tuple(spec.metapaths),
        records=records, betas=betas, spectral=spectral, wall_times=wall_times)


@dataclass
class SweepResult:
    """Accuracy table for one swept parameter: rows (value, fraction, mean)."""

    param: str
    fractions: tuple
    rows: list
    reports: dict = field(default_factory=dict)


SWEEP_PARAMS = ("lambda", "epsilon")


def sweep_parameter(spec: ExperimentSpec, param: str, values,
                    graph: HinGraph | None = None,
                    truth: np.ndarray | None = None,
                    cache: PathOperatorCache | None = None,
                    threads: int = 1) -> SweepResult:
    """Rerun the protocol for each parameter value, all else fixed.

    ``param`` is "lambda" (propagation trade-off) or "epsilon" (SVR band
    width).  Sweep runs evaluate the propagation pipeline only; baselines
    do not depend on lambda and are omitted.  The dataset and per-path
    operators are shared across values, and the cached beta fits are reused
    automatically when the swept parameter does not affect them.
    """
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}")
    values = list(values)
    result = SweepResult(param=param, fractions=spec.fractions, rows=[])
    if not values:
        return result
    if graph is None:
        graph, truth = resolve_dataset(spec)
    if cache is None:
        cache = PathOperatorCache(graph, spec.metapaths)
    base = replace(spec, methods=("tpathmine",))
    if param == "lambda":
        reports = _sweep_lambda(base, [float(v) for v in values], graph, truth,
                                cache)
    else:
        reports = {}
        for v in values:
            spec_v = replace(base, svr=replace(spec.svr, epsilon=float(v)))
            reports[float(v)] = run_experiment(spec_v, graph, truth, cache,
                                               threads)
    for v in values:
        report = reports[float(v)]
        result.reports[float(v)] = report
        for fi, fraction in enumerate(spec.fractions):
            result.rows.append((float(v), fraction,
                                report.mean_accuracy("tpathmine", fi)))
    return result


def _sweep_lambda(base: ExperimentSpec, values: list[float], graph, truth,
                  cache: PathOperatorCache) -> dict[float, "ExperimentReport"]:
    """Cell-major lambda sweep.

    Beta fits, the assembled operator and its spectral estimate do not
    depend on lambda, so each (fraction, repeat) cell is assembled once and
    only the propagation step reruns per value.  The returned reports match
    what independent run_experiment calls would produce.
    """
    accs = {v: {} for v in values}
    betas, spectral, wall_times = {}, {}, {}
    out_buf = np.empty((cache.n, cache.n), dtype=np.float64)
    for fi in range(len(base.fractions)):
        fraction = base.fractions[fi]
        for r in range(base.repeats):
            try:
                t0 = time.perf_counter()
                split_seed, pair_seed = _cell_seeds(base.rng_seed, fi, r)
                seed_idx, eval_idx = split_seeds(truth, fraction, split_seed)
                seed_labels = np.zeros_like(np.asarray(truth))
                seed_labels[seed_idx] = np.asarray(truth)[seed_idx]
                beta = _fit_cell_beta(base, cache, graph, seed_labels,
                                      seed_idx, pair_seed)
                s_com = cache.assemble(beta.normalized, out=out_buf)
                rho = spectral_radius_estimate(lambda v: s_com @ v, cache.n,
                                               max_iter=15)
                y = label_matrix(seed_labels, graph.schema.n_classes)
                for v in values:
                    scores = propagate(s_com, y, replace(base.prop, lam=v))
                    res = assign_labels(scores)
                    accs[v][(fi, r)] = accuracy(res.labels, truth, eval_idx)
                betas[(fi, r)] = beta
                spectral[(fi, r)] = rho
                wall_times[(fi, r)] = time.perf_counter() - t0
            except Exception as exc:
                raise _with_context(exc, fraction, r) from exc

    reports = {}
    for v in values:
        records = [CellRecord(method="tpathmine", fraction=base.fractions[fi],
                              repeat=r, accuracy=accs[v][(fi, r)])
                   for fi in range(len(base.fractions))
                   for r in range(base.repeats)]
        reports[v] = ExperimentReport(
            fractions=base.fractions, methods=("tpathmine",),
            repeats=base.repeats, path_names=tuple(cache.names),
            records=records, betas=dict(betas), spectral=dict(spectral),
            wall_times=dict(wall_times))
    return reports


def write_report_csv(report: ExperimentReport, path) -> None:
    """Per-cell accuracies plus mean/std summary rows, fixed formatting."""
    lines = ["method,fraction,repeat,accuracy"]
    for rec in report.records:
        lines.append(f"{rec.method},{rec.fraction:g},{rec.repeat},{rec.accuracy:.4f}")
    for fi, fraction in enumerate(report.fractions):
        for method in report.methods:
            lines.append(f"{method},{fraction:g},mean,"
                         f"{report.mean_accuracy(method, fi):.4f}")
            lines.append(f"{method},{fraction:g},std,"
                         f"{report.std_accuracy(method, fi):.4f}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_report_md(report: ExperimentReport, path) -> None:
    """Markdown summary table: methods as rows, seed fractions as columns."""
    header = "| method | " + " | ".join(f"{f:.0%}" for f in report.fractions) + " |"
    sep = "|" + "---|" * (len(report.fractions) + 1)
    lines = ["# Mean accuracy (%) by seed fraction", "", header, sep]
    for method in report.methods:
        cells = " | ".join(f"{report.mean_accuracy(method, fi):.2f}"
                           for fi in range(len(report.fractions)))
        lines.append(f"| {method} | {cells} |")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_weights_report(report: ExperimentReport, path) -> None:
    """Normalized per-path weight statistics across all cells."""
    lines = ["path,mean,std,min,max"]
    if report.betas:
        mat = report.beta_matrix()
        for k, name in enumerate(report.path_names):
            col = mat[:, k]
            lines.append(f"{name},{col.mean():.6f},{col.std():.6f},"
                         f"{col.min():.6f},{col.max():.6f}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_sweep_csv(sweep: SweepResult, path) -> None:
    lines = ["param,value,fraction,mean_accuracy"]
    for value, fraction, mean in sweep.rows:
        lines.append(f"{sweep.param},{value:g},{fraction:g},{mean:.4f}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
