"""Meta-path weight fitting via epsilon-insensitive support vector regression.

Training pairs are node pairs among the labeled seeds: the feature vector of
a pair is its PathSim similarity under each meta-path, and the regression
target is the weighted count of shared direct neighbors (products of click
weights summed over every non-target type both nodes touch).  The fitted
coefficients, one per meta-path, are the ridge-free linear SVR solution

    min 1/2 ||beta||^2 + C sum(xi + xi*)
    s.t. |R_m - (beta . S_m + b)| <= eps + xi_m,   xi >= 0

solved by sequential minimal optimization on the dual with maximal violating
pair selection.  The solver is fully deterministic: fixed tie-breaking,
fixed iteration order, no randomness.  Negative coefficients are clamped to
zero and renormalized to a probability vector for downstream fusion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .graph import HinGraph
from .metapath import pathsim_pair_values


@dataclass
class SvrConfig:
    epsilon: float = 0.2
    C: float = 10.0
    max_iter: int = 1_000_000
    tol: float = 1e-5

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.C <= 0:
            raise ValueError("C must be > 0")


@dataclass
class BetaWeights:
    """Fitted per-path coefficients with their fusion normalization.

    ``raw`` is the SVR solution (in rescaled-target units when the caller
    rescaled), ``normalized`` clamps negatives to zero and divides by the
    sum, falling back to uniform when everything clamps to zero.
    """

    raw: np.ndarray
    bias: float
    normalized: np.ndarray
    kkt_residual: float
    n_iter: int
    target_scale: float = 1.0


@dataclass
class TrainingPairs:
    """Seed-pair regression set in struct-of-arrays form."""

    i: np.ndarray          # target node indices, i < j pairwise
    j: np.ndarray
    features: np.ndarray   # (n_pairs, n_paths) PathSim values in [0, 1]
    targets: np.ndarray    # (n_pairs,) shared-connection counts

    def __len__(self) -> int:
        return len(self.targets)


def compute_connection_target(graph: HinGraph, i: int, j: int) -> float:
    """Weighted count of shared direct neighbors of two target nodes.

    For every non-target type Z directly linked to the target type, sums
    W(i, z) * W(j, z) over shared neighbors z, i.e. entry (i, j) of
    W_UZ @ W_UZ.T.  Returns 0.0 when the nodes share nothing.
    """
    return float(connection_targets(graph, np.array([i]), np.array([j]))[0])


def connection_targets(graph: HinGraph, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Vectorized shared-connection counts for index arrays (i[k], j[k])."""
    target = graph.target_type
    i = np.asarray(i)
    j = np.asarray(j)
    out = np.zeros(len(i), dtype=np.float64)
    for z in graph.neighbor_types(target):
        w = graph.relation_matrix(target, z)
        rows_i = w[i]
        rows_j = w[j]
        out += np.asarray(rows_i.multiply(rows_j).sum(axis=1)).ravel()
    return out


def _pair_index_decode(t: np.ndarray, s: int) -> tuple[np.ndarray, np.ndarray]:
    # Decode linear indices of the strict upper triangle of an s x s grid,
    # enumerated row-major: t in [0, s(s-1)/2) -> (r, c) with r < c.
    t = np.asarray(t, dtype=np.int64)
    r = ((2 * s - 1) - np.sqrt((2 * s - 1) ** 2 - 8.0 * t)) // 2
    r = r.astype(np.int64)
    cum = r * (2 * s - r - 1) // 2
    # float sqrt can be off by one near block boundaries
    over = cum > t
    r[over] -= 1
    cum = r * (2 * s - r - 1) // 2
    under = (r + 1) * (2 * s - r - 2) // 2 <= t
    r[under] += 1
    cum = r * (2 * s - r - 1) // 2
    c = r + 1 + (t - cum)
    return r, c


def build_training_pairs(graph: HinGraph, pathsims, seeds, max_pairs: int,
                         rng_seed: int, labels=None,
                         target_mode: str = "connections") -> TrainingPairs:
    """Assemble the SVR training set from labeled seed nodes.

    All unordered seed pairs are used when their count is at most
    ``max_pairs``; otherwise a uniform sample without replacement of exactly
    ``max_pairs`` pairs is drawn, deterministic in ``rng_seed``.  Features
    come from each entry of ``pathsims`` (dense PathSim matrices or
    PathFactor objects); targets from shared-connection counts, or from
    seed-class agreement (1.0 same class, 0.0 otherwise) when
    ``target_mode == "label_agreement"``.
    """
    seeds = np.sort(np.asarray(seeds, dtype=np.int64))
    s = len(seeds)
    if s < 2:
        raise ValueError("need at least 2 seed nodes to form training pairs")
    if target_mode not in ("connections", "label_agreement"):
        raise ValueError(f"unknown target_mode {target_mode!r}")
    total = s * (s - 1) // 2
    if total <= max_pairs:
        lin = np.arange(total, dtype=np.int64)
    else:
        rng = np.random.default_rng(rng_seed)
        lin = np.sort(rng.choice(total, size=max_pairs, replace=False))
    r, c = _pair_index_decode(lin, s)
    i = seeds[r]
    j = seeds[c]

    features = np.empty((len(i), len(pathsims)), dtype=np.float64)
    for k, source in enumerate(pathsims):
        features[:, k] = pathsim_pair_values(source, i, j)

    if target_mode == "label_agreement":
        if labels is None:
            raise ValueError("label_agreement target mode needs the label vector")
        targets = (np.asarray(labels)[i] == np.asarray(labels)[j]).astype(np.float64)
    else:
        targets = connection_targets(graph, i, j)
    return TrainingPairs(i=i, j=j, features=features, targets=targets)


def normalize_beta(raw: np.ndarray) -> np.ndarray:
    """Clamp negatives to zero and scale to sum 1 (uniform if all clamp)."""
    clamped = np.maximum(np.asarray(raw, dtype=np.float64), 0.0)
    s = clamped.sum()
    if s <= 0:
        return np.full(len(clamped), 1.0 / len(clamped))
    return clamped / s


# Iterations between full KKT reconciliations of the shrunken working set.
_RECONCILE_EVERY = 512


def fit_svr(features: np.ndarray, targets: np.ndarray, cfg: SvrConfig) -> BetaWeights:
    """Fit linear epsilon-SVR coefficients by SMO on the dual.

    Maintains the primal weight vector incrementally (linear kernel).  The
    working pair is chosen by maximal violation on the up side and maximal
    second-order gain (violation squared over curvature) on the low side.
    Samples that look settled at their bounds are shrunk out of the
    selection scan and rechecked periodically; termination requires the
    classic b_low - b_up gap over the full set to fall below cfg.tol, so
    shrinking never weakens the returned KKT guarantee.  The bias is the
    midpoint of the KKT-feasible interval.  Raises ConvergenceError
    carrying the best iterate when cfg.max_iter is reached.  Fully
    deterministic: fixed tie-breaking, fixed reconciliation schedule, no
    randomness.
    """
    x = np.ascontiguousarray(features, dtype=np.float64)
    y = np.ascontiguousarray(targets, dtype=np.float64)
    if x.ndim != 2 or len(x) != len(y) or len(y) == 0:
        raise ValueError("features must be (n_pairs, d) matching targets")
    m, d = x.shape
    eps, c_pen = cfg.epsilon, cfg.C

    # Extended dual variables: theta[:m] for the +eps side (zeta = +1),
    # theta[m:] for the -eps side (zeta = -1); coefficient of sample k is
    # lam_k = theta[k] - theta[m + k] and w = X.T @ lam.
    theta = np.zeros(2 * m)
    w = np.zeros(d)
    sq_norms = np.einsum("ij,ij->i", x, x)
    n_iter = 0
    tau = 1e-12
    active = np.arange(m)

    while True:
        # Full-set KKT state; also the only place convergence is decided.
        fhat = x @ w
        val_plus = y - fhat - eps    # -zeta * grad on the + side
        val_minus = y - fhat + eps   # -zeta * grad on the - side
        up_plus = np.where(theta[:m] < c_pen, val_plus, -np.inf)
        up_minus = np.where(theta[m:] > 0, val_minus, -np.inf)
        low_plus = np.where(theta[:m] > 0, val_plus, np.inf)
        low_minus = np.where(theta[m:] < c_pen, val_minus, np.inf)
        b_low = max(np.max(up_plus), np.max(up_minus))
        b_up = min(np.min(low_plus), np.min(low_minus))

        violation = b_low - b_up
        if violation <= cfg.tol:
            bias = _finite_midpoint(b_low, b_up)
            raw = w.copy()
            return BetaWeights(raw=raw, bias=bias, normalized=normalize_beta(raw),
                               kkt_residual=float(max(violation, 0.0)),
                               n_iter=n_iter)
        if n_iter >= cfg.max_iter:
            bias = _finite_midpoint(b_low, b_up)
            best = BetaWeights(raw=w.copy(), bias=bias,
                               normalized=normalize_beta(w),
                               kkt_residual=float(violation), n_iter=n_iter)
            raise ConvergenceError(
                f"SVR did not converge in {cfg.max_iter} iterations "
                f"(KKT violation {violation:.3e})",
                best=best, residual=float(violation), n_iter=n_iter)

        # Shrink: keep samples that are interior on either side or whose
        # value could still pair against the current extremes.
        keep = ((theta[:m] > 0) & (theta[:m] < c_pen)
                | (theta[m:] > 0) & (theta[m:] < c_pen)
                | (up_plus >= b_up) & np.isfinite(up_plus)
                | (up_minus >= b_up) & np.isfinite(up_minus)
                | (low_plus <= b_low) & np.isfinite(low_plus)
                | (low_minus <= b_low) & np.isfinite(low_minus))
        active = np.nonzero(keep)[0]
        if len(active) < 2:
            active = np.arange(m)

        n_iter = _smo_rounds(x, y, theta, w, sq_norms, active, eps, c_pen,
                             cfg.tol, tau, n_iter, cfg.max_iter)


def _smo_rounds(x, y, theta, w, sq_norms, active, eps, c_pen, tol, tau,
                n_iter, max_iter) -> int:
    """Run SMO steps restricted to ``active`` until its gap closes or the
    reconciliation interval elapses.  Mutates theta and w; returns the
    iteration counter."""
    m = x.shape[0]
    xa = x[active]
    ya = y[active]
    sq_a = sq_norms[active]
    th_p = theta[active]
    th_m = theta[m + active]
    deadline = n_iter + _RECONCILE_EVERY
    while n_iter < deadline and n_iter < max_iter:
        fhat = xa @ w
        val_plus = ya - fhat - eps
        val_minus = ya - fhat + eps
        up_plus = np.where(th_p < c_pen, val_plus, -np.inf)
        up_minus = np.where(th_m > 0, val_minus, -np.inf)
        low_plus = np.where(th_p > 0, val_plus, np.inf)
        low_minus = np.where(th_m < c_pen, val_minus, np.inf)

        iu_p, iu_m = int(np.argmax(up_plus)), int(np.argmax(up_minus))
        if up_plus[iu_p] >= up_minus[iu_m]:
            ai, b_low, i_plus = iu_p, up_plus[iu_p], True
        else:
            ai, b_low, i_plus = iu_m, up_minus[iu_m], False
        b_up = min(np.min(low_plus), np.min(low_minus))
        if b_low - b_up <= tol:
            break

        # Second-order low-side pick against the up extreme.
        eta_all = np.maximum(sq_a + sq_a[ai] - 2.0 * (xa @ xa[ai]), tau)
        diff_plus = b_low - low_plus
        diff_minus = b_low - low_minus
        gain_plus = np.where(diff_plus > 0, diff_plus * diff_plus / eta_all,
                             -np.inf)
        gain_minus = np.where(diff_minus > 0, diff_minus * diff_minus / eta_all,
                              -np.inf)
        jg_p, jg_m = int(np.argmax(gain_plus)), int(np.argmax(gain_minus))
        if gain_plus[jg_p] >= gain_minus[jg_m]:
            aj, diff, j_plus = jg_p, diff_plus[jg_p], True
        else:
            aj, diff, j_plus = jg_m, diff_minus[jg_m], False

        delta = diff / eta_all[aj]
        head_i = c_pen - th_p[ai] if i_plus else th_m[ai]
        head_j = th_p[aj] if j_plus else c_pen - th_m[aj]
        delta = min(delta, head_i, head_j)

        if i_plus:
            th_p[ai] += delta
        else:
            th_m[ai] -= delta
        if j_plus:
            th_p[aj] -= delta
        else:
            th_m[aj] += delta
        # Snap the binding variable onto its bound: the arithmetic update can
        # stop one ulp short, which would leave it eligible with crumb-sized
        # headroom and stall the selection loop.
        if delta == head_i:
            if i_plus:
                th_p[ai] = c_pen
            else:
                th_m[ai] = 0.0
        if delta == head_j:
            if j_plus:
                th_p[aj] = 0.0
            else:
                th_m[aj] = c_pen
        if ai != aj:
            w += delta * (xa[ai] - xa[aj])
        n_iter += 1
    theta[active] = th_p
    theta[m + active] = th_m
    return n_iter


def _finite_midpoint(b_low: float, b_up: float) -> float:
    if np.isfinite(b_low) and np.isfinite(b_up):
        return float((b_low + b_up) / 2.0)
    if np.isfinite(b_low):
        return float(b_low)
    if np.isfinite(b_up):
        return float(b_up)
    return 0.0


def fit_metapath_weights(pairs: TrainingPairs, cfg: SvrConfig) -> BetaWeights:
    """Rescale targets to [0, 1] by their max, then fit the SVR.

    PathSim features already live in [0, 1]; dividing the raw connection
    counts by their training maximum puts epsilon on a comparable scale.
    The divisor is recorded in ``target_scale``; raw coefficients are in
    rescaled units.
    """
    scale = float(pairs.targets.max()) if len(pairs) else 0.0
    if scale > 0:
        targets = pairs.targets / scale
    else:
        scale = 1.0
        targets = pairs.targets
    beta = fit_svr(pairs.features, targets, cfg)
    beta.target_scale = scale
    return beta
