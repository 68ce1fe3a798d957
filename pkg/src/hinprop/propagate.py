"""Symmetric normalization, weighted fusion and label propagation.

Each per-path similarity matrix W is normalized as S = D^{-1/2} W D^{-1/2}
with D the diagonal of row sums, which bounds the spectral radius by 1.
The normalized matrices are fused with nonnegative weights summing to 1, so
the combined operator S_com keeps spectral radius <= 1, and seed labels are
diffused by solving

    F = (1 - alpha) (I - alpha S_com)^{-1} Y,      alpha = 1 / (1 + lambda)

either directly (one symmetric solve per class column) or by the fixed point
iteration F <- alpha S_com F + (1 - alpha) Y, which is a contraction with
factor alpha and converges to the same solution.  Classification takes the
row-wise argmax, so any positive scaling of F leaves labels unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, GraphError


@dataclass
class PropagationConfig:
    """Fit penalty lambda > 0 and solver controls; alpha = 1/(1+lambda)."""

    lam: float = 2.0
    tol: float = 1e-6
    max_iter: int = 1000
    solver: str = "auto"          # closed | iterative | auto
    closed_max_n: int = 5000      # auto switches to iterative above this

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be > 0")
        if self.solver not in ("closed", "iterative", "auto"):
            raise ValueError(f"unknown solver {self.solver!r}")

    @property
    def alpha(self) -> float:
        return 1.0 / (1.0 + self.lam)


def normalize_sym(w: np.ndarray, clamp_isolated: bool = True,
                  out: np.ndarray | None = None) -> np.ndarray:
    """Symmetric degree normalization S(i,j) = W(i,j) / sqrt(D_ii D_jj).

    Rows with zero degree are left all-zero when ``clamp_isolated`` is True
    (the default); otherwise an isolated row raises.  No self loops are
    injected: isolated nodes surface later as unreachable rather than being
    silently imputed.  Pass ``out=w`` to normalize in place.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.shape[0] != w.shape[1]:
        raise ValueError("similarity matrix must be square")
    if w.size and w.min() < 0:
        raise ValueError("similarity matrix has negative entries")
    degrees = w.sum(axis=1)
    isolated = degrees <= 0
    if isolated.any() and not clamp_isolated:
        raise ValueError(f"{int(isolated.sum())} isolated rows with zero degree")
    inv_sqrt = np.zeros_like(degrees)
    np.sqrt(degrees, out=inv_sqrt, where=~isolated)
    np.divide(1.0, inv_sqrt, out=inv_sqrt, where=~isolated)
    if out is None:
        out = w * inv_sqrt[:, None]
    else:
        np.multiply(w, inv_sqrt[:, None], out=out)
    out *= inv_sqrt[None, :]
    return out


def normalize_degrees(w_row_sums: np.ndarray) -> np.ndarray:
    """D^{-1/2} scaling vector from precomputed row sums (zeros stay zero)."""
    d = np.asarray(w_row_sums, dtype=np.float64)
    if d.size and d.min() < 0:
        raise ValueError("row sums must be nonnegative")
    pos = d > 0
    inv_sqrt = np.zeros_like(d)
    np.sqrt(d, out=inv_sqrt, where=pos)
    np.divide(1.0, inv_sqrt, out=inv_sqrt, where=pos)
    return inv_sqrt


def combine_similarities(sims, beta_normalized, out: np.ndarray | None = None) -> np.ndarray:
    """Entrywise weighted sum S_com = sum_k beta_k S^k.

    ``beta_normalized`` must be the normalized (probability vector) weights;
    that keeps the spectral radius of the result at most 1.
    """
    beta = np.asarray(beta_normalized, dtype=np.float64)
    if len(sims) != len(beta):
        raise ValueError(f"{len(sims)} matrices but {len(beta)} weights")
    if not sims:
        raise ValueError("no similarity matrices to combine")
    shape = np.asarray(sims[0]).shape
    for s in sims[1:]:
        if np.asarray(s).shape != shape:
            raise ValueError("similarity matrices have mismatched shapes")
    if out is None:
        out = np.zeros(shape, dtype=np.float64)
    else:
        out.fill(0.0)
    for bk, s in zip(beta, sims):
        out += bk * np.asarray(s)
    return out


def label_matrix(seed_labels: np.ndarray, n_classes: int) -> np.ndarray:
    """One-hot n x p seed matrix Y from a label vector (0 = unlabeled)."""
    labels = np.asarray(seed_labels)
    n = labels.shape[0]
    y = np.zeros((n, n_classes), dtype=np.float64)
    seeded = labels > 0
    y[np.nonzero(seeded)[0], labels[seeded] - 1] = 1.0
    return y


def propagate_closed(s_com: np.ndarray, y: np.ndarray,
                     cfg: PropagationConfig) -> np.ndarray:
    """Direct solve F = (1 - alpha) (I - alpha S_com)^{-1} Y.

    (I - alpha S_com) is symmetric positive definite because the spectral
    radius of alpha S_com is below 1, so a Cholesky-backed solve is used.
    """
    alpha = cfg.alpha
    s_com = np.asarray(s_com, dtype=np.float64)
    n = s_com.shape[0]
    if y.shape[0] != n:
        raise ValueError("label matrix and similarity dimension mismatch")
    a = -alpha * s_com
    a[np.diag_indices(n)] += 1.0
    try:
        f = scipy.linalg.solve(a, (1.0 - alpha) * y, assume_a="pos")
    except np.linalg.LinAlgError as exc:
        cond = float(np.linalg.cond(a))
        raise ConvergenceError(
            f"propagation solve failed, condition estimate {cond:.3e}") from exc
    return f


def propagate_iterative(s_com: np.ndarray, y: np.ndarray,
                        cfg: PropagationConfig) -> np.ndarray:
    """Fixed point iteration F <- alpha S_com F + (1 - alpha) Y from F0 = Y.

    Stops when the max-norm step falls below cfg.tol.  Raises
    ConvergenceError with the last iterate and residual if max_iter is hit.
    """
    alpha = cfg.alpha
    s_com = np.asarray(s_com, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    f = y.copy()
    base = (1.0 - alpha) * y
    step = float("inf")
    for _ in range(cfg.max_iter):
        f_next = alpha * (s_com @ f) + base
        step = float(np.max(np.abs(f_next - f))) if f.size else 0.0
        f = f_next
        if step < cfg.tol:
            return f
    raise ConvergenceError(
        f"propagation did not converge in {cfg.max_iter} iterations "
        f"(last step {step:.3e})", best=f, residual=step, n_iter=cfg.max_iter)


def propagate(s_com: np.ndarray, y: np.ndarray, cfg: PropagationConfig) -> np.ndarray:
    """Dispatch to the closed-form or iterative solver per cfg.solver."""
    solver = cfg.solver
    if solver == "auto":
        solver = "closed" if s_com.shape[0] <= cfg.closed_max_n else "iterative"
    if solver == "closed":
        return propagate_closed(s_com, y, cfg)
    return propagate_iterative(s_com, y, cfg)


FLAG_TIE = "tie"
FLAG_UNREACHABLE = "unreachable"


@dataclass
class LabelResult:
    """Per-node class assignment (1..p) with degenerate-row flags."""

    labels: np.ndarray
    flags: list[str] = field(default_factory=list)


def assign_labels(f: np.ndarray) -> LabelResult:
    """Row-wise argmax classification of a score matrix.

    The class is the smallest index attaining the row maximum; exact ties
    are flagged "tie".  All-zero rows get class 1 and the flag
    "unreachable".  NaN scores raise ValueError.
    """
    f = np.asarray(f)
    if np.isnan(f).any():
        raise ValueError("score matrix contains NaN")
    labels = f.argmax(axis=1).astype(np.int64) + 1
    row_max = f.max(axis=1)
    n_at_max = (f == row_max[:, None]).sum(axis=1)
    flags = [""] * f.shape[0]
    for i in np.nonzero(n_at_max > 1)[0]:
        flags[i] = FLAG_TIE
    unreachable = (f == 0).all(axis=1)
    for i in np.nonzero(unreachable)[0]:
        labels[i] = 1
        flags[i] = FLAG_UNREACHABLE
    return LabelResult(labels=labels, flags=flags)


def spectral_radius_estimate(matvec, n: int, max_iter: int = 30,
                             tol: float = 1e-10, seed: int = 7) -> float:
    """Power-iteration lower estimate of the spectral radius.

    ``matvec`` maps a length-n vector to S v.  For symmetric S the norm
    ratio ||S v|| / ||v|| never exceeds the true spectral radius, so the
    returned value is a certified lower bound regardless of iteration
    count; unlike the raw Rayleigh quotient it cannot cancel between
    eigenvalues of opposite sign.  Iterates until the estimate stabilizes
    to ``tol`` (relative) or ``max_iter``.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = matvec(v)
        new_est = float(np.linalg.norm(w))   # = ||S v|| with ||v|| = 1
        if new_est == 0.0:
            return 0.0
        v = w / new_est
        if est > 0 and abs(new_est - est) <= tol * est:
            est = new_est
            break
        est = new_est
    return est
