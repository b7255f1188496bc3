"""Final cluster configurations from label draws, and the Rand index.

Labels are nonnegative integers; ``NA`` (``-1``) marks a missing entry and
is ignored wherever modes or frequencies are taken.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .dpmm import ClusterDraws, DpmmPrior, dpmm_fit
from .gmm import gmm_select_k

NA = -1
TIE_RTOL = 1e-12


def _labels_2d(draws) -> np.ndarray:
    lab = draws.labels if isinstance(draws, ClusterDraws) else np.asarray(draws)
    if lab.ndim == 1:
        lab = lab[None, :]
    if lab.ndim != 2:
        raise ValueError("label draws must be (Q, S)")
    if lab.shape[0] == 0:
        raise ValueError("empty draws")
    return lab.astype(np.int64)


def membership_matrix(z) -> np.ndarray:
    """``B[i, j] = 1`` iff ``z[i] == z[j]``."""
    z = np.asarray(z)
    return (z[:, None] == z[None, :]).astype(np.int8)


@dataclass(frozen=True)
class ClusterConfiguration:
    """One final label per region and membership probabilities.

    ``probabilities[s, k]`` is the probability that region ``s`` belongs to
    the cluster labelled ``label_values[k]``.
    """

    labels: np.ndarray
    probabilities: np.ndarray
    label_values: np.ndarray
    method: str
    iteration: int | None = None     # index of the chosen draw (Dahl)
    distance: float | None = None    # its squared distance to the mean membership matrix

    @property
    def n_clusters(self) -> int:
        return len(np.unique(self.labels))


def mean_membership(lab: np.ndarray) -> np.ndarray:
    Q, S = lab.shape
    Bbar = np.zeros((S, S))
    for z in lab:
        Bbar += z[:, None] == z[None, :]
    return Bbar / Q


def dahl_distances(lab: np.ndarray, Bbar: np.ndarray | None = None) -> np.ndarray:
    """``sum_ij (B_c[i, j] - Bbar[i, j])^2`` for every draw ``c``."""
    lab = _labels_2d(lab)
    if Bbar is None:
        Bbar = mean_membership(lab)
    out = np.empty(lab.shape[0])
    for c, z in enumerate(lab):
        out[c] = np.sum((membership_matrix(z) - Bbar) ** 2)
    return out


def _group_probabilities(Bbar, labels, values):
    """Average co-clustering probability with each final cluster, row-normalised."""
    P = np.stack([Bbar[:, labels == v].mean(axis=1) for v in values], axis=1)
    return P / P.sum(axis=1, keepdims=True)


def dahl_configuration(draws) -> ClusterConfiguration:
    """Least-squares configuration: the draw closest to the mean membership matrix.

    Ties (distances equal to within a relative 1e-12) go to the earliest draw.
    The chosen draw's labels are returned unchanged.
    """
    lab = _labels_2d(draws)
    if np.any(lab < 0):
        raise ValueError("Dahl's method needs complete label vectors (no NA)")
    Bbar = mean_membership(lab)
    d = dahl_distances(lab, Bbar)
    best = d.min()
    c = int(np.flatnonzero(d <= best + TIE_RTOL * max(1.0, abs(best)))[0])
    labels = lab[c].copy()
    values = np.unique(labels)
    return ClusterConfiguration(labels, _group_probabilities(Bbar, labels, values), values, "dahl",
                                c, float(d[c]))


def align_labels(z, reference) -> np.ndarray:
    """Relabel ``z`` to agree with ``reference`` as far as possible.

    Labels are matched by maximum total overlap (Hungarian assignment).
    Labels of ``z`` left unmatched get fresh values above every reference
    label.  NA entries stay NA.
    """
    z = np.asarray(z, dtype=np.int64)
    reference = np.asarray(reference, dtype=np.int64)
    if z.shape != reference.shape:
        raise ValueError("label vectors differ in length")
    ok = (z >= 0) & (reference >= 0)
    zu = np.unique(z[z >= 0])
    ru = np.unique(reference[reference >= 0])
    out = np.full_like(z, NA)
    if zu.size == 0:
        return out
    zi = np.searchsorted(zu, z[ok])
    ri = np.searchsorted(ru, reference[ok])
    overlap = np.zeros((zu.size, max(ru.size, 1)), dtype=np.int64)
    np.add.at(overlap, (zi, ri), 1)
    rows, cols = linear_sum_assignment(overlap, maximize=True)
    mapping = {}
    if ru.size:
        mapping = {int(zu[r]): int(ru[c]) for r, c in zip(rows, cols)}
    fresh = (int(ru.max()) + 1) if ru.size else 0
    for v in zu:
        if int(v) not in mapping:
            mapping[int(v)] = fresh
            fresh += 1
    present = z >= 0
    out[present] = np.array([mapping[int(v)] for v in z[present]], dtype=np.int64)
    return out


def _column_modes(lab: np.ndarray):
    """Per-column mode and frequencies ignoring NA; ties go to the smallest label."""
    values = np.unique(lab[lab >= 0])
    if values.size == 0:
        raise ValueError("no non-missing labels")
    counts = np.stack([(lab == v).sum(axis=0) for v in values], axis=1).astype(float)
    total = counts.sum(axis=1)
    if np.any(total == 0):
        bad = np.flatnonzero(total == 0)
        raise ValueError(f"regions {bad.tolist()} have no non-missing labels")
    labels = values[np.argmax(counts, axis=1)]
    return labels, counts / total[:, None], values


def mode_configuration(draws, reference=None, align: bool = True) -> ClusterConfiguration:
    """Most frequent label per region across draws.

    With ``align`` each draw is first relabelled to match ``reference``
    (the Dahl configuration when not given) so label switching between
    draws does not split votes.
    """
    lab = _labels_2d(draws)
    if align:
        if reference is None:
            complete = lab[np.all(lab >= 0, axis=1)]
            if complete.shape[0] == 0:
                raise ValueError("no complete draw to build the reference partition from")
            reference = dahl_configuration(complete).labels
        lab = np.stack([align_labels(z, reference) for z in lab])
    labels, probs, values = _column_modes(lab)
    return ClusterConfiguration(labels, probs, values, "mode")


def configuration(draws, method: str) -> ClusterConfiguration:
    if method == "dahl":
        return dahl_configuration(draws)
    if method == "mode":
        return mode_configuration(draws)
    raise ValueError(f"unknown configuration method {method!r}")


def rand_index(a, b) -> float:
    """Fraction of unordered pairs on which two partitions agree.

    Computed from the contingency table: with ``n_ij`` the joint counts and
    ``a_i``, ``b_j`` the margins, the disagreements are
    ``sum C(a_i, 2) + sum C(b_j, 2) - 2 sum C(n_ij, 2)``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"label vectors must be 1-d of equal length, got {a.shape} and {b.shape}")
    n = a.size
    if n < 2:
        return 1.0
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)

    def pairs(x):
        return int(np.sum(x * (x - 1) // 2))

    total = n * (n - 1) // 2
    disagree = pairs(table.sum(axis=1)) + pairs(table.sum(axis=0)) - 2 * pairs(table)
    return (total - disagree) / total


@dataclass(frozen=True)
class CoefficientSample:
    values: np.ndarray       # (S, q)
    sample_id: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 2:
            raise ValueError("a coefficient sample needs at least two regions")
        if not np.all(np.isfinite(v)):
            raise ValueError("coefficient sample must be finite")
        object.__setattr__(self, "values", v)


def coefficient_samples(beta_draws, n_samples: int = 500, coefficients=None,
                        rng: np.random.Generator | None = None, standardize: bool = False):
    """Pick retained iterations uniformly without replacement.

    Parameters
    ----------
    beta_draws : array of shape (M, S, p)
    n_samples : int
        All iterations are used (in order) when fewer are available.
    coefficients : int or sequence of int, optional
        Columns to cluster on; all by default.
    standardize : bool
        Scale each column of every sample to unit standard deviation.
    """
    beta = np.asarray(beta_draws, dtype=float)
    if beta.ndim != 3:
        raise ValueError("beta draws must be (M, S, p)")
    M = beta.shape[0]
    if M == 0:
        raise ValueError("no draws")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    if n_samples >= M:
        idx = np.arange(M)
    else:
        if rng is None:
            raise ValueError("rng required when subsampling")
        idx = np.sort(rng.choice(M, size=n_samples, replace=False))
    cols = slice(None) if coefficients is None else np.atleast_1d(coefficients)
    out = []
    for m in idx:
        v = beta[m][:, cols]
        if standardize:
            sd = v.std(axis=0)
            v = v / np.where(sd > 0, sd, 1.0)
        out.append(CoefficientSample(v, int(m)))
    return out


def gmm_cluster_draws(samples, K_max: int = 10, restarts: int = 10, seed: int = 0) -> ClusterDraws:
    """One BIC-selected GMM labelling per coefficient sample.

    Sample ``i`` uses the generator ``default_rng([seed, sample_id])``.
    """
    if len(samples) == 0:
        raise ValueError("no samples")
    rows, ks = [], []
    for smp in samples:
        sel = gmm_select_k(smp.values, min(K_max, smp.values.shape[0] - 1) or 1, restarts,
                           np.random.default_rng([seed, smp.sample_id]))
        rows.append(sel.labels)
        ks.append(sel.K)
    return ClusterDraws(np.stack(rows), np.asarray(ks))


@dataclass(frozen=True)
class TwoStageResult:
    configuration: ClusterConfiguration
    stage1: np.ndarray           # (M, S) stage-1 labels
    cluster_sizes: np.ndarray    # (M, K_max) sizes of each stage-1 cluster, NaN padded
    sample_ids: np.ndarray


def _stage1(args):
    values, sample_id, prior, n_iter, burn_in, seed, method = args
    rng = np.random.default_rng([seed, sample_id])
    draws = dpmm_fit(values, prior, n_iter, burn_in, rng)
    return configuration(draws, method).labels


def stage1_dpmm(samples, prior: DpmmPrior, n_iter: int, burn_in: int, seed: int,
                method: str = "mode", workers: int = 1) -> np.ndarray:
    """Stage-1 labels, one row per sample; independent per-sample streams."""
    jobs = [(s.values, s.sample_id, prior, n_iter, burn_in, seed, method) for s in samples]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, os.cpu_count() or 1)) as ex:
            rows = list(ex.map(_stage1, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        rows = [_stage1(j) for j in jobs]
    return np.stack(rows)


def cluster_size_table(stage1: np.ndarray) -> np.ndarray:
    """Per-sample cluster sizes in decreasing order, NaN where a sample has fewer clusters."""
    sizes = [np.sort(np.bincount(np.unique(z, return_inverse=True)[1]))[::-1] for z in stage1]
    width = max(len(s) for s in sizes)
    out = np.full((len(sizes), width), np.nan)
    for i, s in enumerate(sizes):
        out[i, :len(s)] = s
    return out


def two_stage_dpmm(samples, prior: DpmmPrior = DpmmPrior(), n_iter: int = 2000, burn_in: int = 1000,
                   seed: int = 0, stage1_method: str = "mode", stage2_method: str = "mode",
                   workers: int = 1) -> TwoStageResult:
    """DPMM per coefficient sample, then a consensus over samples.

    Stage 1 reduces each sample's DPMM draws to one configuration; stage 2
    stacks these into an ``M x S`` matrix and takes, per region, the mode
    across samples after aligning every row to the Dahl partition of the
    matrix (or takes that Dahl partition itself with ``stage2_method="dahl"``).
    """
    if len(samples) == 0:
        raise ValueError("two-stage DPMM needs at least one sample")
    stage1 = stage1_dpmm(samples, prior, n_iter, burn_in, seed, stage1_method, workers)
    ids = np.array([s.sample_id for s in samples])
    if len(samples) == 1:
        # nothing to reconcile: rerun stage 1 to keep its probabilities
        rng = np.random.default_rng([seed, samples[0].sample_id])
        conf = configuration(dpmm_fit(samples[0].values, prior, n_iter, burn_in, rng), stage1_method)
    else:
        conf = configuration(stage1, stage2_method)
    return TwoStageResult(conf, stage1, cluster_size_table(stage1), ids)
