"""Ensemble protocols and theory-comparison statistics.

Two source modes for the pilot-wave ensembles:
  constrained_com    y1(0) drawn from the t=0 screen marginal, y2(0) = -y1(0);
                     the center of mass starts (and provably stays) at zero.
  unconstrained_qeh  (y1(0), y2(0)) drawn jointly from |psi_eff(.,.,0)|**2.

The standard-theory ensemble samples arrival pairs directly from the Born
density at the detection time.  Selective detection post-selects pairs whose
right-screen member landed in the upper half-plane and inspects the
conditional left-screen pattern, which is where the two theories' predictions
split under the constrained source.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import dynamics, sampling

MODE_CONSTRAINED = "constrained_com"
MODE_UNCONSTRAINED = "unconstrained_qeh"

ABORT_FLAG_FRACTION = 1e-3


@dataclass
class ArrivalSet:
    """Joint screen outcomes of one ensemble run."""

    pairs: np.ndarray  # (n, 2): right-screen and left-screen arrival
    theory: str  # "bqm" or "sqm"
    source_mode: str | None
    n_aborted: int
    seed: int
    com_initial: np.ndarray | None = None  # per accepted pair, BQM only
    flagged: bool = False

    @property
    def right(self):
        return self.pairs[:, 0]

    @property
    def left(self):
        return self.pairs[:, 1]

    def same_side_fraction(self):
        if len(self.pairs) == 0:
            return 0.0
        return float(np.mean(self.right * self.left > 0))

    def same_side_count(self):
        return int(np.sum(self.right * self.left > 0))


@dataclass
class ScreenHistogram:
    """Half-open ΔQ-aligned bins; upper half means coordinate > 0."""

    bin_edges: np.ndarray
    counts: np.ndarray
    side_split: tuple  # (upper_count, lower_count)

    @property
    def n(self):
        return int(self.counts.sum())


@dataclass
class SelectiveReport:
    selection_rule: str
    n_selected: int
    left_histogram: ScreenHistogram
    right_histogram: ScreenHistogram
    left_upper_fraction: float


@dataclass
class ComparisonReport:
    tv_distance: float
    chi_square: float
    chi_square_dof: int
    chi_square_pvalue: float
    same_side_prob: dict
    com_residual_max: float | None
    notes: list = field(default_factory=list)


def screen_histogram(values, deltaQ, edges=None):
    """Histogram on half-open [k*dQ, (k+1)*dQ) bins covering the data.

    Arrivals exactly at 0 count as lower half (explicit tie-break).
    """
    values = np.asarray(values, dtype=float)
    if edges is None:
        if len(values) == 0:
            edges = np.array([0.0, deltaQ])
        else:
            k_lo = int(np.floor(values.min() / deltaQ))
            k_hi = int(np.floor(values.max() / deltaQ)) + 1
            edges = deltaQ * np.arange(k_lo, k_hi + 1)
    if len(values) == 0:
        counts = np.zeros(len(edges) - 1, dtype=np.int64)
    else:
        idx = np.floor(values / deltaQ).astype(np.int64) - int(round(edges[0] / deltaQ))
        counts = np.bincount(idx[(idx >= 0) & (idx < len(edges) - 1)],
                             minlength=len(edges) - 1).astype(np.int64)
    upper = int(np.sum(values > 0))
    lower = int(len(values) - upper)
    return ScreenHistogram(bin_edges=np.asarray(edges, dtype=float), counts=counts,
                           side_split=(upper, lower))


def draw_initial_conditions(state, mode, n, seed):
    """Initial (y1, y2) pairs at t = 0 for the requested source mode."""
    if mode == MODE_CONSTRAINED:
        y1 = sampling.sample_marginal(state, 0.0, n, seed)
        return np.column_stack([y1, -y1])
    if mode == MODE_UNCONSTRAINED:
        return sampling.sample_joint(state, 0.0, n, seed).pairs
    raise ValueError(f"unknown source mode {mode!r}")


def run_bqm_ensemble(state, mode, n, settings, seed):
    """Integrate n guided pairs to the detection time and record arrivals."""
    y0 = draw_initial_conditions(state, mode, n, seed)
    t0 = state.detection_time
    out, status = dynamics.integrate_ensemble(state, y0, settings, [t0])
    ok = status == dynamics.STATUS_COMPLETED
    arrivals = out[ok, 0, :]
    n_aborted = int(np.sum(~ok))
    return ArrivalSet(
        pairs=arrivals,
        theory="bqm",
        source_mode=mode,
        n_aborted=n_aborted,
        seed=int(seed),
        com_initial=0.5 * y0[ok].sum(axis=1),
        flagged=n_aborted / n >= ABORT_FLAG_FRACTION,
    )


def run_sqm_ensemble(state, n, seed):
    """Sample n joint detections from the Born density at the detection time."""
    batch = sampling.sample_joint(state, state.detection_time, n, seed)
    return ArrivalSet(pairs=batch.pairs, theory="sqm", source_mode=None,
                      n_aborted=0, seed=int(seed))


def com_residuals(state, arrivals: ArrivalSet):
    """|com(t0) - closed form| per accepted pair; None for SQM sets."""
    if arrivals.com_initial is None:
        return None
    t0 = state.detection_time
    com_t0 = 0.5 * arrivals.pairs.sum(axis=1)
    expected = dynamics.com_closed_form(state.cfg, arrivals.com_initial, t0)
    return np.abs(com_t0 - expected)


def selective_detection(arrivals: ArrivalSet, deltaQ):
    """Post-select on right-screen arrival > 0; report the conditional patterns."""
    if len(arrivals.pairs) == 0:
        empty = screen_histogram(np.array([]), deltaQ)
        return SelectiveReport(
            selection_rule="right-screen arrival > 0",
            n_selected=0, left_histogram=empty, right_histogram=empty,
            left_upper_fraction=0.0,
        )
    sel = arrivals.pairs[arrivals.right > 0]
    left_hist = screen_histogram(sel[:, 1], deltaQ)
    right_hist = screen_histogram(sel[:, 0], deltaQ)
    frac = float(np.mean(sel[:, 1] > 0)) if len(sel) else 0.0
    return SelectiveReport(
        selection_rule="right-screen arrival > 0",
        n_selected=len(sel),
        left_histogram=left_hist,
        right_histogram=right_hist,
        left_upper_fraction=frac,
    )


def tv_distance(p, q):
    """Total variation distance between two probability vectors.

    Each vector may sum to < 1; the remainders are treated as one extra
    out-of-range bin so the result stays in [0, 1].
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    rest = abs((1.0 - p.sum()) - (1.0 - q.sum()))
    return 0.5 * (np.abs(p - q).sum() + rest)


def joint_bin_fractions(pairs, edges):
    """Empirical probabilities on an edges x edges grid (out-of-range dropped)."""
    h, _, _ = np.histogram2d(pairs[:, 0], pairs[:, 1], bins=[edges, edges])
    return h / len(pairs)


def chi_square_vs_probs(counts, probs, n_total=None, pool_threshold=5.0):
    """Goodness-of-fit chi-square of observed counts against cell probabilities.

    n_total is the full sample size; observations outside the grid
    (n_total - sum(counts)) go into a pooled remainder cell together with any
    cell whose expected count falls below pool_threshold.  Returns
    (statistic, dof, p_value).
    """
    counts = np.asarray(counts, dtype=float).ravel()
    probs = np.asarray(probs, dtype=float).ravel()
    n = counts.sum() if n_total is None else float(n_total)
    rest_p = max(0.0, 1.0 - probs.sum())
    expected = n * probs
    keep = expected >= pool_threshold
    obs = np.append(counts[keep], counts[~keep].sum() + (n - counts.sum()))
    exp = np.append(expected[keep], expected[~keep].sum() + n * rest_p)
    # the pooled tail may still be tiny; merge it into the largest cell then
    if exp[-1] < pool_threshold:
        j = int(np.argmax(exp[:-1]))
        obs[j] += obs[-1]
        exp[j] += exp[-1]
        obs, exp = obs[:-1], exp[:-1]
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = len(obs) - 1
    return stat, dof, float(stats.chi2.sf(stat, dof))


def chi_square_two_sample(counts_a, counts_b):
    """Two-sample chi-square over shared bins; zero for identical samples."""
    a = np.asarray(counts_a, dtype=float).ravel()
    b = np.asarray(counts_b, dtype=float).ravel()
    na, nb = a.sum(), b.sum()
    mask = (a + b) > 0
    ka, kb = np.sqrt(nb / na), np.sqrt(na / nb)
    stat = float(np.sum((ka * a[mask] - kb * b[mask]) ** 2 / (a[mask] + b[mask])))
    dof = max(int(mask.sum()) - 1, 1)
    return stat, dof, float(stats.chi2.sf(stat, dof))


def born_comparison(state, pairs, edges, t):
    """Empirical joint sample vs Born quadrature on a bin grid.

    Returns (tv, chi2_stat, dof, p_value); the quantitative equivariance
    check for guided ensembles and self-consistency check for Born samples.
    """
    P = sampling.bin_probability_grid(state, edges, edges, t)
    h, _, _ = np.histogram2d(pairs[:, 0], pairs[:, 1], bins=[edges, edges])
    tv = tv_distance(h.ravel() / len(pairs), P.ravel())
    stat, dof, p = chi_square_vs_probs(h, P, n_total=len(pairs))
    return tv, stat, dof, p


def right_pattern_vs_born_tv(state, arrivals: ArrivalSet, edges=None):
    """TV between the right-screen arrival pattern and the Born marginal at t0.

    For a constrained-source guided ensemble this single number is the
    quantitative content of the disputed equidistribution claim; it is always
    reported and never thresholded.
    """
    t0 = state.detection_time
    if edges is None:
        lim = state.domain_halfwidth(t0)
        dq = state.cfg.deltaQ
        k = int(np.ceil(lim / dq))
        edges = dq * np.arange(-k, k + 1)
    hist = screen_histogram(arrivals.right, state.cfg.deltaQ, edges=edges)
    probs = sampling.marginal_bin_probability(state, edges, t0)
    n = len(arrivals.right)
    emp = hist.counts / n if n else hist.counts.astype(float)
    return tv_distance(emp, probs)


def mirrored_histogram_tv(hist_a: ScreenHistogram, hist_b: ScreenHistogram):
    """TV between hist_a and the mirror image (y -> -y) of hist_b."""
    na, nb = hist_a.n, hist_b.n
    if na == 0 or nb == 0:
        return 0.0 if na == nb else 1.0
    lo = min(hist_a.bin_edges[0], -hist_b.bin_edges[-1])
    hi = max(hist_a.bin_edges[-1], -hist_b.bin_edges[0])
    dq = hist_a.bin_edges[1] - hist_a.bin_edges[0]
    edges = np.arange(round(lo / dq), round(hi / dq) + 1) * dq

    def place(hist, flip):
        out = np.zeros(len(edges) - 1)
        e = hist.bin_edges
        for i, c in enumerate(hist.counts):
            left = -e[i + 1] if flip else e[i]
            j = int(round((left - edges[0]) / dq))
            out[j] += c
        return out

    pa = place(hist_a, False) / na
    pb = place(hist_b, True) / nb
    return float(0.5 * np.abs(pa - pb).sum())


def _set_label(s: ArrivalSet):
    return s.theory if s.source_mode is None else f"{s.theory}:{s.source_mode}"


def compare_theories(state, a: ArrivalSet, b: ArrivalSet, edges=None):
    """Quantify the discrepancy between two arrival sets on a shared grid."""
    t0 = state.detection_time
    if edges is None:
        lim = state.domain_halfwidth(t0, coverage=3.0)
        edges = np.linspace(-lim, lim, 11)
    pa = joint_bin_fractions(a.pairs, edges)
    pb = joint_bin_fractions(b.pairs, edges)
    tv = tv_distance(pa.ravel(), pb.ravel())
    ha, _, _ = np.histogram2d(a.pairs[:, 0], a.pairs[:, 1], bins=[edges, edges])
    hb, _, _ = np.histogram2d(b.pairs[:, 0], b.pairs[:, 1], bins=[edges, edges])
    stat, dof, p = chi_square_two_sample(ha, hb)

    res_a = com_residuals(state, a)
    res_b = com_residuals(state, b)
    residuals = [float(r.max()) for r in (res_a, res_b) if r is not None and len(r)]
    notes = []
    for s in (a, b):
        if s.flagged:
            notes.append(f"{s.theory}/{s.source_mode}: abort fraction exceeded "
                         f"{ABORT_FLAG_FRACTION}")
    return ComparisonReport(
        tv_distance=float(tv),
        chi_square=stat,
        chi_square_dof=dof,
        chi_square_pvalue=p,
        same_side_prob={_set_label(a): a.same_side_fraction(),
                        _set_label(b): b.same_side_fraction()},
        com_residual_max=max(residuals) if residuals else None,
        notes=notes,
    )
