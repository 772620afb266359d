"""Agreement and stability statistics: Krippendorff's alpha (coincidence-matrix
form) with bootstrap CIs, extreme disagreement rate, annotator-count
convergence, Spearman rank convergence, and pixel agreement heatmaps.

Subset and bootstrap draws use independent PRNG streams keyed by
(seed, family, draw index), so results do not depend on evaluation order or
parallelism.
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .masks import BrushMask
from .store import AnnotationMatrix

# Stream-family tags keeping bootstrap/convergence/rank draws independent.
_BOOTSTRAP_TAG = 1
_CONVERGENCE_TAG = 2
_RANK_TAG = 3

METRICS = ("nominal", "interval", "ordinal")


@dataclass(frozen=True)
class ReliabilityConfig:
    metric: str = "nominal"
    edr_threshold_fraction: float = 0.40
    bootstrap_samples: int = 1000
    ci_level: float = 0.95
    subsets_per_k: int = 200
    rank_subsets_per_k: int = 50
    unsure_policy: str = "category"  # category | missing
    seed: int = 0

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if not 0 < self.edr_threshold_fraction <= 1:
            raise ValueError("edr_threshold_fraction must be in (0, 1]")
        if self.bootstrap_samples < 100:
            raise ValueError("bootstrap_samples must be >= 100")
        if not 0 < self.ci_level < 1:
            raise ValueError("ci_level must be in (0, 1)")
        if self.unsure_policy not in ("category", "missing"):
            raise ValueError("unsure_policy must be category|missing")


@dataclass(frozen=True)
class AlphaResult:
    """Alpha value, or an explicit undefined result (never NaN)."""

    value: float | None
    reason: str | None = None

    @property
    def defined(self) -> bool:
        return self.value is not None


def _as_unit_lists(matrix) -> list[list]:
    """Per-unit value lists (pairable units only, >= 2 values).

    Accepts an AnnotationMatrix or a row-major sequence (annotators x units)
    with None marking missing cells.
    """
    if isinstance(matrix, AnnotationMatrix):
        columns = [matrix.column(u) for u in matrix.units]
    else:
        rows = [list(r) for r in matrix]
        if not rows:
            return []
        width = max(len(r) for r in rows)
        columns = [
            [r[j] for r in rows if j < len(r) and r[j] is not None] for j in range(width)
        ]
    return [c for c in columns if len(c) >= 2]


def _alpha_nominal(units: list[list]) -> AlphaResult:
    n = sum(len(u) for u in units)
    marginals: Counter = Counter(v for u in units for v in u)
    if len(marginals) < 2:
        return AlphaResult(None, "no variance: all values identical")
    d_observed = 0.0
    for values in units:
        m = len(values)
        counts = Counter(values)
        disagreeing = m * m - sum(c * c for c in counts.values())
        d_observed += disagreeing / (m - 1)
    d_observed /= n
    d_expected = (n * n - sum(c * c for c in marginals.values())) / (n * (n - 1))
    if d_expected == 0:
        return AlphaResult(None, "no variance: expected disagreement is zero")
    return AlphaResult(1.0 - d_observed / d_expected)


def _alpha_interval(units: list[list]) -> AlphaResult:
    # Closed forms over sums of squares; values are centered on the pooled
    # mean first to keep the cancellation benign.
    pooled = [float(v) for u in units for v in u]
    n = len(pooled)
    mean = sum(pooled) / n
    d_observed = 0.0
    s1 = 0.0
    s2 = 0.0
    for values in units:
        m = len(values)
        centered = [float(v) - mean for v in values]
        u1 = sum(centered)
        u2 = sum(v * v for v in centered)
        # sum over ordered pairs (i, j) of (v_i - v_j)^2 = 2*m*u2 - 2*u1^2
        d_observed += 2.0 * (m * u2 - u1 * u1) / (m - 1)
        s1 += u1
        s2 += u2
    d_observed /= n
    d_expected = 2.0 * (n * s2 - s1 * s1) / (n * (n - 1))
    if d_expected == 0:
        return AlphaResult(None, "no variance: all values identical")
    return AlphaResult(1.0 - d_observed / d_expected)


def _alpha_ordinal(units: list[list]) -> AlphaResult:
    # Coincidence weights over category pairs; the ordinal difference between
    # two categories is the marginal mass between their ranks, less half of
    # each endpoint's own mass, squared.
    n = sum(len(u) for u in units)
    marginals: Counter = Counter(v for u in units for v in u)
    if len(marginals) < 2:
        return AlphaResult(None, "no variance: all values identical")
    o: dict[tuple, float] = defaultdict(float)
    for values in units:
        m = len(values)
        weight = 1.0 / (m - 1)
        counts = Counter(values)
        for c, nc in counts.items():
            for k, nk in counts.items():
                pairs = nc * (nk - (1 if c == k else 0))
                if pairs:
                    o[(c, k)] += pairs * weight

    cats = sorted(marginals)
    index = {c: i for i, c in enumerate(cats)}
    prefix = np.concatenate(([0.0], np.cumsum([marginals[c] for c in cats])))

    def delta(c, k):
        i, j = index[c], index[k]
        if i > j:
            i, j = j, i
        between = prefix[j + 1] - prefix[i]
        return (between - (marginals[cats[i]] + marginals[cats[j]]) / 2.0) ** 2

    d_observed = sum(w * delta(c, k) for (c, k), w in o.items()) / n
    d_expected = sum(
        marginals[c] * marginals[k] * delta(c, k) for c in cats for k in cats if c != k
    ) / (n * (n - 1))
    if d_expected == 0:
        return AlphaResult(None, "no variance: expected disagreement is zero")
    return AlphaResult(float(1.0 - d_observed / d_expected))


def krippendorff_alpha(matrix, metric: str = "nominal") -> AlphaResult:
    """Chance-corrected agreement over an annotator x unit matrix with missing cells.

    alpha = 1 - D_o / D_e on the coincidence matrix; units carrying fewer than
    two values are excluded. Returns an undefined result when no expected
    disagreement exists (all values identical) or nothing is pairable.
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    units = _as_unit_lists(matrix)
    if metric in ("interval", "ordinal"):
        for values in units:
            for v in values:
                if isinstance(v, str):
                    raise ValueError(f"{metric} metric requires numeric values, got {v!r}")
    return _alpha_on_units(units, metric)


# -- bootstrap ----------------------------------------------------------------


@dataclass(frozen=True)
class BootstrapCI:
    low: float
    high: float
    discarded: int
    samples: int


def bootstrap_ci(matrix, metric: str, cfg: ReliabilityConfig) -> BootstrapCI:
    """Percentile bootstrap over units (columns resampled with replacement)."""
    units = _as_unit_lists(matrix)
    if not units:
        raise ValueError("bootstrap needs at least one pairable unit")
    n_units = len(units)
    alphas = []
    discarded = 0
    for i in range(cfg.bootstrap_samples):
        rng = np.random.default_rng([cfg.seed, _BOOTSTRAP_TAG, i])
        idx = rng.integers(0, n_units, size=n_units)
        sample = [units[j] for j in idx]
        result = _alpha_on_units(sample, metric)
        if result.defined:
            alphas.append(result.value)
        else:
            discarded += 1
    if not alphas:
        raise ValueError("all bootstrap resamples degenerate")
    tail = (1.0 - cfg.ci_level) / 2.0 * 100.0
    low, high = np.percentile(alphas, [tail, 100.0 - tail])
    return BootstrapCI(low=float(low), high=float(high), discarded=discarded, samples=len(alphas))


def _alpha_on_units(units: list[list], metric: str) -> AlphaResult:
    pairable = [u for u in units if len(u) >= 2]
    if not pairable:
        return AlphaResult(None, "no units with at least two values")
    if metric == "nominal":
        return _alpha_nominal(pairable)
    if metric == "interval":
        return _alpha_interval(pairable)
    return _alpha_ordinal(pairable)


def format_alpha_ci(alpha: float, low: float, high: float) -> str:
    """Report formatting, e.g. "0.82 [0.56, 0.89]"."""
    return f"{alpha:.2f} [{low:.2f}, {high:.2f}]"


# -- extreme disagreement -----------------------------------------------------


def edr(matrix, scale: tuple[float, float], threshold_fraction: float = 0.40) -> float:
    """Fraction of units whose max-min annotator spread reaches the threshold.

    The threshold is `threshold_fraction` of the scoring range (0.40 of a 1-5
    Likert scale gives two points). Units with fewer than two values are
    excluded; raises if none remain.
    """
    scale_min, scale_max = scale
    if scale_max <= scale_min:
        raise ValueError("scale_max must exceed scale_min")
    tau = threshold_fraction * (scale_max - scale_min)
    units = _as_unit_lists(matrix)
    if not units:
        raise ValueError("EDR undefined: no units with at least two values")
    spreads = []
    for values in units:
        numeric = [float(v) for v in values]
        spreads.append(max(numeric) - min(numeric))
    return sum(1 for d in spreads if d >= tau) / len(spreads)


# -- annotator-count convergence ----------------------------------------------


@dataclass(frozen=True)
class ConvergencePoint:
    k: int
    mean: float | None
    low: float | None
    high: float | None
    n_draws: int
    discarded: int


def _annotator_subsets(n: int, k: int, per_k: int, seed: int, family: int) -> list[tuple[int, ...]]:
    """All C(n,k) subsets when few enough, else `per_k` independent random draws."""
    if math.comb(n, k) <= per_k:
        return list(combinations(range(n), k))
    subsets = []
    for i in range(per_k):
        rng = np.random.default_rng([seed, family, k, i])
        subsets.append(tuple(sorted(rng.choice(n, size=k, replace=False).tolist())))
    return subsets


def convergence_curve(matrix: AnnotationMatrix, metric: str, cfg: ReliabilityConfig) -> list[ConvergencePoint]:
    """Mean alpha and 95% range across random annotator subsets, for k = 2..N."""
    annotators = list(matrix.annotators)
    n = len(annotators)
    if n < 2:
        raise ValueError("convergence needs at least two annotators")
    tail = (1.0 - cfg.ci_level) / 2.0 * 100.0
    points = []
    for k in range(2, n + 1):
        subsets = _annotator_subsets(n, k, cfg.subsets_per_k, cfg.seed, _CONVERGENCE_TAG)
        alphas = []
        discarded = 0
        for subset in subsets:
            sub = matrix.restrict_annotators([annotators[i] for i in subset])
            result = krippendorff_alpha(sub, metric)
            if result.defined:
                alphas.append(result.value)
            else:
                discarded += 1
        if alphas:
            low, high = np.percentile(alphas, [tail, 100.0 - tail])
            points.append(
                ConvergencePoint(k, float(np.mean(alphas)), float(low), float(high), len(alphas), discarded)
            )
        else:
            points.append(ConvergencePoint(k, None, None, None, 0, discarded))
    return points


# -- Spearman rank statistics ---------------------------------------------------


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties receiving the average of their positions."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(len(v), dtype=float)
    i = 0
    sorted_v = v[order]
    while i < len(v):
        j = i
        while j + 1 < len(v) and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Spearman correlation with average-rank tie handling; None when a side is constant."""
    if len(x) != len(y):
        raise ValueError("length mismatch")
    if len(x) < 2:
        return None
    rx = average_ranks(x)
    ry = average_ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = math.sqrt(float((dx**2).sum()) * float((dy**2).sum()))
    if denom == 0:
        return None
    return float((dx * dy).sum() / denom)


@dataclass(frozen=True)
class RankPoint:
    k: int
    skill: str  # skill id, or "aggregate" for the overall model ranking
    mean: float | None
    low: float | None
    high: float | None
    n_draws: int
    discarded: int


SampleMap = dict[str, dict[tuple[str, str], list[float]]]  # annotator -> (model, skill) -> samples


def _panel_scores(samples: SampleMap, annotators: Iterable[str]) -> dict[tuple[str, str], float]:
    pooled: dict[tuple[str, str], list[float]] = defaultdict(list)
    for a in annotators:
        for key, values in samples.get(a, {}).items():
            pooled[key].extend(values)
    return {key: sum(v) / len(v) for key, v in pooled.items() if v}


def _overall_by_model(scores: dict[tuple[str, str], float]) -> dict[str, float]:
    by_model: dict[str, list[float]] = defaultdict(list)
    for (model, _skill), value in scores.items():
        by_model[model].append(value)
    return {m: sum(v) / len(v) for m, v in by_model.items()}


def rank_convergence(samples: SampleMap, cfg: ReliabilityConfig) -> list[RankPoint]:
    """Stability of model rankings under annotator subsampling.

    For each k, model scores are rebuilt from random annotator subsets and
    rank-correlated (Spearman, average ranks) against the full-panel scores,
    per skill and for the aggregate model ordering. Draws with a constant
    ranking are discarded and counted.
    """
    annotators = sorted(samples)
    n = len(annotators)
    if n < 2:
        raise ValueError("rank convergence needs at least two annotators")
    full = _panel_scores(samples, annotators)
    skills = sorted({skill for (_m, skill) in full})
    models = sorted({m for (m, _s) in full})
    if len(models) < 2:
        raise ValueError("rank convergence needs at least two models")

    tail = (1.0 - cfg.ci_level) / 2.0 * 100.0
    points: list[RankPoint] = []
    for k in range(2, n + 1):
        subsets = _annotator_subsets(n, k, cfg.rank_subsets_per_k, cfg.seed, _RANK_TAG)
        rhos: dict[str, list[float]] = defaultdict(list)
        discards: dict[str, int] = defaultdict(int)
        for subset in subsets:
            chosen = [annotators[i] for i in subset]
            scores = _panel_scores(samples, chosen)
            for skill in skills:
                pair = [
                    (scores[(m, skill)], full[(m, skill)])
                    for m in models
                    if (m, skill) in scores and (m, skill) in full
                ]
                if len(pair) < 2:
                    discards[skill] += 1
                    continue
                rho = spearman_rho([p[0] for p in pair], [p[1] for p in pair])
                if rho is None:
                    discards[skill] += 1
                else:
                    rhos[skill].append(rho)
            sub_overall = _overall_by_model(scores)
            full_overall = _overall_by_model(full)
            shared = [m for m in models if m in sub_overall and m in full_overall]
            rho = (
                spearman_rho([sub_overall[m] for m in shared], [full_overall[m] for m in shared])
                if len(shared) >= 2
                else None
            )
            if rho is None:
                discards["aggregate"] += 1
            else:
                rhos["aggregate"].append(rho)
        for skill in skills + ["aggregate"]:
            values = rhos.get(skill, [])
            if values:
                low, high = np.percentile(values, [tail, 100.0 - tail])
                points.append(
                    RankPoint(k, skill, float(np.mean(values)), float(low), float(high), len(values), discards.get(skill, 0))
                )
            else:
                points.append(RankPoint(k, skill, None, None, None, 0, discards.get(skill, 0)))
    return points


# -- brush agreement heatmaps ---------------------------------------------------


def agreement_heatmap(masks: Sequence[BrushMask]) -> np.ndarray:
    """Per-pixel count of annotators who marked the pixel."""
    if not masks:
        raise ValueError("heatmap needs at least one mask")
    dims = {(m.width, m.height) for m in masks}
    if len(dims) != 1:
        raise ValueError(f"mask dimension mismatch: {sorted(dims)}")
    grid = np.zeros((masks[0].height, masks[0].width), dtype=np.int32)
    for m in masks:
        grid += m.to_array()
    return grid


def write_pgm(grid: np.ndarray, path: str | Path, maxval: int | None = None) -> None:
    """Plain-text PGM (P2) export for toolchain-free inspection."""
    grid = np.asarray(grid)
    if maxval is None:
        maxval = max(int(grid.max()), 1)
    height, width = grid.shape
    lines = [f"P2", f"{width} {height}", str(maxval)]
    for row in grid:
        lines.append(" ".join(str(int(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# -- report assembly -------------------------------------------------------------


def apply_unsure_policy(matrix: AnnotationMatrix, policy: str) -> AnnotationMatrix:
    """category: keep "unsure" as its own nominal category; missing: drop those cells."""
    if policy == "category":
        return matrix
    return matrix.map_values(lambda v: None if v == "unsure" else v)


def bqa_numeric(matrix: AnnotationMatrix) -> AnnotationMatrix:
    """yes/no to 1/0 for numeric statistics; unsure cells become missing."""
    mapping = {"yes": 1.0, "no": 0.0}
    return matrix.map_values(lambda v: mapping.get(v) if isinstance(v, str) else float(v))


@dataclass
class ReliabilityReport:
    alpha: float | None
    alpha_reason: str | None
    ci: BootstrapCI | None
    edr: float | None
    unsure_rate: float | None
    convergence: list[ConvergencePoint]
    n_units: int
    n_annotators: int
    metric: str

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "alpha_reason": self.alpha_reason,
            "ci": None if self.ci is None else {
                "low": self.ci.low,
                "high": self.ci.high,
                "discarded": self.ci.discarded,
                "samples": self.ci.samples,
            },
            "edr": self.edr,
            "unsure_rate": self.unsure_rate,
            "convergence": [
                {"k": p.k, "mean": p.mean, "low": p.low, "high": p.high,
                 "n_draws": p.n_draws, "discarded": p.discarded}
                for p in self.convergence
            ],
            "n_units": self.n_units,
            "n_annotators": self.n_annotators,
            "metric": self.metric,
            "formatted": (
                format_alpha_ci(self.alpha, self.ci.low, self.ci.high)
                if self.alpha is not None and self.ci is not None
                else None
            ),
        }


def build_report(
    matrix: AnnotationMatrix,
    cfg: ReliabilityConfig,
    scale: tuple[float, float] | None = None,
) -> ReliabilityReport:
    """Full reliability report for one matrix slice.

    Label-valued matrices (binary answers) get the configured unsure policy
    for alpha, a 0/1 mapping for EDR, and an unsure rate; numeric matrices get
    alpha/EDR directly. EDR needs `scale`; omit it to skip EDR.
    """
    has_labels = any(isinstance(v, str) for v in matrix.values.values())
    unsure_rate = None
    if has_labels:
        total = len(matrix.values)
        unsure_rate = (
            sum(1 for v in matrix.values.values() if v == "unsure") / total if total else None
        )
        alpha_matrix = apply_unsure_policy(matrix, cfg.unsure_policy)
        edr_matrix = bqa_numeric(matrix)
        if scale is None:
            scale = (0.0, 1.0)
    else:
        alpha_matrix = matrix
        edr_matrix = matrix

    alpha = krippendorff_alpha(alpha_matrix, cfg.metric)
    ci = None
    if alpha.defined:
        ci = bootstrap_ci(alpha_matrix, cfg.metric, cfg)
    edr_value = None
    if scale is not None:
        try:
            edr_value = edr(edr_matrix, scale, cfg.edr_threshold_fraction)
        except ValueError:
            edr_value = None
    convergence = (
        convergence_curve(alpha_matrix, cfg.metric, cfg) if len(matrix.annotators) >= 2 else []
    )
    return ReliabilityReport(
        alpha=alpha.value,
        alpha_reason=alpha.reason,
        ci=ci,
        edr=edr_value,
        unsure_rate=unsure_rate,
        convergence=convergence,
        n_units=len(matrix.units),
        n_annotators=len(matrix.annotators),
        metric=cfg.metric,
    )


def write_report(report: ReliabilityReport, json_path: str | Path) -> None:
    Path(json_path).write_text(
        json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def write_curve_csv(points: Iterable[ConvergencePoint], path: str | Path) -> None:
    lines = ["k,mean,low,high,n_draws,discarded"]
    for p in points:
        fmt = lambda v: "" if v is None else f"{v:.6f}"
        lines.append(f"{p.k},{fmt(p.mean)},{fmt(p.low)},{fmt(p.high)},{p.n_draws},{p.discarded}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_rank_curve_csv(points: Iterable[RankPoint], path: str | Path) -> None:
    lines = ["k,skill,mean,low,high,n_draws,discarded"]
    for p in points:
        fmt = lambda v: "" if v is None else f"{v:.6f}"
        lines.append(
            f"{p.k},{p.skill},{fmt(p.mean)},{fmt(p.low)},{fmt(p.high)},{p.n_draws},{p.discarded}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
