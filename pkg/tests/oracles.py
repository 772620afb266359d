"""Independent brute-force oracles used to pin expected values.

These deliberately avoid the implementations under test: alpha is computed by
raw pairwise enumeration over values (no coincidence matrix), gating by
per-node ancestor-set search, and word accuracy by direct counting.
"""

from __future__ import annotations

from itertools import product


def brute_force_alpha(rows: list[list], metric: str) -> float | None:
    """Pairwise Krippendorff's alpha over annotator-x-unit rows (None = missing).

    D_o sums the metric over all ordered within-unit value pairs weighted by
    1/(m_u - 1); D_e over all ordered pairs of pooled values. Returns None
    when undefined (no pairable values or zero expected disagreement).
    """
    if metric == "nominal":
        delta = lambda a, b: 0.0 if a == b else 1.0
    elif metric == "interval":
        delta = lambda a, b: (float(a) - float(b)) ** 2
    else:
        raise ValueError(f"oracle supports nominal/interval, not {metric}")

    width = max((len(r) for r in rows), default=0)
    units = []
    for j in range(width):
        values = [r[j] for r in rows if j < len(r) and r[j] is not None]
        if len(values) >= 2:
            units.append(values)
    if not units:
        return None
    n = sum(len(u) for u in units)

    d_observed = 0.0
    for values in units:
        within = sum(delta(a, b) for a in values for b in values)
        d_observed += within / (len(values) - 1)
    d_observed /= n

    pooled = [v for u in units for v in u]
    d_expected = sum(delta(a, b) for a in pooled for b in pooled) / (n * (n - 1))
    if d_expected == 0:
        return None
    return 1.0 - d_observed / d_expected


def gated_set_by_traversal(nodes: list[tuple[str, list[str]]], raw: dict[str, str]) -> set[str]:
    """Gated uids via per-node ancestor enumeration (independent of the BFS path).

    `nodes` is a list of (uid, depends_on). A node is gated when any ancestor,
    found by exhaustively walking its dependency chains, was answered "no".
    """
    parents = {uid: list(deps) for uid, deps in nodes}

    def ancestors(uid: str) -> set[str]:
        found: set[str] = set()
        stack = list(parents[uid])
        while stack:
            p = stack.pop()
            if p not in found:
                found.add(p)
                stack.extend(parents[p])
        return found

    return {uid for uid, _ in nodes if any(raw.get(a) == "no" for a in ancestors(uid))}


def word_accuracy_by_counting(word_labels: list[str], gap_labels: list[str]) -> float:
    """Direct evaluation of the word-tile accuracy definition."""
    n_correct = sum(1 for l in word_labels if l == "correct")
    n_bad_gaps = sum(1 for l in gap_labels if l == "incorrect")
    value = n_correct - n_bad_gaps
    if value < 0:
        value = 0
    return value / len(word_labels)


def all_word_labelings(n_words: int):
    """Every (word_labels, gap_labels) combination for an n-word prompt."""
    for words in product(("correct", "incorrect"), repeat=n_words):
        for gaps in product(("clean", "incorrect"), repeat=n_words + 1):
            yield list(words), list(gaps)


def spearman_by_definition(x: list[float], y: list[float]) -> float | None:
    """Spearman rho from average ranks and the explicit Pearson formula."""

    def ranks(v: list[float]) -> list[float]:
        out = []
        for value in v:
            below = sum(1 for w in v if w < value)
            equal = sum(1 for w in v if w == value)
            out.append(below + (equal + 1) / 2.0)
        return out

    rx, ry = ranks(x), ranks(y)
    n = len(rx)
    mx = sum(rx) / n
    my = sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    if vx == 0 or vy == 0:
        return None
    return cov / (vx * vy) ** 0.5
