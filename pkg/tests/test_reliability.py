import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_alpha, spearman_by_definition
from skilleval.masks import BrushMask
from skilleval.reliability import (
    ReliabilityConfig,
    agreement_heatmap,
    apply_unsure_policy,
    average_ranks,
    bootstrap_ci,
    bqa_numeric,
    build_report,
    convergence_curve,
    edr,
    format_alpha_ci,
    krippendorff_alpha,
    rank_convergence,
    spearman_rho,
    write_pgm,
)
from skilleval.store import AnnotationMatrix


def matrix_from_rows(rows):
    m = AnnotationMatrix()
    for a, row in enumerate(rows):
        for u, value in enumerate(row):
            if value is not None:
                m.set(f"a{a}", f"u{u}", value)
    return m


# -- krippendorff's alpha -----------------------------------------------------------


def test_perfect_agreement_with_variance_is_exactly_one():
    result = krippendorff_alpha([[1, 2], [1, 2]], "nominal")
    assert result.value == 1.0
    result = krippendorff_alpha([["yes", "no", "yes"], ["yes", "no", "yes"], ["yes", "no", "yes"]], "nominal")
    assert result.value == 1.0


def test_all_identical_is_undefined_not_a_number():
    result = krippendorff_alpha([[1, 1], [1, 1]], "nominal")
    assert not result.defined
    assert result.value is None
    assert "variance" in result.reason


def test_empty_matrix_undefined():
    result = krippendorff_alpha([], "nominal")
    assert not result.defined


def test_hand_computed_interval_fixture():
    # 2 annotators x 2 units, values ((1,2),(2,1)): coincidence matrix gives
    # D_o = 1, D_e = 2/3, alpha = -0.5
    result = krippendorff_alpha([[1, 2], [2, 1]], "interval")
    assert math.isclose(result.value, -0.5, abs_tol=1e-12)


def test_matches_brute_force_oracle_randomized():
    rng = np.random.default_rng(42)
    for trial in range(150):
        n_annotators = int(rng.integers(2, 7))
        n_units = int(rng.integers(2, 31))
        metric = ("nominal", "interval")[trial % 2]
        rows = []
        for _ in range(n_annotators):
            row = []
            for _ in range(n_units):
                if rng.random() < 0.3:
                    row.append(None)
                else:
                    row.append(int(rng.integers(0, 4)))
            rows.append(row)
        expected = brute_force_alpha(rows, metric)
        got = krippendorff_alpha(rows, metric)
        if expected is None:
            assert not got.defined
        else:
            assert got.defined
            assert abs(got.value - expected) < 1e-9


def test_interval_accepts_annotation_matrix():
    m = matrix_from_rows([[1, 2], [2, 1]])
    assert math.isclose(krippendorff_alpha(m, "interval").value, -0.5)


def test_string_values_rejected_for_interval():
    with pytest.raises(ValueError):
        krippendorff_alpha([["yes", "no"], ["no", "yes"]], "interval")


def test_unknown_metric_rejected():
    with pytest.raises(ValueError):
        krippendorff_alpha([[1, 2]], "ratio")


@given(st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_alpha_invariant_under_permutations(seed):
    rng = np.random.default_rng(seed)
    rows = [[None if rng.random() < 0.2 else int(rng.integers(0, 4)) for _ in range(12)] for _ in range(4)]
    base = krippendorff_alpha(rows, "nominal")
    row_perm = [rows[i] for i in rng.permutation(4)]
    col_perm_idx = rng.permutation(12)
    col_perm = [[row[j] for j in col_perm_idx] for row in rows]
    for variant in (row_perm, col_perm):
        other = krippendorff_alpha(variant, "nominal")
        if base.defined:
            assert math.isclose(base.value, other.value, abs_tol=1e-12)
        else:
            assert not other.defined


@given(
    st.integers(min_value=0, max_value=2**31 - 1),
    st.floats(min_value=0.1, max_value=10.0),
    st.floats(min_value=-10.0, max_value=10.0),
    st.booleans(),
)
@settings(max_examples=40, deadline=None)
def test_interval_alpha_invariant_under_affine_maps(seed, a, b, negate):
    if negate:
        a = -a
    rng = np.random.default_rng(seed)
    rows = [[None if rng.random() < 0.2 else float(rng.integers(0, 5)) for _ in range(10)] for _ in range(4)]
    base = krippendorff_alpha(rows, "interval")
    mapped = [[None if v is None else a * v + b for v in row] for row in rows]
    other = krippendorff_alpha(mapped, "interval")
    if base.defined:
        assert math.isclose(base.value, other.value, abs_tol=1e-9)
    else:
        assert not other.defined


def test_ordinal_hand_computed_fixture():
    # units (1,2) and (2,3): marginals n1=1, n2=2, n3=1, n=4;
    # ordinal deltas d(1,2)=d(2,3)=2.25, d(1,3)=9 -> D_o=2.25, D_e=3 -> alpha=0.25
    result = krippendorff_alpha([[1, 2], [2, 3]], "ordinal")
    assert math.isclose(result.value, 0.25, abs_tol=1e-12)


def test_convergence_counts_degenerate_subsets():
    # one unit where only annotators 0/1 overlap with identical values:
    # subsets {0,1} see no variance and are discarded with a count
    rows = [
        [1, 1, None],
        [1, None, None],
        [None, 2, 1],
        [None, 1, 2],
    ]
    m = matrix_from_rows(rows)
    cfg = ReliabilityConfig(metric="nominal", seed=4)
    points = convergence_curve(m, "nominal", cfg)
    k2 = points[0]
    assert k2.k == 2
    assert k2.discarded >= 1
    assert k2.n_draws + k2.discarded == 6  # C(4,2) enumerated


def test_ordinal_runs_and_binary_matches_nominal():
    rows = [[1, 2, 3, 1], [1, 3, 3, 2], [2, 2, 3, 1]]
    result = krippendorff_alpha(rows, "ordinal")
    assert result.defined and -1.0 <= result.value <= 1.0
    binary = [[0, 1, 1, 0], [0, 1, 0, 1], [1, 1, 0, 0]]
    assert math.isclose(
        krippendorff_alpha(binary, "ordinal").value,
        krippendorff_alpha(binary, "nominal").value,
        abs_tol=1e-12,
    )


# -- EDR ------------------------------------------------------------------------------


def test_edr_hand_enumerated_case():
    # units {1,5}, {3,3,4}, {2,4} -> spreads {4,1,2}, tau = 2 -> 2/3
    rows = [[1, 3, 2], [5, 3, 4], [None, 4, None]]
    assert math.isclose(edr(rows, scale=(1, 5), threshold_fraction=0.40), 2 / 3)


def test_edr_zero_when_identical():
    rows = [[3, 4], [3, 4]]
    assert edr(rows, scale=(1, 5)) == 0.0


def test_edr_single_unit_full_spread():
    assert edr([[1], [5]], scale=(1, 5)) == 1.0


def test_edr_undefined_without_pairable_units():
    with pytest.raises(ValueError):
        edr([[1, 2]], scale=(1, 5))


def test_edr_monotone_in_threshold():
    rng = np.random.default_rng(5)
    rows = [[int(rng.integers(1, 6)) for _ in range(40)] for _ in range(5)]
    fractions = [0.1, 0.25, 0.4, 0.6, 0.8, 1.0]
    values = [edr(rows, scale=(1, 5), threshold_fraction=f) for f in fractions]
    assert values == sorted(values, reverse=True)


# -- bootstrap ---------------------------------------------------------------------------


def near_perfect_matrix():
    rng = np.random.default_rng(0)
    rows = []
    base = [int(rng.integers(0, 3)) for _ in range(30)]
    for a in range(5):
        row = list(base)
        if a == 4:
            row[0] = (row[0] + 1) % 3
        rows.append(row)
    return rows


def test_bootstrap_interval_ordering_and_determinism():
    rows = near_perfect_matrix()
    cfg = ReliabilityConfig(metric="nominal", bootstrap_samples=200, seed=7)
    ci1 = bootstrap_ci(rows, "nominal", cfg)
    ci2 = bootstrap_ci(rows, "nominal", cfg)
    assert ci1 == ci2
    assert ci1.high >= ci1.low
    assert ci1.high - ci1.low < 0.2  # near-perfect agreement -> narrow interval


def test_bootstrap_different_seeds_differ():
    rows = [[int((i * j) % 3) for j in range(20)] for i in range(1, 5)]
    ci_a = bootstrap_ci(rows, "nominal", ReliabilityConfig(bootstrap_samples=150, seed=1))
    ci_b = bootstrap_ci(rows, "nominal", ReliabilityConfig(bootstrap_samples=150, seed=2))
    assert (ci_a.low, ci_a.high) != (ci_b.low, ci_b.high)


def test_report_formatting():
    assert format_alpha_ci(0.82, 0.56, 0.89) == "0.82 [0.56, 0.89]"
    assert format_alpha_ci(0.391, 0.266, 0.504) == "0.39 [0.27, 0.50]"


def test_bootstrap_counts_degenerate_resamples():
    # single informative unit: resamples that miss it are degenerate
    rows = [[1, 1, 1], [2, 1, 1]]
    cfg = ReliabilityConfig(metric="nominal", bootstrap_samples=100, seed=3)
    ci = bootstrap_ci(rows, "nominal", cfg)
    assert ci.discarded > 0
    assert ci.samples + ci.discarded == 100


# -- convergence --------------------------------------------------------------------------


def test_convergence_at_full_panel_is_exact():
    rng = np.random.default_rng(9)
    rows = [[int(rng.integers(0, 3)) for _ in range(25)] for _ in range(5)]
    m = matrix_from_rows(rows)
    cfg = ReliabilityConfig(metric="nominal", seed=11)
    points = convergence_curve(m, "nominal", cfg)
    assert [p.k for p in points] == [2, 3, 4, 5]
    last = points[-1]
    full = krippendorff_alpha(m, "nominal")
    assert math.isclose(last.mean, full.value, abs_tol=1e-12)
    assert last.low == last.high == last.mean  # single subset: zero-width band
    assert last.n_draws == 1


def test_convergence_deterministic_and_enumerates_small_cases():
    rng = np.random.default_rng(10)
    rows = [[int(rng.integers(0, 3)) for _ in range(20)] for _ in range(5)]
    m = matrix_from_rows(rows)
    cfg = ReliabilityConfig(metric="nominal", seed=5, subsets_per_k=200)
    p1 = convergence_curve(m, "nominal", cfg)
    p2 = convergence_curve(m, "nominal", cfg)
    assert p1 == p2
    # C(5,2)=10 <= 200: all subsets enumerated
    assert p1[0].n_draws + p1[0].discarded == 10


def test_deviant_annotator_widens_small_k_band():
    rng = np.random.default_rng(12)
    base = [int(rng.integers(0, 3)) for _ in range(30)]
    rows = [list(base) for _ in range(5)]
    rows.append([int(rng.integers(0, 3)) for _ in range(30)])  # one deviant
    m = matrix_from_rows(rows)
    cfg = ReliabilityConfig(metric="nominal", seed=13)
    points = convergence_curve(m, "nominal", cfg)
    width = {p.k: p.high - p.low for p in points}
    assert width[2] > width[5]


# -- spearman -----------------------------------------------------------------------------


def test_spearman_examples():
    assert spearman_rho([1, 2, 3, 4], [1, 2, 3, 4]) == 1.0
    assert spearman_rho([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0
    assert math.isclose(spearman_rho([1, 2, 3, 4], [1, 2, 4, 3]), 0.8)


def test_spearman_tied_pair_average_ranks():
    # ranks (1,2,3,4) vs (1,2.5,2.5,4) -> rho = sqrt(0.9)
    rho = spearman_rho([0.1, 0.2, 0.3, 0.4], [0.1, 0.25, 0.25, 0.4])
    assert math.isclose(rho, math.sqrt(0.9), abs_tol=1e-12)
    assert math.isclose(rho, spearman_by_definition([0.1, 0.2, 0.3, 0.4], [0.1, 0.25, 0.25, 0.4]))


def test_spearman_constant_side_undefined():
    assert spearman_rho([1, 1, 1], [1, 2, 3]) is None


def test_average_ranks_match_scipy():
    rng = np.random.default_rng(20)
    for _ in range(30):
        values = rng.integers(0, 5, size=10).astype(float)
        assert np.allclose(average_ranks(values), scipy.stats.rankdata(values))


def test_spearman_matches_scipy():
    rng = np.random.default_rng(21)
    for _ in range(40):
        x = rng.integers(0, 6, size=8).astype(float)
        y = rng.integers(0, 6, size=8).astype(float)
        ours = spearman_rho(x, y)
        reference = scipy.stats.spearmanr(x, y).statistic
        if ours is None:
            assert math.isnan(reference)
        else:
            assert math.isclose(ours, reference, abs_tol=1e-12)


# -- rank convergence ----------------------------------------------------------------------


def samples_for(scores_by_annotator):
    # annotator -> (model, skill) -> [values]
    return {a: {k: list(v) for k, v in inner.items()} for a, inner in scores_by_annotator.items()}


def test_rank_convergence_identical_annotators_give_rho_one():
    per = {("m1", "s1"): [0.9], ("m2", "s1"): [0.5], ("m3", "s1"): [0.2]}
    samples = samples_for({f"a{i}": per for i in range(4)})
    points = rank_convergence(samples, ReliabilityConfig(seed=0))
    for p in points:
        assert p.mean == 1.0


def test_rank_convergence_full_panel_self_correlation():
    rng = np.random.default_rng(30)
    samples = samples_for({
        f"a{i}": {(m, s): [float(rng.uniform(0, 1))] for m in ("m1", "m2", "m3", "m4") for s in ("s1", "s2")}
        for i in range(5)
    })
    points = rank_convergence(samples, ReliabilityConfig(seed=0))
    full_panel = [p for p in points if p.k == 5]
    for p in full_panel:
        if p.mean is not None:
            assert math.isclose(p.mean, 1.0)


def test_rank_convergence_needs_two_models():
    samples = samples_for({"a1": {("m1", "s1"): [1.0]}, "a2": {("m1", "s1"): [0.5]}})
    with pytest.raises(ValueError):
        rank_convergence(samples, ReliabilityConfig(seed=0))


# -- heatmaps -------------------------------------------------------------------------------


def test_heatmap_identical_masks():
    grid = np.zeros((4, 4), dtype=np.uint8)
    grid[1:3, 1:3] = 1
    masks = [BrushMask.from_array(grid)] * 2
    heat = agreement_heatmap(masks)
    assert set(np.unique(heat)) == {0, 2}


def test_heatmap_disjoint_masks():
    a = np.zeros((4, 4), dtype=np.uint8); a[0, :] = 1
    b = np.zeros((4, 4), dtype=np.uint8); b[3, :] = 1
    heat = agreement_heatmap([BrushMask.from_array(a), BrushMask.from_array(b)])
    assert heat.max() == 1


def test_heatmap_conserves_marks():
    rng = np.random.default_rng(8)
    masks = [BrushMask.from_array(rng.integers(0, 2, size=(6, 5)).astype(np.uint8)) for _ in range(4)]
    heat = agreement_heatmap(masks)
    assert heat.sum() == sum(m.marked_pixels for m in masks)


def test_heatmap_dimension_mismatch():
    with pytest.raises(ValueError):
        agreement_heatmap([BrushMask.empty(4, 4), BrushMask.empty(5, 4)])


def test_pgm_export(tmp_path):
    grid = np.array([[0, 1], [2, 3]])
    path = tmp_path / "heat.pgm"
    write_pgm(grid, path, maxval=6)
    lines = path.read_text().splitlines()
    assert lines[0] == "P2"
    assert lines[1] == "2 2"
    assert lines[2] == "6"
    assert lines[3:] == ["0 1", "2 3"]


# -- report assembly ---------------------------------------------------------------------


def test_unsure_policy_switch():
    m = matrix_from_rows([["yes", "unsure"], ["yes", "no"]])
    kept = apply_unsure_policy(m, "category")
    assert kept.n_cells == 4
    dropped = apply_unsure_policy(m, "missing")
    assert dropped.n_cells == 3


def test_bqa_numeric_mapping():
    m = matrix_from_rows([["yes", "no", "unsure"]])
    numeric = bqa_numeric(m)
    assert numeric.values[("a0", "u0")] == 1.0
    assert numeric.values[("a0", "u1")] == 0.0
    assert ("a0", "u2") not in numeric.values


def test_build_report_on_labels():
    rng = np.random.default_rng(14)
    m = AnnotationMatrix()
    for a in range(4):
        for u in range(25):
            label = ("yes", "no", "unsure")[int(rng.integers(0, 3))]
            m.set(f"a{a}", f"u{u}", label)
    cfg = ReliabilityConfig(metric="nominal", bootstrap_samples=100, seed=2)
    report = build_report(m, cfg, scale=(0, 1))
    assert report.unsure_rate is not None and 0 < report.unsure_rate < 1
    assert report.alpha is not None
    assert report.n_annotators == 4 and report.n_units == 25
    payload = report.to_json_dict()
    assert "formatted" in payload and payload["ci"]["high"] >= payload["ci"]["low"]
