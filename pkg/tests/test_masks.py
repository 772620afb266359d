import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skilleval.masks import BrushMask, mask_to_ratio


def test_empty_mask_ratio_zero():
    assert mask_to_ratio(BrushMask.empty(10, 8)) == 0.0


def test_full_mask_ratio_one():
    assert mask_to_ratio(BrushMask.full(10, 8)) == 1.0


def test_quarter_marked_ratio():
    # 100x100 with 2500 marked pixels
    grid = np.zeros((100, 100), dtype=np.uint8)
    grid[:25, :] = 1
    mask = BrushMask.from_array(grid)
    assert mask.marked_pixels == 2500
    assert mask_to_ratio(mask) == 0.25


def test_run_sum_invariant_enforced():
    with pytest.raises(ValueError):
        BrushMask(width=4, height=4, runs=(3, 2))


def test_runs_start_with_zero_run():
    grid = np.ones((2, 2), dtype=np.uint8)
    mask = BrushMask.from_array(grid)
    assert mask.runs == (0, 4)


def test_wire_format_bit_exact():
    mask = BrushMask(width=3, height=2, runs=(1, 2, 3))
    text = mask.to_json()
    again = BrushMask.from_json(text)
    assert again == mask
    assert again.to_json() == text


@st.composite
def random_mask_array(draw):
    h = draw(st.integers(min_value=1, max_value=12))
    w = draw(st.integers(min_value=1, max_value=12))
    bits = draw(st.lists(st.integers(min_value=0, max_value=1), min_size=h * w, max_size=h * w))
    return np.array(bits, dtype=np.uint8).reshape(h, w)


@given(random_mask_array())
@settings(max_examples=80, deadline=None)
def test_rle_round_trip_and_ratio_invariance(grid):
    mask = BrushMask.from_array(grid)
    assert np.array_equal(mask.to_array(), grid)
    # re-encoding the decoded pixels is canonical and ratio-preserving
    again = BrushMask.from_array(mask.to_array())
    assert again == mask
    assert mask_to_ratio(again) == mask_to_ratio(mask)
    assert 0.0 <= mask_to_ratio(mask) <= 1.0
    assert mask.marked_pixels == int(grid.sum())


@given(random_mask_array())
@settings(max_examples=40, deadline=None)
def test_json_round_trip_property(grid):
    mask = BrushMask.from_array(grid)
    assert BrushMask.from_json(mask.to_json()) == mask
