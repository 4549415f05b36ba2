from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridsearch.geometry import (
    FULL_FRAME,
    GridKind,
    PerturbationSpec,
    Rect,
    SelectionMode,
    apply_perturbation,
    build_grid,
    enlarge_grid,
    iou,
    max_enlargement,
    normalize_sigma_area,
    perturb_box,
    perturbation_draws,
    select_cells,
)
from oracles import brute_iou, brute_select

THIRD = 1.0 / 3.0


def boxes(min_side: float = 1e-3) -> st.SearchStrategy[Rect]:
    def build(x1: float, y1: float, w: float, h: float) -> Rect:
        x2 = min(x1 + min_side + w * (1.0 - x1 - min_side), 1.0)
        y2 = min(y1 + min_side + h * (1.0 - y1 - min_side), 1.0)
        return Rect(x1, y1, max(x2, x1 + min_side), max(y2, y1 + min_side))

    unit = st.floats(0.0, 1.0 - 2 * min_side, allow_nan=False)
    frac = st.floats(0.0, 1.0, allow_nan=False)
    return st.builds(build, unit, unit, frac, frac)


class TestRect:
    def test_accessors(self):
        r = Rect(0.1, 0.2, 0.5, 0.8)
        assert r.width == pytest.approx(0.4)
        assert r.height == pytest.approx(0.6)
        assert r.area == pytest.approx(0.24)
        assert r.center == (pytest.approx(0.3), pytest.approx(0.5))

    @pytest.mark.parametrize(
        "coords",
        [
            (0.5, 0.0, 0.5, 1.0),
            (0.6, 0.0, 0.5, 1.0),
            (-0.1, 0.0, 0.5, 1.0),
            (0.0, 0.0, 1.1, 1.0),
            (0.0, 0.9, 1.0, 0.2),
        ],
    )
    def test_degenerate_rejected(self, coords):
        with pytest.raises(ValueError):
            Rect(*coords)


class TestIou:
    def test_identity(self):
        r = Rect(0.1, 0.2, 0.6, 0.9)
        assert iou(r, r) == 1.0

    def test_touching_corners_zero(self):
        assert iou(Rect(0, 0, 0.5, 0.5), Rect(0.5, 0.5, 1, 1)) == 0.0

    def test_hand_computed_third(self):
        # intersection 0.125, union 0.375
        assert iou(Rect(0, 0, 0.5, 0.5), Rect(0.25, 0, 0.75, 0.5)) == pytest.approx(
            1.0 / 3.0, abs=1e-15
        )

    @given(boxes(), boxes())
    def test_symmetric_bounded_and_matches_oracle(self, a: Rect, b: Rect):
        v = iou(a, b)
        assert v == iou(b, a)
        assert 0.0 <= v <= 1.0
        assert v == pytest.approx(brute_iou(a.as_tuple(), b.as_tuple()), abs=1e-12)

    @given(boxes(), boxes())
    def test_one_only_for_near_equal(self, a: Rect, b: Rect):
        # The real-number statement is "iou = 1 iff equal"; under floats a
        # pair can round to 1.0 only when the rects coincide to rounding.
        if iou(a, b) == 1.0:
            assert np.allclose(a.as_tuple(), b.as_tuple(), atol=1e-9)


class TestBuildGrid:
    def test_static9_formula_bit_exact(self):
        grid = build_grid(GridKind.STATIC9)
        expected = [
            (f"r{j}c{i}", ((i - 1) / 3, (j - 1) / 3, i / 3, j / 3))
            for j in (1, 2, 3)
            for i in (1, 2, 3)
        ]
        assert [(cid, r.as_tuple()) for cid, r in grid.cells] == expected

    def test_static5_coordinates(self):
        grid = build_grid(GridKind.STATIC5)
        assert [(cid, r.as_tuple()) for cid, r in grid.cells] == [
            ("top_left", (0.0, 0.0, 0.5, 0.5)),
            ("top_right", (0.5, 0.0, 1.0, 0.5)),
            ("bottom_left", (0.0, 0.5, 0.5, 1.0)),
            ("bottom_right", (0.5, 0.5, 1.0, 1.0)),
            ("center", (0.25, 0.25, 0.75, 0.75)),
        ]

    def test_static9_tiles_exactly(self):
        grid = build_grid(GridKind.STATIC9)
        assert sum(r.area for _, r in grid.cells) == pytest.approx(1.0, abs=1e-15)
        rects = [r for _, r in grid.cells]
        for i, a in enumerate(rects):
            for b in rects[i + 1 :]:
                assert iou(a, b) == 0.0

    def test_static5_cover_and_center_overlap(self):
        grid = build_grid(GridKind.STATIC5)
        center = grid.rect_of("center")
        for corner in ("top_left", "top_right", "bottom_left", "bottom_right"):
            rect = grid.rect_of(corner)
            ix = min(rect.x2, center.x2) - max(rect.x1, center.x1)
            iy = min(rect.y2, center.y2) - max(rect.y1, center.y1)
            assert ix * iy == pytest.approx(1.0 / 16.0, abs=1e-15)


class TestEnlargeGrid:
    def test_zero_is_identity(self):
        grid = build_grid(GridKind.STATIC5)
        assert enlarge_grid(grid, 0.0) is grid

    def test_static5_example(self):
        grid = enlarge_grid(build_grid(GridKind.STATIC5), 0.1)
        assert grid.rect_of("top_left").as_tuple() == (0.0, 0.0, 0.6, 0.6)
        assert grid.rect_of("center").as_tuple() == pytest.approx(
            (0.2, 0.2, 0.8, 0.8)
        )

    def test_static9_example(self):
        grid = enlarge_grid(build_grid(GridKind.STATIC9), 0.1)
        r1c2 = grid.rect_of("r1c2")
        assert r1c2.as_tuple() == pytest.approx(
            (THIRD - 0.05, 0.0, 2 * THIRD + 0.05, THIRD + 0.1), abs=1e-15
        )

    @pytest.mark.parametrize("kind", list(GridKind))
    @pytest.mark.parametrize("e", [0.05, 0.1, 0.2])
    def test_equal_area_in_frame_contains_base(self, kind, e):
        base = build_grid(kind)
        grid = enlarge_grid(base, e)
        w0 = base.cells[0][1].width
        h0 = base.cells[0][1].height
        target = (w0 + e) * (h0 + e)
        for (cid, rect), (_, base_rect) in zip(grid.cells, base.cells):
            assert abs(rect.area - target) < 1e-12
            assert 0.0 <= rect.x1 < rect.x2 <= 1.0
            assert 0.0 <= rect.y1 < rect.y2 <= 1.0
            assert rect.x1 <= base_rect.x1 and rect.x2 >= base_rect.x2
            assert rect.y1 <= base_rect.y1 and rect.y2 >= base_rect.y2
        assert grid.cell_ids == base.cell_ids

    def test_bounds(self):
        assert max_enlargement(GridKind.STATIC5) == pytest.approx(0.5)
        assert max_enlargement(GridKind.STATIC9) == pytest.approx(2.0 / 3.0)
        with pytest.raises(ValueError):
            enlarge_grid(build_grid(GridKind.STATIC5), 0.5)
        with pytest.raises(ValueError):
            enlarge_grid(build_grid(GridKind.STATIC9), 0.7)
        with pytest.raises(ValueError):
            enlarge_grid(build_grid(GridKind.STATIC9), -0.01)


class TestSelectCells:
    def test_box_inside_one_static9_cell(self):
        grid = build_grid(GridKind.STATIC9)
        box = Rect(0.1, 0.1, 0.2, 0.2)
        assert select_cells(grid, box, SelectionMode.ANY_OVERLAP) == ["r1c1"]

    def test_center_box_overlaps_all_static5(self):
        grid = build_grid(GridKind.STATIC5)
        box = Rect(0.4, 0.4, 0.6, 0.6)
        assert select_cells(grid, box, SelectionMode.ANY_OVERLAP) == [
            "top_left",
            "top_right",
            "bottom_left",
            "bottom_right",
            "center",
        ]

    def test_center_box_argmax_is_center(self):
        grid = build_grid(GridKind.STATIC5)
        box = Rect(0.4, 0.4, 0.6, 0.6)
        assert select_cells(grid, box, SelectionMode.ARGMAX_IOU) == ["center"]
        # center IoU 0.04/0.25 = 0.16 strictly beats corners' 0.01/0.28
        assert iou(grid.rect_of("center"), box) == pytest.approx(0.16)
        assert iou(grid.rect_of("top_left"), box) == pytest.approx(0.01 / 0.28)

    def test_argmax_tie_broken_by_layout_order(self):
        # Two layout cells with identical rects give a bit-exact IoU tie;
        # the earlier cell must win.
        from gridsearch.geometry import GridLayout

        rect = Rect(0.0, 0.0, 0.5, 0.5)
        tied = GridLayout(
            kind=GridKind.STATIC5,
            enlargement=0.0,
            cells=(("first", rect), ("second", rect), ("other", Rect(0.5, 0.5, 1, 1))),
        )
        box = Rect(0.1, 0.1, 0.3, 0.3)
        assert select_cells(tied, box, SelectionMode.ARGMAX_IOU) == ["first"]

    @pytest.mark.parametrize("kind", list(GridKind))
    @given(box=boxes())
    @settings(max_examples=60)
    def test_matches_oracle_and_subset_property(self, kind, box: Rect):
        grid = build_grid(kind)
        cells = [(cid, r.as_tuple()) for cid, r in grid.cells]
        any_sel = select_cells(grid, box, SelectionMode.ANY_OVERLAP)
        arg_sel = select_cells(grid, box, SelectionMode.ARGMAX_IOU)
        assert any_sel == brute_select(cells, box.as_tuple(), "any")
        assert arg_sel == brute_select(cells, box.as_tuple(), "argmax")
        assert len(any_sel) >= 1
        assert len(arg_sel) == 1
        assert set(arg_sel) <= set(any_sel)


class TestPerturbation:
    def test_identity_is_bitwise(self):
        box = Rect(0.123456, 0.2, 0.77, 0.9)
        spec = PerturbationSpec(0.0, 0.0, seed=3)
        assert perturb_box(box, spec, 42) is box

    def test_injected_shift_clamps_by_translation(self):
        box = Rect(0.7, 0.1, 0.9, 0.3)
        out = apply_perturbation(box, 0.2, 0.0, 1.0, 1.0)
        assert out.as_tuple() == pytest.approx((0.8, 0.1, 1.0, 0.3), abs=1e-12)

    def test_scaling_keeps_centroid_before_shift(self):
        box = Rect(0.4, 0.4, 0.6, 0.6)
        out = apply_perturbation(box, 0.0, 0.0, 2.0, 0.5)
        assert out.center == (pytest.approx(0.5), pytest.approx(0.5))
        assert out.width == pytest.approx(0.4)
        assert out.height == pytest.approx(0.1)

    def test_min_side_floor(self):
        box = Rect(0.4, 0.4, 0.6, 0.6)
        out = apply_perturbation(box, 0.0, 0.0, 1e-6, 1e-6)
        assert out.width == pytest.approx(0.01)
        assert out.height == pytest.approx(0.01)

    def test_width_clamped_to_frame(self):
        box = Rect(0.1, 0.1, 0.9, 0.9)
        out = apply_perturbation(box, 0.0, 0.0, 5.0, 1.0)
        assert out.width == pytest.approx(1.0)
        assert out.x1 == 0.0 and out.x2 == 1.0

    def test_deterministic_by_key(self):
        spec = PerturbationSpec(0.25, 0.25, seed=7)
        a = perturbation_draws(spec, 1001)
        b = perturbation_draws(spec, 1001)
        assert a == b
        assert perturbation_draws(spec, 1002) != a
        assert perturbation_draws(PerturbationSpec(0.25, 0.25, seed=8), 1001) != a

    def test_draws_scale_with_sigma(self):
        narrow = perturbation_draws(PerturbationSpec(0.1, 0.1, seed=7), 5)
        wide = perturbation_draws(PerturbationSpec(0.2, 0.2, seed=7), 5)
        assert wide[0] == pytest.approx(2 * narrow[0])
        assert wide[2] - 1.0 == pytest.approx(2 * (narrow[2] - 1.0))

    @given(
        box=boxes(min_side=0.01),
        dx=st.floats(-2, 2, allow_nan=False),
        dy=st.floats(-2, 2, allow_nan=False),
        ax=st.floats(0, 3, allow_nan=False),
        ay=st.floats(0, 3, allow_nan=False),
    )
    def test_output_always_in_frame(self, box, dx, dy, ax, ay):
        out = apply_perturbation(box, dx, dy, ax, ay)
        assert 0.0 <= out.x1 < out.x2 <= 1.0
        assert 0.0 <= out.y1 < out.y2 <= 1.0

    def test_sampler_std(self):
        spec = PerturbationSpec(0.25, 0.25, seed=0)
        draws = np.array(
            [perturbation_draws(spec, k) for k in range(20000)]
        )
        assert np.std(draws[:, 0]) == pytest.approx(0.25, abs=0.01)
        assert np.std(draws[:, 2]) == pytest.approx(0.25, abs=0.01)
        assert np.mean(draws[:, 2]) == pytest.approx(1.0, abs=0.01)


def test_normalize_sigma_area():
    assert normalize_sigma_area(0.25) == 0.25
    assert normalize_sigma_area(25) == 0.25
    assert normalize_sigma_area(10) == pytest.approx(0.1)
    assert normalize_sigma_area(1.0) == 1.0
    with pytest.raises(ValueError):
        normalize_sigma_area(-0.1)


def test_full_frame_constant():
    assert FULL_FRAME.as_tuple() == (0.0, 0.0, 1.0, 1.0)
    assert FULL_FRAME.area == 1.0
