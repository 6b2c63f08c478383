import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbheat import Direction, LayoutError, make_layout, pair_indices
from qbheat.masking import CORNER_POSITIONS, DIRECTION_SIGNS


class TestMakeLayout:
    def test_corner_tl_geometry(self):
        lay = make_layout(16, 16, "corner-tl")
        assert (lay.unmasked.top, lay.unmasked.left) == (0, 0)
        assert (lay.unmasked.height, lay.unmasked.width) == (8, 8)
        assert (lay.dx_cells, lay.dy_cells) == (8, 8)
        assert lay.sub_blocks == ()

    def test_center_geometry(self):
        lay = make_layout(16, 16, "center")
        assert (lay.unmasked.top, lay.unmasked.left) == (4, 4)
        assert (lay.unmasked.height, lay.unmasked.width) == (8, 8)
        assert (lay.dx_cells, lay.dy_cells) == (4, 4)
        assert len(lay.sub_blocks) == 4
        assert all(r.height == 4 and r.width == 4 for r in lay.sub_blocks)

    def test_masked_fraction_exactly_three_quarters(self):
        for pos in CORNER_POSITIONS + ("center",):
            lay = make_layout(16, 24, pos) if pos != "center" else \
                make_layout(16, 24, pos)
            masked = len(lay.masked_cells())
            assert masked == 3 * 16 * 24 // 4

    def test_divisibility_errors(self):
        with pytest.raises(LayoutError):
            make_layout(15, 16, "corner-tl")
        with pytest.raises(LayoutError):
            make_layout(16, 18, "center")
        with pytest.raises(LayoutError):
            make_layout(16, 16, "middle")

    def test_rectangular_offsets(self):
        lay = make_layout(8, 32, "corner-br")
        assert (lay.dx_cells, lay.dy_cells) == (16, 4)

    def test_json_shape(self):
        d = make_layout(16, 16, "center").to_json_dict()
        assert d == {"position": "center", "H": 16, "W": 16,
                     "dx_cells": 4, "dy_cells": 4}


class TestPairIndices:
    def test_corner_tl_right_pairs(self):
        lay = make_layout(16, 16, "corner-tl")
        pairs = pair_indices(lay, lay.direction("right"))
        assert len(pairs) == 64
        assert all(t == (r, c + 8) for (r, c), t in pairs)

    def test_corner_tl_down_right_pairs(self):
        lay = make_layout(16, 16, "corner-tl")
        pairs = pair_indices(lay, lay.direction("down-right"))
        assert len(pairs) == 64
        assert all(t == (r + 8, c + 8) for (r, c), t in pairs)

    def test_corner_tl_rejects_left(self):
        lay = make_layout(16, 16, "corner-tl")
        with pytest.raises(LayoutError):
            lay.direction("left")
        with pytest.raises(LayoutError):
            pair_indices(lay, Direction("left", -8, 0))

    def test_offset_scale_mismatch_rejected(self):
        lay = make_layout(16, 16, "corner-tl")
        with pytest.raises(LayoutError):
            pair_indices(lay, Direction("right", 4, 0))

    def test_sources_unmasked_targets_masked(self):
        for pos in CORNER_POSITIONS + ("center",):
            lay = make_layout(16, 16, pos)
            for tag in lay.direction_tags():
                for src, tgt in pair_indices(lay, lay.direction(tag)):
                    assert lay.unmasked.contains(*src)
                    assert lay.is_masked(*tgt)

    def test_targets_cover_masked_region_exactly(self):
        for pos in CORNER_POSITIONS + ("center",):
            lay = make_layout(16, 16, pos)
            seen = []
            for tag in lay.direction_tags():
                seen.extend(t for _, t in pair_indices(lay,
                                                       lay.direction(tag)))
            assert len(seen) == len(set(seen))
            assert set(seen) == set(lay.masked_cells())

    def test_center_cardinals_beat_diagonals(self):
        lay = make_layout(16, 16, "center")
        up = {t for _, t in pair_indices(lay, lay.direction("up"))}
        # the whole strip above the center block belongs to 'up'
        assert up == {(r, c) for r in range(4) for c in range(4, 12)}
        upleft = {t for _, t in pair_indices(lay, lay.direction("up-left"))}
        assert upleft == {(r, c) for r in range(4) for c in range(4)}

    def test_corner_layouts_mirror_symmetric(self):
        h = w = 12
        tl = make_layout(h, w, "corner-tl")
        tr = make_layout(h, w, "corner-tr")
        bl = make_layout(h, w, "corner-bl")
        br = make_layout(h, w, "corner-br")

        def pair_set(lay):
            out = set()
            for tag in lay.direction_tags():
                out.update((s, t) for s, t in pair_indices(lay,
                                                           lay.direction(tag)))
            return out

        def mirror_h(pairs):
            return {((r, w - 1 - c), (tr_, w - 1 - tc))
                    for (r, c), (tr_, tc) in pairs}

        def mirror_v(pairs):
            return {((h - 1 - r, c), (h - 1 - tr_, tc))
                    for (r, c), (tr_, tc) in pairs}

        assert pair_set(tr) == mirror_h(pair_set(tl))
        assert pair_set(bl) == mirror_v(pair_set(tl))
        assert pair_set(br) == mirror_v(mirror_h(pair_set(tl)))

    def test_direction_offset_consistency_validated(self):
        with pytest.raises(Exception):
            Direction("right", -4, 0)
        with pytest.raises(Exception):
            Direction("down-right", 4, 0)
        d = Direction("up-left", -4, -4)
        assert DIRECTION_SIGNS[d.tag] == (-1, -1)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 10), st.integers(1, 10),
           st.sampled_from(CORNER_POSITIONS + ("center",)))
    def test_coverage_invariants_hold_for_any_dims(self, hq, wq, position):
        height, width = 4 * hq, 4 * wq
        lay = make_layout(height, width, position)
        assert lay.unmasked.height * lay.unmasked.width == height * width // 4
        seen = set()
        for tag in lay.direction_tags():
            for src, tgt in pair_indices(lay, lay.direction(tag)):
                assert lay.unmasked.contains(*src)
                assert 0 <= tgt[0] < height and 0 <= tgt[1] < width
                assert tgt not in seen
                seen.add(tgt)
        assert len(seen) == 3 * height * width // 4
