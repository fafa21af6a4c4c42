import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smrtrack.errors import DimensionError, OutOfBoundsError
from smrtrack.imaging import BBox, GrayFrame, pad_frame
from smrtrack.matching import (
    METRIC_SAD,
    METRIC_SMR,
    Template,
    diff_histogram,
    diff_map,
    dynamic_alpha,
    sad_lut,
    sad_score,
    search,
    smr_lut,
    smr_score,
)

from .reference import naive_sad, naive_search, naive_smr, rows_of


def frame_of(rows):
    return GrayFrame(np.array(rows, dtype=np.uint8))


def template_of(rows):
    return Template(frame_of(rows))


@st.composite
def patch_pairs(draw, max_side=8):
    w = draw(st.integers(1, max_side))
    h = draw(st.integers(1, max_side))
    pix = st.lists(st.integers(0, 255), min_size=w * h, max_size=w * h)
    a = np.array(draw(pix), dtype=np.uint8).reshape(h, w)
    b = np.array(draw(pix), dtype=np.uint8).reshape(h, w)
    return GrayFrame(a), Template(GrayFrame(b))


class TestSmrScore:
    def test_outliers_contribute_exactly_zero(self):
        # diffs are 1 and 79; only the 1 survives alpha = 25
        patch = frame_of([[10, 20]])
        tmpl = template_of([[11, 90]])
        assert smr_score(patch, tmpl, alpha=25.0) == pytest.approx(
            math.exp(-1.0), rel=1e-15
        )

    def test_self_match_scores_the_pixel_count(self):
        patch = frame_of([[3, 7], [11, 200]])
        assert smr_score(patch, Template(patch), alpha=0.0) == 4.0

    def test_all_outliers_scores_zero(self):
        patch = frame_of([[0, 0]])
        tmpl = template_of([[255, 255]])
        assert smr_score(patch, tmpl, alpha=100.0) == 0.0

    def test_alpha_boundary_is_inclusive(self):
        patch = frame_of([[30]])
        tmpl = template_of([[20]])
        assert smr_score(patch, tmpl, alpha=10.0) == pytest.approx(
            math.exp(-10.0), rel=1e-15
        )
        assert smr_score(patch, tmpl, alpha=9.99) == 0.0

    def test_beta_steepens_the_falloff(self):
        patch = frame_of([[12]])
        tmpl = template_of([[10]])
        assert smr_score(patch, tmpl, alpha=5.0, beta=0.5) == pytest.approx(
            math.exp(-1.0), rel=1e-15
        )

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            smr_score(frame_of([[1, 2]]), template_of([[1]]), alpha=10.0)

    @given(patch_pairs(), st.floats(0.0, 300.0))
    @settings(max_examples=100)
    def test_bounded_by_zero_and_pixel_count(self, pair, alpha):
        patch, tmpl = pair
        s = smr_score(patch, tmpl, alpha)
        assert 0.0 <= s <= patch.width * patch.height

    @given(patch_pairs(), st.floats(0.0, 300.0), st.floats(0.0, 300.0))
    @settings(max_examples=100)
    def test_monotone_in_alpha(self, pair, a1, a2):
        patch, tmpl = pair
        lo, hi = sorted((a1, a2))
        assert smr_score(patch, tmpl, lo) <= smr_score(patch, tmpl, hi)

    @given(patch_pairs(), st.floats(0.0, 300.0))
    @settings(max_examples=60)
    def test_no_patch_outscores_self_match(self, pair, alpha):
        patch, tmpl = pair
        n = patch.width * patch.height
        assert smr_score(tmpl.patch, tmpl, alpha) == float(n)
        assert smr_score(patch, tmpl, alpha) <= n

    @given(patch_pairs(), st.floats(0.0, 300.0), st.floats(0.1, 4.0))
    @settings(max_examples=80)
    def test_agrees_with_naive_reference(self, pair, alpha, beta):
        patch, tmpl = pair
        expected = naive_smr(rows_of(patch), rows_of(tmpl.patch), 0, 0, alpha, beta)
        assert smr_score(patch, tmpl, alpha, beta) == pytest.approx(
            expected, abs=1e-12
        )


class TestSadScore:
    def test_example(self):
        assert sad_score(frame_of([[10, 20]]), template_of([[11, 90]])) == 71

    def test_self_match_is_zero(self):
        patch = frame_of([[9, 200], [0, 255]])
        assert sad_score(patch, Template(patch)) == 0

    @given(patch_pairs())
    @settings(max_examples=100)
    def test_symmetric_and_matches_naive(self, pair):
        patch, tmpl = pair
        s = sad_score(patch, tmpl)
        assert s == sad_score(tmpl.patch, Template(patch))
        assert s == naive_sad(rows_of(patch), rows_of(tmpl.patch), 0, 0)
        assert 0 <= s <= 255 * patch.width * patch.height


class TestLuts:
    def test_smr_lut_thresholds_at_alpha(self):
        lut = smr_lut(25.0)
        assert lut[0] == 1.0
        assert lut[25] == pytest.approx(math.exp(-25.0), rel=1e-15)
        assert lut[26] == 0.0
        assert np.all(lut[26:] == 0.0)

    def test_smr_lut_fractional_alpha(self):
        lut = smr_lut(25.9)
        assert lut[25] > 0.0
        assert lut[26] == 0.0

    def test_smr_lut_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            smr_lut(-1.0)
        with pytest.raises(ValueError):
            smr_lut(10.0, beta=0.0)

    def test_sad_lut_is_identity(self):
        assert np.array_equal(sad_lut(), np.arange(256, dtype=np.float64))


class TestDynamicAlpha:
    def test_quarter_of_max_change(self):
        old = template_of([[0, 10], [20, 30]])
        new = template_of([[100, 10], [20, 30]])
        assert dynamic_alpha(old, new, k=0.25) == 25.0

    def test_small_changes_clamp_to_floor(self):
        old = template_of([[10]])
        new = template_of([[12]])
        assert dynamic_alpha(old, new, k=0.25) == 1.0
        assert dynamic_alpha(old, new, k=0.25, alpha_min=0.2) == 0.5

    def test_identical_templates_hit_the_floor(self):
        t = template_of([[50, 60]])
        assert dynamic_alpha(t, t, k=0.25) == 1.0

    def test_symmetric_in_arguments(self):
        a = template_of([[0, 200]])
        b = template_of([[90, 10]])
        assert dynamic_alpha(a, b, k=0.3) == dynamic_alpha(b, a, k=0.3)

    def test_rejects_non_positive_k(self):
        t = template_of([[1]])
        with pytest.raises(ValueError):
            dynamic_alpha(t, t, k=0.0)


class TestDiffTools:
    def test_diff_map_values(self):
        patch = frame_of([[10, 250], [0, 30]])
        tmpl = template_of([[30, 250], [255, 35]])
        assert diff_map(patch, tmpl).pixels.tolist() == [[20, 0], [255, 5]]

    def test_histogram_bins_by_lower_bound(self):
        m = frame_of([[0, 7], [8, 255]])
        hist = dict(diff_histogram(m, bin_width=8))
        assert hist[0] == 2
        assert hist[8] == 1
        assert hist[248] == 1
        assert len(hist) == 32

    def test_histogram_covers_255_with_wide_bins(self):
        m = frame_of([[255]])
        hist = diff_histogram(m, bin_width=100)
        assert [lower for lower, _ in hist] == [0, 100, 200]
        assert hist[2] == (200, 1)

    def test_histogram_rejects_bad_width(self):
        with pytest.raises(ValueError):
            diff_histogram(frame_of([[0]]), bin_width=0)

    @given(patch_pairs(), st.integers(1, 64))
    @settings(max_examples=60)
    def test_histogram_counts_are_conserved(self, pair, bin_width):
        patch, tmpl = pair
        hist = diff_histogram(diff_map(patch, tmpl), bin_width)
        assert sum(count for _, count in hist) == patch.width * patch.height


def padded_search(frame, template, prev_pos, radius, alpha, metric=METRIC_SMR):
    """Pad enough that every candidate is in bounds, then search; the
    returned offsets are unchanged because padding shifts frame and anchor
    together."""
    margin = radius + max(template.patch.width, template.patch.height)
    return search(
        pad_frame(frame, margin),
        template,
        prev_pos.shifted(margin, margin),
        radius,
        alpha,
        metric,
    )


class TestSearch:
    def _block_scene(self):
        # 10x10 of zeros with a 3x3 block of 255 whose corner sits at (4, 5)
        pixels = np.zeros((10, 10), dtype=np.uint8)
        pixels[5:8, 4:7] = 255
        frame = GrayFrame(pixels)
        tmpl = Template(GrayFrame(np.full((3, 3), 255, dtype=np.uint8)))
        return frame, tmpl

    def test_finds_displaced_block(self):
        frame, tmpl = self._block_scene()
        smap = padded_search(frame, tmpl, BBox(3, 3, 3, 3), radius=5, alpha=63.0)
        assert smap.best_offset == (1, 2)
        assert smap.best_score == 9.0
        assert smap.score_at(1, 2) == 9.0
        assert smap.scores.shape == (11, 11)

    def test_finds_displaced_block_with_sad(self):
        frame, tmpl = self._block_scene()
        smap = padded_search(
            frame, tmpl, BBox(3, 3, 3, 3), radius=5, alpha=63.0, metric=METRIC_SAD
        )
        assert smap.best_offset == (1, 2)
        assert smap.best_score == 0.0

    def test_uniform_ties_resolve_to_zero_offset(self):
        frame = GrayFrame(np.full((9, 9), 40, dtype=np.uint8))
        tmpl = Template(GrayFrame(np.full((3, 3), 40, dtype=np.uint8)))
        smap = search(frame, tmpl, BBox(3, 3, 3, 3), radius=2, alpha=10.0)
        assert smap.best_offset == (0, 0)
        assert np.all(smap.scores == 9.0)

    def test_equidistant_ties_resolve_row_major(self):
        # perfect matches only at the four cardinal offsets; all have
        # displacement 1, so row-major order decides: (0, -1) wins
        x = 200
        frame = frame_of([[x, 0, x], [0, x, 0], [x, 0, x]])
        tmpl = template_of([[0]])
        smap = search(frame, tmpl, BBox(1, 1, 1, 1), radius=1, alpha=10.0)
        assert smap.best_offset == (0, -1)
        _, naive_best, _ = naive_search(
            rows_of(frame), rows_of(tmpl.patch), 1, 1, 1, 10.0, METRIC_SMR
        )
        assert naive_best == (0, -1)

    def test_matches_naive_reference_on_random_scenes(self):
        rng = random.Random(414243)
        for case in range(40):
            radius = rng.randint(0, 3)
            tw, th = rng.randint(1, 4), rng.randint(1, 4)
            fw = tw + 2 * radius + rng.randint(0, 3)
            fh = th + 2 * radius + rng.randint(0, 3)
            frame_rows = [
                [rng.randrange(256) for _ in range(fw)] for _ in range(fh)
            ]
            tmpl_rows = [[rng.randrange(256) for _ in range(tw)] for _ in range(th)]
            x0 = rng.randint(radius, fw - radius - tw)
            y0 = rng.randint(radius, fh - radius - th)
            alpha = rng.choice([0.0, 1.0, 25.0, 63.75, 255.0])
            metric = METRIC_SMR if case % 2 == 0 else METRIC_SAD
            smap = search(
                GrayFrame(np.array(frame_rows, dtype=np.uint8)),
                Template(GrayFrame(np.array(tmpl_rows, dtype=np.uint8))),
                BBox(x0, y0, tw, th),
                radius,
                alpha,
                metric,
            )
            expected_scores, expected_offset, expected_score = naive_search(
                frame_rows, tmpl_rows, x0, y0, radius, alpha, metric
            )
            assert smap.best_offset == expected_offset
            assert smap.best_score == pytest.approx(expected_score, abs=1e-12)
            for (h1, h2), s in expected_scores.items():
                assert smap.score_at(h1, h2) == pytest.approx(s, abs=1e-12)

    def test_threads_do_not_change_the_map(self):
        rng = np.random.default_rng(99)
        frame = GrayFrame(rng.integers(0, 256, size=(40, 40), dtype=np.uint8))
        tmpl = Template(GrayFrame(rng.integers(0, 256, size=(5, 5), dtype=np.uint8)))
        serial = search(frame, tmpl, BBox(15, 15, 5, 5), 6, 63.75, threads=1)
        threaded = search(frame, tmpl, BBox(15, 15, 5, 5), 6, 63.75, threads=4)
        assert np.array_equal(serial.scores, threaded.scores)
        assert serial.best_offset == threaded.best_offset

    def test_zero_radius_scores_one_candidate(self):
        frame = GrayFrame(np.full((4, 4), 7, dtype=np.uint8))
        tmpl = Template(GrayFrame(np.full((2, 2), 7, dtype=np.uint8)))
        smap = search(frame, tmpl, BBox(1, 1, 2, 2), radius=0, alpha=5.0)
        assert smap.scores.shape == (1, 1)
        assert smap.best_offset == (0, 0)
        assert smap.best_score == 4.0

    @pytest.mark.parametrize(
        "pos,edge",
        [
            (BBox(1, 5, 3, 3), "left"),
            (BBox(5, 1, 3, 3), "top"),
            (BBox(6, 5, 3, 3), "right"),
            (BBox(5, 6, 3, 3), "bottom"),
        ],
    )
    def test_candidates_must_stay_inside_the_frame(self, pos, edge):
        frame = GrayFrame(np.zeros((10, 10), dtype=np.uint8))
        tmpl = Template(GrayFrame(np.zeros((3, 3), dtype=np.uint8)))
        with pytest.raises(OutOfBoundsError) as err:
            search(frame, tmpl, pos, radius=2, alpha=10.0)
        assert err.value.edge == edge
        assert "pad the frame first" in str(err.value)

    def test_rejects_bad_arguments(self):
        frame = GrayFrame(np.zeros((10, 10), dtype=np.uint8))
        tmpl = Template(GrayFrame(np.zeros((3, 3), dtype=np.uint8)))
        with pytest.raises(ValueError):
            search(frame, tmpl, BBox(4, 4, 3, 3), radius=-1, alpha=10.0)
        with pytest.raises(ValueError):
            search(frame, tmpl, BBox(4, 4, 3, 3), radius=1, alpha=10.0, metric="ssd")
        with pytest.raises(DimensionError):
            search(frame, tmpl, BBox(4, 4, 2, 3), radius=1, alpha=10.0)

    def test_score_map_rejects_offsets_outside_radius(self):
        frame = GrayFrame(np.zeros((8, 8), dtype=np.uint8))
        tmpl = Template(GrayFrame(np.zeros((2, 2), dtype=np.uint8)))
        smap = search(frame, tmpl, BBox(3, 3, 2, 2), radius=2, alpha=1.0)
        with pytest.raises(IndexError):
            smap.score_at(3, 0)

    def test_scores_are_read_only(self):
        frame = GrayFrame(np.zeros((8, 8), dtype=np.uint8))
        tmpl = Template(GrayFrame(np.zeros((2, 2), dtype=np.uint8)))
        smap = search(frame, tmpl, BBox(3, 3, 2, 2), radius=1, alpha=1.0)
        with pytest.raises(ValueError):
            smap.scores[0, 0] = 5.0
