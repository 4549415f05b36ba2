from __future__ import annotations

import json
import math

import numpy as np
import pytest

from gridsearch.dataset import (
    DatasetError,
    load_annotations,
    load_manifest,
    occupancy_heatmap,
    save_annotations,
    summarize,
)
from gridsearch.geometry import Rect
from helpers import (
    annotation_record,
    make_manifest,
    write_annotation_file,
    write_manifest_file,
)


class TestManifest:
    def test_load(self, tmp_path):
        manifest = make_manifest(3)
        path = write_manifest_file(tmp_path / "m.jsonl", manifest)
        loaded = load_manifest(path)
        assert set(loaded) == set(manifest)
        assert loaded["img0001"].width == 1280
        assert loaded["img0001"].uri == "synthetic://img0001"

    def test_duplicate_image_rejected(self, tmp_path):
        line = json.dumps(
            {"image_id": "a", "width": 10, "height": 10, "uri": "u"}
        )
        path = tmp_path / "m.jsonl"
        path.write_text(line + "\n" + line + "\n")
        with pytest.raises(DatasetError, match="duplicate image"):
            load_manifest(str(path))

    def test_nonpositive_size_rejected(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(
            json.dumps({"image_id": "a", "width": 0, "height": 10, "uri": "u"})
            + "\n"
        )
        with pytest.raises(DatasetError, match="non-positive"):
            load_manifest(str(path))


class TestLoadAnnotations:
    def test_happy_path(self, tmp_path):
        records = [
            annotation_record(f"a{i}", f"img{i:04d}", Rect(0.1, 0.1, 0.3, 0.3))
            for i in range(3)
        ]
        path = write_annotation_file(tmp_path / "a.jsonl", records)
        dataset = load_annotations(path)
        assert len(dataset) == 3
        assert dataset.get("a1").image_id == "img0001"
        assert dataset.get("a0").box.as_tuple() == (0.1, 0.1, 0.3, 0.3)

    def test_area_cap_errors_and_names_record(self, tmp_path):
        records = [
            annotation_record("ok", "x", Rect(0.1, 0.1, 0.3, 0.3)),
            annotation_record("big", "x", Rect(0.0, 0.0, 1.0, 0.5)),
        ]
        path = write_annotation_file(tmp_path / "a.jsonl", records)
        with pytest.raises(DatasetError, match=r"a\.jsonl:3"):
            load_annotations(path)

    def test_area_grace_band_warns(self, tmp_path):
        # area 0.32: above the 30% cap but inside the rounding grace band
        records = [annotation_record("w", "x", Rect(0.0, 0.0, 0.8, 0.4))]
        path = write_annotation_file(tmp_path / "a.jsonl", records)
        with pytest.warns(UserWarning, match="32"):
            dataset = load_annotations(path)
        assert len(dataset) == 1

    def test_degenerate_box_rejected(self, tmp_path):
        rec = annotation_record("d", "x", Rect(0.1, 0.1, 0.3, 0.3))
        rec["x2"] = 0.1
        path = write_annotation_file(tmp_path / "a.jsonl", [rec])
        with pytest.raises(DatasetError, match="degenerate box"):
            load_annotations(path)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "a.jsonl"
        path.write_text(json.dumps(annotation_record("a", "x", Rect(0, 0, 0.1, 0.1))))
        with pytest.raises(DatasetError, match="header"):
            load_annotations(str(path))

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "a.jsonl"
        path.write_text('{"coords": "normalized"}\nnot json\n')
        with pytest.raises(DatasetError, match=r"a\.jsonl:2"):
            load_annotations(str(path))

    def test_duplicate_id_rejected(self, tmp_path):
        rec = annotation_record("dup", "x", Rect(0.1, 0.1, 0.3, 0.3))
        path = write_annotation_file(tmp_path / "a.jsonl", [rec, rec])
        with pytest.raises(DatasetError, match="duplicate annotation"):
            load_annotations(path)

    def test_empty_description_rejected(self, tmp_path):
        rec = annotation_record("e", "x", Rect(0.1, 0.1, 0.3, 0.3))
        rec["short"] = ""
        path = write_annotation_file(tmp_path / "a.jsonl", [rec])
        with pytest.raises(DatasetError, match="empty description"):
            load_annotations(path)

    def test_unknown_image_with_manifest(self, tmp_path):
        manifest = make_manifest(1)
        rec = annotation_record("a", "nope", Rect(0.1, 0.1, 0.3, 0.3))
        path = write_annotation_file(tmp_path / "a.jsonl", [rec])
        with pytest.raises(DatasetError, match="not in manifest"):
            load_annotations(path, manifest)

    def test_pixel_coordinates_normalized(self, tmp_path):
        manifest = make_manifest(1)  # 1280 x 720
        rec = {
            "id": "p",
            "image_id": "img0000",
            "short": "s text",
            "long": "l text",
            "x1": 128,
            "y1": 72,
            "x2": 256,
            "y2": 144,
            "skippable": False,
        }
        path = write_annotation_file(tmp_path / "a.jsonl", [rec], coords="pixel")
        dataset = load_annotations(path, manifest)
        assert dataset.get("p").box.as_tuple() == pytest.approx(
            (0.1, 0.1, 0.2, 0.2)
        )

    def test_pixel_without_manifest_rejected(self, tmp_path):
        rec = annotation_record("p", "img0000", Rect(0.1, 0.1, 0.2, 0.2))
        path = write_annotation_file(tmp_path / "a.jsonl", [rec], coords="pixel")
        with pytest.raises(DatasetError, match="manifest"):
            load_annotations(path)

    def test_annotator_id_optional(self, tmp_path):
        rec = annotation_record("a", "x", Rect(0.1, 0.1, 0.3, 0.3))
        rec["annotator_id"] = "ann7"
        path = write_annotation_file(tmp_path / "a.jsonl", [rec])
        dataset = load_annotations(path)
        assert dataset.get("a").annotator_id == "ann7"

    def test_round_trip(self, tmp_path):
        records = [
            annotation_record("a", "x", Rect(0.1, 0.1, 0.3, 0.3), skippable=True),
            annotation_record("b", "y", Rect(0.25, 0.5, 0.5, 0.75)),
        ]
        path = write_annotation_file(tmp_path / "a.jsonl", records)
        first = load_annotations(path)
        out = tmp_path / "b.jsonl"
        save_annotations(first, str(out))
        second = load_annotations(str(out))
        assert second.annotations == first.annotations


class TestSummarize:
    def test_singleton_area_percent(self, tmp_path):
        rec = annotation_record("a", "x", Rect(0.0, 0.0, 1.0, 0.19))
        path = write_annotation_file(tmp_path / "a.jsonl", [rec])
        summary = summarize(load_annotations(path))
        assert summary.overall.area_pct_mean == pytest.approx(19.0)
        assert summary.overall.area_pct_std == 0.0

    def test_char_count_mean(self, tmp_path):
        records = [
            annotation_record("a", "x", Rect(0.1, 0.1, 0.3, 0.3), short="0123456789"),
            annotation_record(
                "b", "y", Rect(0.1, 0.1, 0.3, 0.3), short="0123456789abcdef"
            ),
        ]
        path = write_annotation_file(tmp_path / "a.jsonl", records)
        summary = summarize(load_annotations(path))
        assert summary.overall.short_chars_mean == pytest.approx(13.0)
        assert summary.overall.short_chars_std == pytest.approx(3.0)

    def test_subset_split(self, tmp_path):
        records = [
            annotation_record("a", "x", Rect(0.1, 0.1, 0.3, 0.3), skippable=True),
            annotation_record("b", "y", Rect(0.1, 0.1, 0.3, 0.3), skippable=True),
            annotation_record("c", "z", Rect(0.1, 0.1, 0.3, 0.3), skippable=False),
        ]
        path = write_annotation_file(tmp_path / "a.jsonl", records)
        summary = summarize(load_annotations(path))
        assert summary.total == 3
        assert summary.skippable.count == 2
        assert summary.non_skippable.count == 1
        assert set(summary.heatmaps) == {"skippable", "non_skippable", "overall"}

    def test_empty_subset_is_nan_not_crash(self, tmp_path):
        records = [annotation_record("a", "x", Rect(0.1, 0.1, 0.3, 0.3))]
        path = write_annotation_file(tmp_path / "a.jsonl", [records[0]])
        summary = summarize(load_annotations(path))
        assert summary.skippable.count == 0
        assert math.isnan(summary.skippable.area_pct_mean)


class TestHeatmap:
    def _ann(self, box: Rect):
        from gridsearch.dataset import Annotation

        return Annotation(
            id="h", image_id="x", short="s", long="l", box=box, skippable=False
        )

    def test_full_frame_box_fills_every_bin(self):
        heat = occupancy_heatmap([self._ann(Rect(0, 0, 1, 1))])
        assert heat.shape == (36, 64)
        assert np.allclose(heat, 1.0)

    def test_sum_equals_area_times_bins(self):
        box = Rect(0.13, 0.21, 0.57, 0.63)
        heat = occupancy_heatmap([self._ann(box)])
        assert heat.sum() == pytest.approx(box.area * 64 * 36, rel=1e-12)

    def test_aligned_box_hits_exact_bins(self):
        # nx=4, ny=4: the box covers exactly the top-left quadrant bins.
        heat = occupancy_heatmap([self._ann(Rect(0, 0, 0.5, 0.5))], nx=4, ny=4)
        expected = np.zeros((4, 4))
        expected[:2, :2] = 1.0
        assert np.allclose(heat, expected)

    def test_fractional_coverage(self):
        heat = occupancy_heatmap([self._ann(Rect(0.0, 0.0, 0.25, 0.5))], nx=2, ny=2)
        assert heat[0, 0] == pytest.approx(0.5)
        assert heat[0, 1] == 0.0
        assert heat[1, 0] == 0.0
