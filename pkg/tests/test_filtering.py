import numpy as np
import pytest

import oracles
from conftest import detection, proposal_from_bitmap, random_blob
from hsmask import filtering
from hsmask.errors import RasterMismatch
from hsmask.filtering import (
    FilterReport,
    MatchRule,
    boxes_match,
    compose_final_mask,
    exclusion_filter,
    intersection_filter,
)
from hsmask.masks import BBox, BinaryMask, mask_union
from hsmask.proposals import PipelineConfig, ProposalDocument, Prompt


def rect(width, height, x0, y0, x1, y1):
    bitmap = np.zeros((height, width), dtype=bool)
    bitmap[y0:y1, x0:x1] = True
    return bitmap


def make_config(prompts, margin):
    return PipelineConfig(band_triple=(0, 1, 2), prompts=tuple(prompts),
                          margin_c=margin)


KEEP = Prompt(text="pellet", role="keep", box_threshold=0.4, text_threshold=0.4)
EXCLUDE = Prompt(text="glare", role="exclude", box_threshold=0.3, text_threshold=0.3)


class TestBoxesMatch:
    def test_contained_with_margin(self):
        # detection (8,8,22,22) expanded by 5 -> (3,3,27,27) contains (10,10,20,20)
        assert boxes_match(BBox(10, 10, 20, 20), BBox(8, 8, 22, 22), MatchRule(5))

    def test_violating_one_side(self):
        # proposal x0 = 0 < 8 - 5 = 3
        assert not boxes_match(BBox(0, 0, 30, 30), BBox(8, 8, 22, 22), MatchRule(5))

    def test_equal_boxes_zero_margin(self):
        box = BBox(2, 3, 9, 7)
        assert boxes_match(box, box, MatchRule(0))

    def test_closed_boundary(self):
        assert boxes_match(BBox(3, 3, 27, 27), BBox(8, 8, 22, 22), MatchRule(5))
        assert not boxes_match(BBox(2, 3, 27, 27), BBox(8, 8, 22, 22), MatchRule(5))


class TestIntersectionFilter:
    def test_single_match(self):
        p = proposal_from_bitmap(7, rect(16, 16, 4, 4, 8, 8))
        kept, report = intersection_filter(
            [p], [detection((2, 2, 10, 10), "pellet")], MatchRule(0))
        assert [k.id for k in kept] == [7]
        assert report.kept_ids == {7} and not report.unmatched_ids

    def test_no_detections_all_unmatched(self):
        p = proposal_from_bitmap(7, rect(16, 16, 4, 4, 8, 8))
        kept, report = intersection_filter([p], [], MatchRule(10))
        assert kept == [] and report.unmatched_ids == {7}

    def test_matches_brute_force_all_pairs(self, rng):
        for _ in range(30):
            proposals = [proposal_from_bitmap(i, random_blob(rng, 24, 18))
                         for i in range(10)]
            detections = []
            for _ in range(3):
                blob = random_blob(rng, 24, 18)
                detections.append(detection(oracles.tight_bbox_scan(blob.tolist()),
                                            "pellet", float(rng.random())))
            kept, report = intersection_filter(proposals, detections, MatchRule(2))
            boxes = {p.id: (p.bbox.x0, p.bbox.y0, p.bbox.x1, p.bbox.y1)
                     for p in proposals}
            dboxes = [(d.bbox.x0, d.bbox.y0, d.bbox.x1, d.bbox.y1)
                      for d in detections]
            assert {k.id for k in kept} == oracles.kept_ids_brute(boxes, dboxes, 2)
            assert report.kept_ids | report.unmatched_ids == set(boxes)

    def test_match_record_prefers_highest_confidence(self):
        p = proposal_from_bitmap(1, rect(16, 16, 4, 4, 8, 8))
        detections = [detection((4, 4, 8, 8), "pellet", 0.5),
                      detection((0, 0, 16, 16), "pellet", 0.9)]
        _, report = intersection_filter([p], detections, MatchRule(0))
        assert report.matches[1].detection_index == 1

    def test_confidence_tie_breaks_by_list_order(self):
        p = proposal_from_bitmap(1, rect(16, 16, 4, 4, 8, 8))
        detections = [detection((4, 4, 8, 8), "pellet", 0.7),
                      detection((0, 0, 16, 16), "pellet", 0.7)]
        _, report = intersection_filter([p], detections, MatchRule(0))
        assert report.matches[1].detection_index == 0

    def test_raster_mismatch(self):
        p = proposal_from_bitmap(1, rect(16, 16, 4, 4, 8, 8))
        with pytest.raises(RasterMismatch):
            intersection_filter([p], [], MatchRule(0), width=8, height=8)


class TestExclusionFilter:
    def test_matched_pixels_removed(self):
        a = rect(12, 12, 0, 0, 6, 6)
        b = rect(12, 12, 4, 4, 10, 10)
        current = mask_union(BinaryMask.from_bitmap(a), BinaryMask.from_bitmap(b))
        pb = proposal_from_bitmap(2, b)
        out, report = exclusion_filter(
            current, [pb], [detection((2, 2, 11, 11), "glare")], MatchRule(0))
        assert report.excluded_ids == {2}
        assert np.array_equal(out.to_bitmap(), a & ~b)

    def test_no_match_identity(self):
        current = BinaryMask.from_bitmap(rect(12, 12, 0, 0, 6, 6))
        p = proposal_from_bitmap(2, rect(12, 12, 8, 8, 12, 12))
        out, report = exclusion_filter(current, [p], [], MatchRule(0))
        assert out == current and report.unmatched_ids == {2}

    def test_never_adds_pixels(self, rng):
        for _ in range(30):
            current = BinaryMask.from_bitmap(random_blob(rng, 20, 20))
            proposals = [proposal_from_bitmap(i, random_blob(rng, 20, 20))
                         for i in range(4)]
            dets = [detection((0, 0, 20, 20), "glare")]
            out, _ = exclusion_filter(current, proposals, dets, MatchRule(15))
            assert out.popcount <= current.popcount
            # removal also matches a pixel oracle
            removed = np.zeros((20, 20), dtype=bool)
            for p in proposals:
                removed |= p.mask.to_bitmap()
            expected = oracles.pixel_op(current.to_bitmap().tolist(),
                                        removed.tolist(), "difference")
            assert np.array_equal(out.to_bitmap(), expected)


def build_document(width, height, proposals, detections):
    return ProposalDocument(width=width, height=height, proposals=proposals,
                            detections=detections)


class TestComposeFinalMask:
    def test_keep_only_union_of_matches(self):
        p1 = proposal_from_bitmap(1, rect(20, 20, 0, 0, 5, 5))
        p2 = proposal_from_bitmap(2, rect(20, 20, 6, 6, 10, 10))
        p3 = proposal_from_bitmap(3, rect(20, 20, 12, 12, 18, 18))
        doc = build_document(20, 20, [p1, p2, p3], [
            detection((0, 0, 5, 5), "pellet"),
            detection((12, 12, 18, 18), "pellet"),
        ])
        final, report = compose_final_mask(doc, make_config([KEEP], 0))
        assert report.kept_ids == {1, 3}
        assert report.unmatched_ids == {2}
        assert final == mask_union(p1.mask, p3.mask)

    def test_exclude_only_starts_from_union_of_all(self):
        p1 = proposal_from_bitmap(1, rect(20, 20, 0, 0, 5, 5))
        p2 = proposal_from_bitmap(2, rect(20, 20, 6, 6, 10, 10))
        p3 = proposal_from_bitmap(3, rect(20, 20, 12, 12, 18, 18))
        doc = build_document(20, 20, [p1, p2, p3],
                             [detection((6, 6, 10, 10), "glare")])
        final, report = compose_final_mask(doc, make_config([EXCLUDE], 0))
        assert report.kept_ids == {1, 3}
        assert report.excluded_ids == {2}
        assert final == mask_union(p1.mask, p3.mask)

    def test_exclusion_precedence_and_overlap_removal(self):
        m1 = rect(20, 20, 0, 0, 8, 8)
        m2 = rect(20, 20, 4, 4, 12, 12)
        p1 = proposal_from_bitmap(1, m1)
        p2 = proposal_from_bitmap(2, m2)
        doc = build_document(20, 20, [p1, p2], [
            detection((0, 0, 8, 8), "pellet"),
            detection((4, 4, 12, 12), "pellet"),
            detection((4, 4, 12, 12), "glare"),
        ])
        final, report = compose_final_mask(doc, make_config([KEEP, EXCLUDE], 0))
        assert report.kept_ids == {1}
        assert report.excluded_ids == {2}
        # oracle: per-pixel evaluation of (m1 union m2-kept) minus m2
        expected = oracles.pixel_op(m1.tolist(), m2.tolist(), "difference")
        assert np.array_equal(final.to_bitmap(), expected)

    def test_report_partitions_ids(self, rng):
        for _ in range(20):
            scene = self._random_scene(rng, margin=3)
            doc, config = scene
            _, report = compose_final_mask(doc, config)
            ids = {p.id for p in doc.proposals}
            assert report.kept_ids | report.excluded_ids | report.unmatched_ids == ids
            assert not report.kept_ids & report.excluded_ids
            assert not report.kept_ids & report.unmatched_ids
            assert not report.excluded_ids & report.unmatched_ids

    def test_keep_detection_order_invariance(self, rng):
        doc, config = self._random_scene(rng, margin=5)
        final_a, report_a = compose_final_mask(doc, config)
        flipped = build_document(doc.width, doc.height, doc.proposals,
                                 list(reversed(doc.detections)))
        final_b, report_b = compose_final_mask(flipped, config)
        assert final_a == final_b
        assert report_a.kept_ids == report_b.kept_ids

    def test_margin_monotonicity(self, rng):
        for _ in range(10):
            doc, _ = self._random_scene(rng, margin=0)
            previous = None
            for margin in (0, 2, 5, 15):
                config = make_config([KEEP, EXCLUDE], margin)
                _, report = compose_final_mask(doc, config)
                kept_or_matched = report.kept_ids | report.excluded_ids
                if previous is not None:
                    assert previous <= kept_or_matched
                previous = kept_or_matched

    def test_matches_set_expression_oracle(self, rng):
        for _ in range(40):
            doc, config = self._random_scene(rng, margin=int(rng.choice([0, 2, 5])))
            final, report = compose_final_mask(doc, config)
            proposals = [(p.id, p.mask.to_bitmap().tolist(),
                          (p.bbox.x0, p.bbox.y0, p.bbox.x1, p.bbox.y1))
                         for p in doc.proposals]
            detections = [((d.bbox.x0, d.bbox.y0, d.bbox.x1, d.bbox.y1), d.phrase)
                          for d in doc.detections]
            prompts = [(p.text, p.role) for p in config.prompts]
            expected, kept, excluded = oracles.final_mask_brute(
                doc.width, doc.height, proposals, detections, prompts,
                config.margin_c)
            assert np.array_equal(final.to_bitmap(), expected)
            assert report.kept_ids == kept
            assert report.excluded_ids == excluded

    @staticmethod
    def _random_scene(rng, margin):
        width, height = int(rng.integers(8, 32)), int(rng.integers(8, 32))
        proposals = [proposal_from_bitmap(i, random_blob(rng, width, height))
                     for i in range(int(rng.integers(1, 8)))]
        detections = []
        for _ in range(int(rng.integers(0, 4))):
            blob = random_blob(rng, width, height)
            phrase = str(rng.choice(["pellet", "glare"]))
            detections.append(detection(oracles.tight_bbox_scan(blob.tolist()),
                                        phrase, float(rng.random())))
        doc = build_document(width, height, proposals, detections)
        roles = rng.choice(["keep_only", "exclude_only", "both"])
        prompts = {"keep_only": [KEEP], "exclude_only": [EXCLUDE],
                   "both": [KEEP, EXCLUDE]}[roles]
        return doc, make_config(prompts, margin)


class TestReportJson:
    def test_shape(self):
        report = FilterReport(kept_ids={2, 1}, excluded_ids={3},
                              unmatched_ids=set())
        payload = report.to_json()
        assert payload["kept_ids"] == [1, 2]
        assert payload["excluded_ids"] == [3]
        assert payload["matches"] == []
