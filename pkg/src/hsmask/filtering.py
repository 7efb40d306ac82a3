"""Intersection and exclusion filtering of segment proposals.

Keep-prompts retain proposals whose boxes sit inside a matching detection
box expanded by a pixel margin; exclude-prompts remove the pixels of
matching proposals from the working mask. The final region-of-interest mask
is the union of kept proposal masks minus every excluded proposal's pixels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import RasterMismatch
from .masks import BBox, BinaryMask, mask_difference, union_all
from .proposals import Detection, PipelineConfig, ProposalDocument, SegmentProposal


@dataclass(frozen=True)
class MatchRule:
    margin_c: int = 0

    def __post_init__(self):
        if self.margin_c < 0:
            raise ValueError("margin_c must be >= 0")


@dataclass(frozen=True)
class MatchRecord:
    phrase: str
    detection_index: int


@dataclass
class FilterReport:
    """Audit trail: how every proposal id was classified.

    kept_ids, excluded_ids and unmatched_ids partition the input ids;
    ``matches`` records the detection that decided each non-unmatched id.
    """

    kept_ids: set[int] = field(default_factory=set)
    excluded_ids: set[int] = field(default_factory=set)
    unmatched_ids: set[int] = field(default_factory=set)
    matches: dict[int, MatchRecord] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kept_ids": sorted(self.kept_ids),
            "excluded_ids": sorted(self.excluded_ids),
            "unmatched_ids": sorted(self.unmatched_ids),
            "matches": [
                {"id": pid, "phrase": rec.phrase,
                 "detection_index": rec.detection_index}
                for pid, rec in sorted(self.matches.items())
            ],
        }


def boxes_match(proposal_box: BBox, detection_box: BBox, rule: MatchRule) -> bool:
    """True iff the proposal box lies inside the detection box expanded by
    margin_c on every side (all four comparisons closed)."""
    c = rule.margin_c
    return (proposal_box.x0 >= detection_box.x0 - c
            and proposal_box.y0 >= detection_box.y0 - c
            and proposal_box.x1 <= detection_box.x1 + c
            and proposal_box.y1 <= detection_box.y1 + c)


def _check_raster(proposals: list[SegmentProposal], width: int, height: int):
    for proposal in proposals:
        if (proposal.mask.width, proposal.mask.height) != (width, height):
            raise RasterMismatch(
                f"proposal {proposal.id} mask is "
                f"{proposal.mask.width}x{proposal.mask.height}, raster is "
                f"{width}x{height}")


def _scan_order(detections: list[Detection]) -> list[int]:
    # Descending confidence, ties broken by original list position.
    return sorted(range(len(detections)), key=lambda i: (-detections[i].confidence, i))


def _first_match(proposal: SegmentProposal, detections: list[Detection],
                 order: list[int], rule: MatchRule) -> int | None:
    for index in order:
        if boxes_match(proposal.bbox, detections[index].bbox, rule):
            return index
    return None


def intersection_filter(proposals: list[SegmentProposal],
                        keep_detections: list[Detection],
                        rule: MatchRule,
                        width: int | None = None, height: int | None = None,
                        ) -> tuple[list[SegmentProposal], FilterReport]:
    """Keep exactly the proposals whose box matches at least one detection."""
    if width is not None and height is not None:
        _check_raster(proposals, width, height)
    order = _scan_order(keep_detections)
    kept: list[SegmentProposal] = []
    report = FilterReport()
    for proposal in proposals:
        index = _first_match(proposal, keep_detections, order, rule)
        if index is None:
            report.unmatched_ids.add(proposal.id)
        else:
            kept.append(proposal)
            report.kept_ids.add(proposal.id)
            report.matches[proposal.id] = MatchRecord(
                phrase=keep_detections[index].phrase, detection_index=index)
    return kept, report


def exclusion_filter(current_mask: BinaryMask,
                     proposals: list[SegmentProposal],
                     exclude_detections: list[Detection],
                     rule: MatchRule) -> tuple[BinaryMask, FilterReport]:
    """Remove the pixels of matching proposals from the working mask.

    The removal is a set difference, which coincides with XOR whenever the
    excluded pixels are a subset of the working mask, and stays well defined
    when they are not. Repeatable across multiple prompt types.
    """
    width, height = current_mask.width, current_mask.height
    _check_raster(proposals, width, height)
    order = _scan_order(exclude_detections)
    report = FilterReport()
    matched: list[SegmentProposal] = []
    for proposal in proposals:
        index = _first_match(proposal, exclude_detections, order, rule)
        if index is None:
            report.unmatched_ids.add(proposal.id)
        else:
            matched.append(proposal)
            report.excluded_ids.add(proposal.id)
            report.matches[proposal.id] = MatchRecord(
                phrase=exclude_detections[index].phrase, detection_index=index)
    if not matched:
        return current_mask, report
    removal = union_all((p.mask for p in matched), width, height)
    return mask_difference(current_mask, removal), report


def _normalize(text: str) -> str:
    return text.strip().casefold()


def detections_for_prompt(detections: list[Detection], prompt_text: str) -> list[int]:
    """Indices of detections attributed to a prompt (exact phrase match,
    case/whitespace-insensitive)."""
    wanted = _normalize(prompt_text)
    return [i for i, d in enumerate(detections) if _normalize(d.phrase) == wanted]


def compose_final_mask(doc: ProposalDocument, config: PipelineConfig
                       ) -> tuple[BinaryMask, FilterReport]:
    """Run every keep-prompt, then every exclude-prompt, in config order.

    With no keep-prompts the working mask starts from the union of all
    proposals. Exclusion takes precedence: a proposal matching both a keep-
    and an exclude-prompt ends up excluded and its pixels removed.
    """
    width, height = doc.width, doc.height
    _check_raster(doc.proposals, width, height)
    rule = MatchRule(config.margin_c)
    report = FilterReport()

    keep_prompts = config.keep_prompts()
    if keep_prompts:
        keep_indices = sorted({i for p in keep_prompts
                               for i in detections_for_prompt(doc.detections, p.text)})
        keep_detections = [doc.detections[i] for i in keep_indices]
        kept, keep_report = intersection_filter(doc.proposals, keep_detections, rule)
        report.kept_ids = set(keep_report.kept_ids)
        report.unmatched_ids = set(keep_report.unmatched_ids)
        for pid, record in keep_report.matches.items():
            report.matches[pid] = MatchRecord(
                phrase=record.phrase,
                detection_index=keep_indices[record.detection_index])
        current = union_all((p.mask for p in kept), width, height)
    else:
        report.kept_ids = {p.id for p in doc.proposals}
        current = union_all((p.mask for p in doc.proposals), width, height)

    for prompt in config.exclude_prompts():
        indices = detections_for_prompt(doc.detections, prompt.text)
        exclude_detections = [doc.detections[i] for i in indices]
        current, step = exclusion_filter(current, doc.proposals,
                                         exclude_detections, rule)
        for pid in step.excluded_ids:
            report.kept_ids.discard(pid)
            report.unmatched_ids.discard(pid)
            if pid not in report.excluded_ids:
                report.excluded_ids.add(pid)
                record = step.matches[pid]
                report.matches[pid] = MatchRecord(
                    phrase=record.phrase,
                    detection_index=indices[record.detection_index])
    return current, report
