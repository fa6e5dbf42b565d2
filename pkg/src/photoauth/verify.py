"""Photo verification: pick the address-bar text and compare domains.

Input is the analysis of one photo: OCR text boxes plus predicted
address-bar boxes. The text whose box is sufficiently covered by the
predicted bar is treated as the URL; its hostname must match one of the
server's accepted names.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .domain import DomainError, DomainName, domains_equal, extract_hostname
from .geometry import BoundingBox, Resolution, area, cover_rate, iou

RETAKE_MULTIPLE_ADDRBARS = "multiple-addrbars"
RETAKE_UNREADABLE = "unreadable"


@dataclass(frozen=True)
class TextRegion:
    """One OCR result: where the text sits and what it reads as."""

    box: BoundingBox
    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("text region must carry non-empty text")


@dataclass(frozen=True)
class AddressBarPrediction:
    """One detector result with its confidence score."""

    box: BoundingBox
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class PhotoAnalysis:
    """Everything extracted from one photo, in photo pixel coordinates."""

    resolution: Resolution
    texts: tuple[TextRegion, ...]
    addrbars: tuple[AddressBarPrediction, ...]

    def __post_init__(self):
        bounds = self.resolution.bounds()
        for region in self.texts:
            if not bounds.contains(region.box):
                raise ValueError(f"text box outside {self.resolution}: {region.box}")
        for pred in self.addrbars:
            if not bounds.contains(pred.box):
                raise ValueError(f"address-bar box outside {self.resolution}: {pred.box}")


@dataclass(frozen=True)
class VerifyConfig:
    cr_threshold: float = 0.8
    confidence_floor: float = 0.5
    max_addrbars: int = 1

    def __post_init__(self):
        if not 0.0 < self.cr_threshold <= 1.0:
            raise ValueError(f"cr_threshold must be in (0, 1], got {self.cr_threshold}")
        if not 0.0 <= self.confidence_floor <= 1.0:
            raise ValueError(f"confidence_floor must be in [0, 1], got {self.confidence_floor}")
        if self.max_addrbars < 1:
            raise ValueError("max_addrbars must be at least 1")


class ExtractionKind(Enum):
    DOMAIN = "domain"
    MULTIPLE_ADDRESS_BARS = "multiple-address-bars"
    NO_ADDRESS_BAR = "no-address-bar"
    NO_QUALIFYING_TEXT = "no-qualifying-text"


@dataclass(frozen=True)
class ExtractionOutcome:
    kind: ExtractionKind
    domain: DomainName | None = None
    cover_rate: float | None = None
    bar_count: int = 0


class VerdictKind(Enum):
    MATCH = "match"
    MISMATCH = "mismatch"
    RETAKE = "retake"


@dataclass(frozen=True)
class VerifyResult:
    kind: VerdictKind
    found: DomainName | None = None
    reason: str | None = None
    warn_phishing: bool = False


def extract_domain(analysis: PhotoAnalysis, cfg: VerifyConfig = VerifyConfig()) -> ExtractionOutcome:
    """Select the URL text in a photo and parse its hostname.

    Steps:
      1. Drop address-bar predictions below the confidence floor.
      2. More than `max_addrbars` remain: reject, the photo may contain
         an embedded fake bar.
      3. None remain: the bar was not found.
      4. Keep texts whose cover rate against the bar reaches the
         threshold; none qualifying means the URL text is not readable
         inside the detected bar.
      5. Take the highest cover rate; ties go to the larger text box,
         then to the leftmost-topmost one. Hostname parse failures are
         reported as no qualifying text.
    """
    bars = [p for p in analysis.addrbars if p.confidence >= cfg.confidence_floor]
    if len(bars) > cfg.max_addrbars:
        return ExtractionOutcome(ExtractionKind.MULTIPLE_ADDRESS_BARS, bar_count=len(bars))
    if not bars:
        return ExtractionOutcome(ExtractionKind.NO_ADDRESS_BAR, bar_count=0)
    bar = bars[0]

    candidates = []
    for region in analysis.texts:
        cr = cover_rate(region.box, bar.box)
        if cr >= cfg.cr_threshold:
            candidates.append((cr, region))
    if not candidates:
        return ExtractionOutcome(ExtractionKind.NO_QUALIFYING_TEXT, bar_count=1)

    candidates.sort(key=lambda c: (-c[0], -area(c[1].box), c[1].box.x, c[1].box.y))
    best_cr, best = candidates[0]
    try:
        name = extract_hostname(best.text)
    except DomainError:
        return ExtractionOutcome(ExtractionKind.NO_QUALIFYING_TEXT, bar_count=1)
    return ExtractionOutcome(ExtractionKind.DOMAIN, domain=name, cover_rate=best_cr, bar_count=1)


def verify_photo(
    analysis: PhotoAnalysis,
    accept_set: Iterable[DomainName],
    cfg: VerifyConfig = VerifyConfig(),
) -> VerifyResult:
    """Decide whether a photo shows one of the accepted domains.

    Multiple detected bars ask for a retake and flag possible phishing;
    an unreadable photo asks for a plain retake. A readable photo either
    matches or exposes the domain actually visited.
    """
    accepted = set(accept_set)
    outcome = extract_domain(analysis, cfg)
    if outcome.kind is ExtractionKind.MULTIPLE_ADDRESS_BARS:
        return VerifyResult(
            VerdictKind.RETAKE, reason=RETAKE_MULTIPLE_ADDRBARS, warn_phishing=True
        )
    if outcome.kind in (ExtractionKind.NO_ADDRESS_BAR, ExtractionKind.NO_QUALIFYING_TEXT):
        return VerifyResult(VerdictKind.RETAKE, reason=RETAKE_UNREADABLE)
    assert outcome.domain is not None
    if domains_equal(outcome.domain, accepted):
        return VerifyResult(VerdictKind.MATCH, found=outcome.domain)
    return VerifyResult(VerdictKind.MISMATCH, found=outcome.domain)


class DetectionLabel(Enum):
    TRUE_POSITIVE = "true-positive"
    FALSE_POSITIVE = "false-positive"


def score_detection(
    predicted: BoundingBox, truth: BoundingBox, iou_threshold: float = 0.5
) -> DetectionLabel:
    """Label a predicted address-bar box against ground truth by IoU."""
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    if iou(predicted, truth) >= iou_threshold:
        return DetectionLabel.TRUE_POSITIVE
    return DetectionLabel.FALSE_POSITIVE


# ---------------------------------------------------------------------------
# Wire format
# ---------------------------------------------------------------------------


def _box_fields(box: BoundingBox) -> dict:
    return {"x": box.x, "y": box.y, "w": box.width, "h": box.height}


def _box_from(obj: dict) -> BoundingBox:
    return BoundingBox(obj["x"], obj["y"], obj["w"], obj["h"])


def analysis_to_dict(analysis: PhotoAnalysis) -> dict:
    return {
        "resolution": {"w": analysis.resolution.width, "h": analysis.resolution.height},
        "texts": [{**_box_fields(t.box), "text": t.text} for t in analysis.texts],
        "addrbars": [
            {**_box_fields(p.box), "confidence": p.confidence} for p in analysis.addrbars
        ],
    }


def analysis_from_dict(obj: dict) -> PhotoAnalysis:
    try:
        resolution = Resolution(obj["resolution"]["w"], obj["resolution"]["h"])
        texts = tuple(TextRegion(_box_from(t), t["text"]) for t in obj["texts"])
        addrbars = tuple(
            AddressBarPrediction(_box_from(p), p["confidence"]) for p in obj["addrbars"]
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed photo analysis: {exc}") from exc
    return PhotoAnalysis(resolution=resolution, texts=texts, addrbars=addrbars)


def analysis_to_json(analysis: PhotoAnalysis) -> str:
    return json.dumps(analysis_to_dict(analysis), sort_keys=True, separators=(",", ":"))


def analysis_from_json(payload: str) -> PhotoAnalysis:
    try:
        obj = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed photo analysis: {exc}") from exc
    return analysis_from_dict(obj)
