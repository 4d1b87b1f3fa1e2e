"""
Sampling-rate routing.

Recordings arrive at many rates; every clip is routed to the processing
case whose anchor rate (4, 8 or 48 kHz) is closest to its own. Each case
fixes the stage-1 and stage-2 feature rates, the Mel bin counts, the
stage-2 embedding tap, and whether the Wavegram branch is active.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum

from src.constants import CONV_BLOCK6_DIM, EMBEDDING1_DIM, EMBEDDING_LAYER_DIM


class CaseId(StrEnum):
    CASE_4K = "CASE_4K"
    CASE_8K = "CASE_8K"
    CASE_48K = "CASE_48K"


class StageTap(StrEnum):
    CONV_BLOCK6_GEM = "CONV_BLOCK6_GEM"
    EMBEDDING_LAYER = "EMBEDDING_LAYER"


TAP_DIMS: dict[StageTap, int] = {
    StageTap.CONV_BLOCK6_GEM: CONV_BLOCK6_DIM,
    StageTap.EMBEDDING_LAYER: EMBEDDING_LAYER_DIM,
}


@dataclass(frozen=True)
class CaseConfig:
    """Per-sampling-rate routing record."""

    case_id: CaseId
    anchor_rate: int
    stage1_rate: int
    stage1_mel_bins: int
    stage2_rate: int
    stage2_mel_bins: int
    stage2_tap: StageTap
    stage2_wavegram: bool

    @property
    def tap_dim(self) -> int:
        return TAP_DIMS[self.stage2_tap]

    @property
    def embedding_dims(self) -> tuple[int, int]:
        return EMBEDDING1_DIM, self.tap_dim


CASES: dict[CaseId, CaseConfig] = {
    CaseId.CASE_4K: CaseConfig(
        case_id=CaseId.CASE_4K,
        anchor_rate=4000,
        stage1_rate=4000,
        stage1_mel_bins=256,
        stage2_rate=8000,
        stage2_mel_bins=128,
        stage2_tap=StageTap.CONV_BLOCK6_GEM,
        stage2_wavegram=False,
    ),
    CaseId.CASE_8K: CaseConfig(
        case_id=CaseId.CASE_8K,
        anchor_rate=8000,
        stage1_rate=8000,
        stage1_mel_bins=128,
        stage2_rate=8000,
        stage2_mel_bins=128,
        stage2_tap=StageTap.EMBEDDING_LAYER,
        stage2_wavegram=False,
    ),
    CaseId.CASE_48K: CaseConfig(
        case_id=CaseId.CASE_48K,
        anchor_rate=48000,
        stage1_rate=48000,
        stage1_mel_bins=128,
        stage2_rate=32000,
        stage2_mel_bins=128,
        stage2_tap=StageTap.EMBEDDING_LAYER,
        stage2_wavegram=True,
    ),
}


def route(sample_rate: int) -> CaseConfig:
    """Return the case whose anchor is closest to ``sample_rate``; ties go to the higher anchor."""
    if sample_rate <= 0:
        raise ValueError(f"sample_rate must be positive, got {sample_rate}")
    best = min(CASES.values(), key=lambda case: (abs(case.anchor_rate - sample_rate), -case.anchor_rate))
    return best


def format_routes() -> str:
    """Render the routing table as fixed-width text (header plus one row per case)."""
    columns = (
        ("case", 10),
        ("anchor_hz", 11),
        ("stage1_hz", 11),
        ("stage1_mels", 13),
        ("stage2_hz", 11),
        ("stage2_mels", 13),
        ("tap", 17),
        ("wavegram", 0),
    )
    rows = [[name for name, _ in columns]]
    for case in CASES.values():
        rows.append(
            [
                case.case_id.value,
                str(case.anchor_rate),
                str(case.stage1_rate),
                str(case.stage1_mel_bins),
                str(case.stage2_rate),
                str(case.stage2_mel_bins),
                case.stage2_tap.value,
                "yes" if case.stage2_wavegram else "no",
            ]
        )
    widths = [width for _, width in columns]
    lines = ["".join(cell.ljust(width) for cell, width in zip(row, widths, strict=True)) for row in rows]
    return "\n".join(line.rstrip() for line in lines)
