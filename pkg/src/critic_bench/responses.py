"""Structured judge-response parsing and the format/accuracy reward.

The well-formed shape is exactly one <think>...</think> block followed by
one decision line; docs/response_grammar.md holds the EBNF and the
recovery rules. Parsing is total: malformed text yields well_formed=False
plus whatever fields could be recovered (first think block, last decision
token anywhere in the text).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

# tags are case-sensitive tokens; the decision keyword and letter are not
_THINK_TEXT = r"(?:(?!</?think>).)*"
STRICT_RE = re.compile(
    rf"\A\s*<think>({_THINK_TEXT})</think>\s*(?i:decision)\s*:\s*([ABab])\s*\Z",
    re.DOTALL,
)
THINK_RE = re.compile(rf"<think>({_THINK_TEXT})</think>", re.DOTALL)
DECISION_RE = re.compile(r"(?i:decision)\s*:\s*([ABab])\b")


@dataclass(frozen=True)
class ParsedResponse:
    think_block: Optional[str]
    decision: Optional[str]  # A | B
    well_formed: bool

    def __post_init__(self):
        if self.decision not in (None, "A", "B"):
            raise ValueError(f"decision must be A or B, got {self.decision!r}")
        if self.well_formed and (self.think_block is None or self.decision is None):
            raise ValueError("well-formed responses carry both a think block and a decision")


def parse_response(text: str) -> ParsedResponse:
    m = STRICT_RE.match(text)
    if m and not DECISION_RE.search(m.group(1)):
        return ParsedResponse(think_block=m.group(1), decision=m.group(2).upper(),
                              well_formed=True)
    blocks = THINK_RE.findall(text)
    decisions = DECISION_RE.findall(text)
    return ParsedResponse(
        think_block=blocks[0] if blocks else None,
        decision=decisions[-1].upper() if decisions else None,
        well_formed=False,
    )


def render_response(parsed: ParsedResponse) -> str:
    """Canonical text form; parse_response inverts it exactly as long as the
    think text does not itself contain think tags or a decision token."""
    if not parsed.well_formed:
        raise ValueError("only well-formed responses have a canonical form")
    return f"<think>{parsed.think_block}</think>\nDecision: {parsed.decision}"


@dataclass(frozen=True)
class RewardWeights:
    w_format: float = 0.5
    w_accuracy: float = 0.5

    def __post_init__(self):
        if self.w_format < 0 or self.w_accuracy < 0:
            raise ValueError("reward weights must be nonnegative")


@dataclass(frozen=True)
class RewardBreakdown:
    format_reward: int  # 0 | 1
    accuracy_reward: int  # 0 | 1
    total: float

    def __post_init__(self):
        if self.format_reward not in (0, 1) or self.accuracy_reward not in (0, 1):
            raise ValueError("component rewards are binary")


def compute_reward(parsed: ParsedResponse, ground_truth_label: str,
                   weights: RewardWeights = RewardWeights()) -> RewardBreakdown:
    """Separable rewards: format for grammar adherence, accuracy for the
    recovered decision matching the label (granted even when format fails)."""
    if ground_truth_label not in ("A", "B"):
        raise ValueError(f"ground truth label must be A or B, got {ground_truth_label!r}")
    fmt = 1 if parsed.well_formed else 0
    acc = 1 if parsed.decision == ground_truth_label else 0
    return RewardBreakdown(
        format_reward=fmt,
        accuracy_reward=acc,
        total=fmt * weights.w_format + acc * weights.w_accuracy,
    )
