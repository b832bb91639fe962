"""Preference-pair mining: Case-1 lane/progress trade-offs (with mirrors),
Case-2 progress-only contrasts, slot randomization, and pseudo-labeling.

Both candidates of every mined pair must be perfect on every sub-score not
deliberately contrasted; perfection is value >= 0.999 (binary rules emit
exact 1.0, the epsilon only absorbs float noise in continuous ones).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import DATASET_SCHEMA
from .metrics import MetricConfig, ScoringContext
from .scenes import (
    Scene,
    SubScores,
    Trajectory,
    subscores_from_json,
    subscores_to_json,
    trajectory_from_json,
    trajectory_to_json,
)
from .vocabulary import ScoredEntry, Vocabulary, score_vocabulary

PERFECTION_MIN = 0.999

CASES = ("case1", "case1_mirror", "case2")
SPLITS = ("train", "test")


@dataclass(frozen=True)
class MiningThresholds:
    tau_ep1: float = 0.88
    tau_ep2: float = 0.75
    delta_ep: float = 0.2

    def __post_init__(self):
        if not (0.0 < self.tau_ep2 <= self.tau_ep1 <= 1.0):
            raise ValueError("require 0 < tau_ep2 <= tau_ep1 <= 1")
        if not (0.0 < self.delta_ep < 1.0):
            raise ValueError("require 0 < delta_ep < 1")


@dataclass(frozen=True)
class CandidateRef:
    kind: str  # human | vocabulary
    trajectory: Trajectory
    sub_scores: SubScores


@dataclass(frozen=True)
class PreferencePair:
    pair_id: str
    scene_id: str
    case: str  # case1 | case1_mirror | case2
    slot_a: CandidateRef
    slot_b: CandidateRef
    human_slot: str  # A | B
    label: str  # A | B | discarded | unlabeled
    label_source: Optional[str]  # expert | pseudo_case1 | llm_annotator
    rng_seed: int

    def __post_init__(self):
        if self.case not in CASES:
            raise ValueError(f"unknown case {self.case!r}")
        kinds = {self.slot_a.kind, self.slot_b.kind}
        if kinds != {"human", "vocabulary"}:
            raise ValueError("exactly one slot must hold the human trajectory")
        if self.label in ("A", "B") and self.label_source is None:
            raise ValueError("labeled pairs must carry a label_source")
        if self.label not in ("A", "B") and self.label_source is not None:
            raise ValueError("unlabeled pairs must not carry a label_source")

    def human_candidate(self) -> CandidateRef:
        return self.slot_a if self.human_slot == "A" else self.slot_b

    def slot(self, letter: str) -> CandidateRef:
        return self.slot_a if letter == "A" else self.slot_b

    def labeled_candidate(self) -> Optional[CandidateRef]:
        return self.slot(self.label) if self.label in ("A", "B") else None


@dataclass(frozen=True)
class ScoredScene:
    scene: Scene
    human: ScoredEntry
    vocab_entries: list[ScoredEntry]


def score_scene(scene: Scene, vocab: Vocabulary, config: MetricConfig) -> ScoredScene:
    ctx = ScoringContext(scene, config)
    human = ScoredEntry(scene.human_trajectory, ctx.score(scene.human_trajectory))
    return ScoredScene(scene=scene, human=human, vocab_entries=score_vocabulary(scene, vocab, config))


def is_perfect_except(sub: SubScores, skip: frozenset) -> bool:
    for name in SubScores.PENALTY_NAMES + SubScores.AVERAGED_NAMES:
        if name in skip:
            continue
        value = getattr(sub, name)
        if value is None or value < PERFECTION_MIN:
            return False
    return True


def _draft(scored: ScoredScene, case: str, vocab_index: int) -> PreferencePair:
    """Canonical draft: human in slot A, slots not yet randomized."""
    entry = scored.vocab_entries[vocab_index]
    return PreferencePair(
        pair_id=f"{scored.scene.scene_id}-{case}-v{vocab_index}",
        scene_id=scored.scene.scene_id,
        case=case,
        slot_a=CandidateRef("human", scored.human.trajectory, scored.human.scores),
        slot_b=CandidateRef("vocabulary", entry.trajectory, entry.scores),
        human_slot="A",
        label="unlabeled",
        label_source=None,
        rng_seed=0,
    )


def _pick_nearest(candidates: list[int], scored: ScoredScene, boundary: float,
                  max_pairs: int) -> list[int]:
    """Vocabulary indices closest to the EP boundary; index breaks ties."""
    ranked = sorted(candidates, key=lambda i: (abs(scored.vocab_entries[i].scores.ep - boundary), i))
    return ranked[:max_pairs]


def mine_case1(scored: ScoredScene, thresholds: MiningThresholds,
               max_pairs_per_scene: int = 1) -> list[PreferencePair]:
    """Table-2 rows 1-2: LK/EP contrast, plus the mirrored variant."""
    h = scored.human.scores
    if h is None or h.ep is None or h.lk is None or not is_perfect_except(h, frozenset({"lk", "ep"})):
        return []
    row1, mirror = [], []
    for i, entry in enumerate(scored.vocab_entries):
        v = entry.scores
        if v is None or v.ep is None or v.lk is None or not is_perfect_except(v, frozenset({"lk", "ep"})):
            continue
        if h.lk == 0.0 and h.ep >= thresholds.tau_ep1 and v.lk == 1.0 and v.ep <= h.ep - thresholds.delta_ep:
            row1.append(i)
        if h.lk == 1.0 and h.ep <= thresholds.tau_ep2 and v.lk == 0.0 and v.ep >= h.ep + thresholds.delta_ep:
            mirror.append(i)
    pairs = []
    for i in _pick_nearest(row1, scored, h.ep - thresholds.delta_ep, max_pairs_per_scene):
        pairs.append(_draft(scored, "case1", i))
    for i in _pick_nearest(mirror, scored, h.ep + thresholds.delta_ep, max_pairs_per_scene):
        pairs.append(_draft(scored, "case1_mirror", i))
    return pairs


def mine_case2(scored: ScoredScene, thresholds: MiningThresholds,
               max_pairs_per_scene: int = 1) -> list[PreferencePair]:
    """Table-2 row 3: EP-only contrast with everything else (LK included) perfect."""
    h = scored.human.scores
    if h is None or h.ep is None or not is_perfect_except(h, frozenset({"ep"})):
        return []
    if h.ep > thresholds.tau_ep2:
        return []
    found = []
    for i, entry in enumerate(scored.vocab_entries):
        v = entry.scores
        if v is None or v.ep is None or not is_perfect_except(v, frozenset({"ep"})):
            continue
        if v.ep >= h.ep + thresholds.delta_ep:
            found.append(i)
    return [_draft(scored, "case2", i)
            for i in _pick_nearest(found, scored, h.ep + thresholds.delta_ep, max_pairs_per_scene)]


def mine_scene(scored: ScoredScene, thresholds: MiningThresholds,
               max_pairs_per_scene: int = 1) -> list[PreferencePair]:
    return (mine_case1(scored, thresholds, max_pairs_per_scene)
            + mine_case2(scored, thresholds, max_pairs_per_scene))


def assign_slots(draft: PreferencePair, rng_seed: int) -> PreferencePair:
    """Seeded fair coin: heads keeps the human in slot A, tails swaps."""
    human_first = bool(np.random.default_rng(rng_seed).random() < 0.5)
    human = draft.slot(draft.human_slot)
    vocab = draft.slot("B" if draft.human_slot == "A" else "A")
    if human_first:
        return replace(draft, slot_a=human, slot_b=vocab, human_slot="A", rng_seed=rng_seed)
    return replace(draft, slot_a=vocab, slot_b=human, human_slot="B", rng_seed=rng_seed)


def pseudo_label_case1(pairs: list[PreferencePair]) -> list[PreferencePair]:
    """Label Case-1 pairs with the human slot (the paper's 91.7% skew rule)."""
    out = []
    for p in pairs:
        if p.case not in ("case1", "case1_mirror"):
            raise ValueError(f"pseudo labeling only applies to case1 pairs, got {p.case}")
        if p.label != "unlabeled":
            raise ValueError(f"pair {p.pair_id} already labeled")
        out.append(replace(p, label=p.human_slot, label_source="pseudo_case1"))
    return out


# --- dataset assembly -------------------------------------------------------


@dataclass(frozen=True)
class DatasetManifest:
    counts: dict  # split -> case -> count
    pairs: dict  # split -> list[PreferencePair]
    base_seed: int

    def total(self) -> int:
        return sum(sum(by_case.values()) for by_case in self.counts.values())


def build_dataset(scenes: list[Scene], vocab: Vocabulary, thresholds: MiningThresholds,
                  split_assignment: dict, config: MetricConfig,
                  base_seed: int = 0, max_pairs_per_scene: int = 1) -> DatasetManifest:
    """Mine every scene, randomize slots, pseudo-label Case-1 train pairs.

    split_assignment maps split name to a collection of scene ids; ids may
    not repeat across splits. Case-2 and all test pairs stay unlabeled for
    the annotation flow.
    """
    seen: dict[str, str] = {}
    for split, ids in split_assignment.items():
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        for sid in ids:
            if sid in seen:
                raise ValueError(f"scene {sid!r} assigned to both {seen[sid]} and {split}")
            seen[sid] = split

    pairs: dict[str, list[PreferencePair]] = {s: [] for s in SPLITS}
    pair_counter = 0
    for scene in scenes:
        split = seen.get(scene.scene_id)
        if split is None:
            continue
        scored = score_scene(scene, vocab, config)
        for draft in mine_scene(scored, thresholds, max_pairs_per_scene):
            pair = assign_slots(draft, base_seed + pair_counter)
            pair_counter += 1
            if split == "train" and pair.case in ("case1", "case1_mirror"):
                pair = pseudo_label_case1([pair])[0]
            pairs[split].append(pair)

    counts = {split: {case: sum(1 for p in ps if p.case == case) for case in CASES}
              for split, ps in pairs.items()}
    return DatasetManifest(counts=counts, pairs=pairs, base_seed=base_seed)


# --- serialization ----------------------------------------------------------


def candidate_to_json(c: CandidateRef) -> dict:
    return {
        "kind": c.kind,
        "trajectory": trajectory_to_json(c.trajectory),
        "sub_scores": subscores_to_json(c.sub_scores),
    }


def candidate_from_json(d: dict) -> CandidateRef:
    return CandidateRef(
        kind=str(d["kind"]),
        trajectory=trajectory_from_json(d["trajectory"]),
        sub_scores=subscores_from_json(d["sub_scores"]),
    )


def pair_to_json(p: PreferencePair) -> dict:
    return {
        "pair_id": p.pair_id,
        "scene_id": p.scene_id,
        "case": p.case,
        "slot_a": candidate_to_json(p.slot_a),
        "slot_b": candidate_to_json(p.slot_b),
        "human_slot": p.human_slot,
        "label": p.label,
        "label_source": p.label_source,
        "rng_seed": p.rng_seed,
    }


def pair_from_json(d: dict) -> PreferencePair:
    return PreferencePair(
        pair_id=str(d["pair_id"]),
        scene_id=str(d["scene_id"]),
        case=str(d["case"]),
        slot_a=candidate_from_json(d["slot_a"]),
        slot_b=candidate_from_json(d["slot_b"]),
        human_slot=str(d["human_slot"]),
        label=str(d["label"]),
        label_source=d.get("label_source"),
        rng_seed=int(d["rng_seed"]),
    )


def write_pairs(path, pairs: list[PreferencePair]) -> None:
    with open(path, "w") as f:
        for p in pairs:
            f.write(json.dumps(pair_to_json(p), sort_keys=True) + "\n")


def read_pairs(path) -> list[PreferencePair]:
    out = []
    with open(path) as f:
        for line in f:
            if line.strip():
                out.append(pair_from_json(json.loads(line)))
    return out


def write_manifest(path, manifest: DatasetManifest, pair_paths: dict) -> None:
    doc = {
        "schema": DATASET_SCHEMA,
        "counts": manifest.counts,
        "total": manifest.total(),
        "base_seed": manifest.base_seed,
        "pair_files": dict(pair_paths),
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
