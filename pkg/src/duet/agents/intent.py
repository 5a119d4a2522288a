"""Turning raw action records into intent signals.

The window under analysis is everything since the last plan commit: recent
manipulations carry the freshest intent, and older ones are already baked
into the committed plan.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ..schema import ActionRecord

SIGNAL_KINDS = ("preference_set", "reorder", "favorite", "budget_change", "confirm", "navigate_pattern")

# Value-bearing user actions fold into one preference per (page, valueKey).
VALUE_KINDS = frozenset({"select", "input", "slide", "pick_date"})


@dataclass(frozen=True)
class IntentSignal:
    kind: str
    evidence: Tuple[int, ...]   # seq numbers inside the analyzed window
    inference: str
    confidence: str             # "low" | "high"


def window_since_last_task_commit(history: Sequence[ActionRecord]) -> List[ActionRecord]:
    cut = 0
    for record in history:
        if record.kind == "agent_commit_task":
            cut = record.seq
    return [r for r in history if r.seq > cut]


def latest_values(window: Iterable[ActionRecord]) -> Dict[Tuple[Optional[str], str], ActionRecord]:
    """Last value-bearing record per (pageStateId, valueKey), window order."""
    out: Dict[Tuple[Optional[str], str], ActionRecord] = {}
    for record in window:
        if record.kind not in VALUE_KINDS:
            continue
        value_key = None
        if record.target is not None and record.target.valueKey:
            value_key = record.target.valueKey
        elif "valueKey" in record.payload:
            value_key = record.payload["valueKey"]
        if value_key is None:
            continue
        psid = record.target.pageStateId if record.target else None
        out[(psid, value_key)] = record
    return out


def infer_signals(window: Sequence[ActionRecord]) -> List[IntentSignal]:
    signals: List[IntentSignal] = []

    for (psid, value_key), record in sorted(latest_values(window).items(),
                                            key=lambda kv: kv[1].seq):
        value = record.payload.get("value")
        if record.kind == "slide":
            signals.append(IntentSignal(
                kind="budget_change", evidence=(record.seq,),
                inference=f"sets {value_key} to {value}", confidence="high"))
        else:
            signals.append(IntentSignal(
                kind="preference_set", evidence=(record.seq,),
                inference=f"prefers {value} for {value_key}", confidence="high"))

    reorders = [r for r in window if r.kind == "reorder"]
    if reorders:
        last = reorders[-1]
        signals.append(IntentSignal(
            kind="reorder", evidence=tuple(r.seq for r in reorders),
            inference=f"wants step order {last.payload.get('newOrder')}", confidence="high"))

    for record in window:
        if record.kind == "favorite":
            signals.append(IntentSignal(
                kind="favorite", evidence=(record.seq,),
                inference=f"favorited {record.payload.get('itemId')}", confidence="high"))
        elif record.kind == "confirm":
            what = record.payload.get("itemId") or (record.target.pageStateId if record.target else "")
            signals.append(IntentSignal(
                kind="confirm", evidence=(record.seq,),
                inference=f"confirmed {what}", confidence="high"))

    visits: Dict[str, List[int]] = {}
    for record in window:
        if record.kind == "navigate" and record.target and record.target.pageStateId:
            visits.setdefault(record.target.pageStateId, []).append(record.seq)
    for psid, seqs in sorted(visits.items()):
        if len(seqs) >= 2:
            signals.append(IntentSignal(
                kind="navigate_pattern", evidence=tuple(seqs),
                inference=f"keeps returning to {psid}", confidence="low"))

    return signals
