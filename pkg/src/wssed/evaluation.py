"""Event-based precision/recall/F1 with onset and offset collars.

A predicted event matches a reference event of the same class when

* ``|onset_pred - onset_ref| <= t_collar`` and
* ``|offset_pred - offset_ref| <= max(t_collar, offset_ratio * ref_duration)``.

Matching is one-to-one. Scores are accumulated over clips per class, then
averaged without class weights; the short/long bucket averages and their
absolute difference (the gap) quantify duration bias.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

from .core import ClassMap, EventList, InvalidInputError

SHORT, LONG = "short", "long"

DEFAULT_BUCKETS = {
    "Alarm_bell_ringing": SHORT,
    "Cat": SHORT,
    "Dishes": SHORT,
    "Dog": SHORT,
    "Speech": SHORT,
    "Blender": LONG,
    "Electric_shaver_toothbrush": LONG,
    "Frying": LONG,
    "Running_water": LONG,
    "Vacuum_cleaner": LONG,
}


@dataclass(frozen=True)
class EvalParams:
    t_collar: float = 0.200
    offset_ratio: float = 0.20
    buckets: Optional[Mapping[str, str]] = None
    group_by: str = "class"
    clip_split_seconds: float = 2.0

    def __post_init__(self):
        if not self.t_collar > 0:
            raise InvalidInputError(f"t_collar must be positive, got {self.t_collar}")
        if not 0.0 < self.offset_ratio <= 1.0:
            raise InvalidInputError(f"offset_ratio must lie in (0, 1], got {self.offset_ratio}")
        if self.group_by not in ("class", "clip"):
            raise InvalidInputError(f"group_by must be 'class' or 'clip', got {self.group_by!r}")
        if self.buckets is not None:
            bad = {v for v in self.buckets.values() if v not in (SHORT, LONG)}
            if bad:
                raise InvalidInputError(f"bucket names must be 'short' or 'long', got {sorted(bad)}")

    def offset_tolerance(self, ref) -> float:
        return max(self.t_collar, self.offset_ratio * (ref.offset - ref.onset))


@dataclass
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __iadd__(self, other: "ClassCounts") -> "ClassCounts":
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        return self

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @property
    def empty(self) -> bool:
        return self.tp == self.fp == self.fn == 0


def _compatible(ref, pred, params: EvalParams) -> bool:
    return (
        abs(pred.onset - ref.onset) <= params.t_collar
        and abs(pred.offset - ref.offset) <= params.offset_tolerance(ref)
    )


def match_events(ref: EventList, pred: EventList, params: EvalParams = EvalParams()) -> Dict[str, ClassCounts]:
    """Greedy one-to-one matching per class.

    References are visited in onset order; each takes the earliest unmatched
    compatible prediction. Same-class events within a list are disjoint, which
    makes this greedy choice a maximum matching.
    """
    counts: Dict[str, ClassCounts] = {}
    for label in sorted(ref.labels() | pred.labels()):
        refs = ref.for_label(label)
        preds = pred.for_label(label)
        used = [False] * len(preds)
        tp = 0
        for r in refs:
            for k, p in enumerate(preds):
                if not used[k] and _compatible(r, p, params):
                    used[k] = True
                    tp += 1
                    break
        counts[label] = ClassCounts(tp, len(preds) - tp, len(refs) - tp)
    return counts


@dataclass
class EvalReport:
    per_class: Dict[str, ClassCounts]
    macro_f1: float
    short_f1: Optional[float] = None
    long_f1: Optional[float] = None
    gap: Optional[float] = None
    group_by: str = "class"
    n_clips: int = 0
    bucket_counts: Dict[str, Dict[str, ClassCounts]] = field(default_factory=dict)

    def to_dict(self, decimals: int = 4) -> dict:
        def r(x):
            return None if x is None else round(float(x), decimals)

        return {
            "n_clips": self.n_clips,
            "group_by": self.group_by,
            "macro_f1": r(self.macro_f1),
            "short_f1": r(self.short_f1),
            "long_f1": r(self.long_f1),
            "gap": r(self.gap),
            "per_class": {
                label: {
                    "tp": c.tp,
                    "fp": c.fp,
                    "fn": c.fn,
                    "precision": r(c.precision),
                    "recall": r(c.recall),
                    "f1": r(c.f1),
                }
                for label, c in sorted(self.per_class.items())
            },
        }

    def format_table(self) -> str:
        width = max([len("class")] + [len(k) for k in self.per_class])
        lines = [f"{'class':<{width}}  {'tp':>5} {'fp':>5} {'fn':>5}  {'P':>7} {'R':>7} {'F1':>7}"]
        for label, c in sorted(self.per_class.items()):
            lines.append(
                f"{label:<{width}}  {c.tp:>5} {c.fp:>5} {c.fn:>5}  "
                f"{100 * c.precision:>7.2f} {100 * c.recall:>7.2f} {100 * c.f1:>7.2f}"
            )
        lines.append("")

        def pct(x):
            return "    n/a" if x is None else f"{100 * x:>7.2f}"

        lines.append(f"{'macro F1':<{width}}  {pct(self.macro_f1)}")
        if self.short_f1 is not None or self.long_f1 is not None:
            lines.append(f"{'short F1':<{width}}  {pct(self.short_f1)}")
            lines.append(f"{'long F1':<{width}}  {pct(self.long_f1)}")
            lines.append(f"{'gap':<{width}}  {pct(self.gap)}")
        return "\n".join(lines)


def _macro(counts: Mapping[str, ClassCounts], labels=None) -> Optional[float]:
    scores = [c.f1 for k, c in counts.items() if not c.empty and (labels is None or k in labels)]
    if not scores:
        return None
    return sum(scores) / len(scores)


def _check_labels(corpus: Mapping[str, EventList], classes: ClassMap, what: str) -> None:
    for el in corpus.values():
        for label in el.labels():
            if label not in classes:
                raise InvalidInputError(f"{what} clip {el.clip_id!r}: unknown class label {label!r}")


def score(refs: Mapping[str, EventList], preds: Mapping[str, EventList],
          params: EvalParams = EvalParams(), classes: Optional[ClassMap] = None) -> EvalReport:
    """Score a corpus of predictions against references, keyed by clip id.

    Clips absent from ``preds`` contribute all their references as misses.
    Classes with no reference and no predicted events are left out of the
    averages. With ``params.buckets`` (or the default DCASE split, when it
    covers every scored class) the short and long averages and their gap are
    reported.
    """
    if classes is not None:
        _check_labels(refs, classes, "reference")
        _check_labels(preds, classes, "prediction")
    clip_ids = sorted(set(refs) | set(preds))
    empty = EventList("")
    totals: Dict[str, ClassCounts] = {}
    groups: Dict[str, Dict[str, ClassCounts]] = {SHORT: {}, LONG: {}}
    for cid in clip_ids:
        ref = refs.get(cid, empty)
        per_clip = match_events(ref, preds.get(cid, empty), params)
        group = _clip_group(ref, params) if params.group_by == "clip" else None
        for label, c in per_clip.items():
            totals.setdefault(label, ClassCounts())
            totals[label] += c
            if group is not None:
                groups[group].setdefault(label, ClassCounts())
                groups[group][label] += c

    macro = _macro(totals)
    report = EvalReport(totals, 0.0 if macro is None else macro, group_by=params.group_by,
                        n_clips=len(clip_ids))
    if params.group_by == "clip":
        report.short_f1 = _macro(groups[SHORT])
        report.long_f1 = _macro(groups[LONG])
        report.bucket_counts = groups
    else:
        buckets = _resolve_buckets(totals, params)
        if buckets is not None:
            report.short_f1 = _macro(totals, {k for k, v in buckets.items() if v == SHORT})
            report.long_f1 = _macro(totals, {k for k, v in buckets.items() if v == LONG})
    if report.short_f1 is not None and report.long_f1 is not None:
        report.gap = abs(report.long_f1 - report.short_f1)
    return report


def _clip_group(ref: EventList, params: EvalParams) -> Optional[str]:
    if not ref.events:
        return None
    mean_dur = sum(e.duration for e in ref.events) / len(ref.events)
    return LONG if mean_dur >= params.clip_split_seconds else SHORT


def _resolve_buckets(totals: Mapping[str, ClassCounts], params: EvalParams):
    scored = {k for k, c in totals.items() if not c.empty}
    if params.buckets is not None:
        missing = sorted(scored - set(params.buckets))
        if missing:
            raise InvalidInputError(f"classes without a bucket: {', '.join(missing)}")
        return dict(params.buckets)
    if scored <= set(DEFAULT_BUCKETS):
        return DEFAULT_BUCKETS
    return None
