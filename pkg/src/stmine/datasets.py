"""Corpus assembly: threshold filtering, test-set sampling, statistics.

Filtering keeps records whose scores clear sigma_min and tau_min (boundary
inclusive); per-language overrides key on the Indic side of the direction.
Test sampling draws a fixed-duration random sample per (source, target)
group with a pinned PRNG so the split is reproducible across platforms.

PRNG specification (not the platform default): records are shuffled with a
Fisher-Yates pass driven by splitmix64. The group seed is
fnv1a64("{seed}|{src}|{tgt}") where seed is the configured 64-bit sample
seed; splitmix64 advances state by 0x9E3779B97F4A7C15 and mixes with the
constants 0xBF58476D1CE4E5B9 (shift 30, 27) and 0x94D049BB133111EB
(shift 31); index draws use modulo reduction.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import ValidationError
from .records import Manifest, UtteranceRecord

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class LanguageThresholds:
    sigma_min: Optional[float] = None
    tau_min: Optional[float] = None


@dataclass(frozen=True)
class FilterPolicy:
    """Score thresholds; overrides take precedence over the defaults."""

    sigma_min: float = 0.6
    tau_min: float = 0.8
    per_language_overrides: dict[str, LanguageThresholds] = field(default_factory=dict)

    def __post_init__(self):
        for name, lo, hi in (("sigma_min", -1.0, 1.0), ("tau_min", 0.0, 1.0)):
            v = getattr(self, name)
            if not lo <= v <= hi:
                raise ValidationError(f"{name} must be in [{lo}, {hi}], got {v}")

    def thresholds_for(self, record: UtteranceRecord) -> tuple[float, float]:
        override = self.per_language_overrides.get(record.direction.indic)
        sigma_min = self.sigma_min
        tau_min = self.tau_min
        if override is not None:
            if override.sigma_min is not None:
                sigma_min = override.sigma_min
            if override.tau_min is not None:
                tau_min = override.tau_min
        return sigma_min, tau_min

    @classmethod
    def from_obj(cls, obj: dict) -> "FilterPolicy":
        overrides = {
            lang: LanguageThresholds(sigma_min=v.get("sigma_min"), tau_min=v.get("tau_min"))
            for lang, v in obj.get("per_language_overrides", {}).items()
        }
        return cls(
            sigma_min=obj.get("sigma_min", 0.6),
            tau_min=obj.get("tau_min", 0.8),
            per_language_overrides=overrides,
        )


@dataclass(frozen=True)
class SampleSpec:
    """Test-set sampling target: ~20 minutes per (source, target) group."""

    target_seconds: float = 1200.0
    seed: int = 0

    def __post_init__(self):
        if not self.target_seconds > 0:
            raise ValidationError("target_seconds must be > 0")


def filter_manifest(m: Manifest, policy: FilterPolicy) -> tuple[Manifest, Manifest]:
    """Split records into (kept, dropped) by boundary-inclusive thresholds.

    Records without scores pass unconditionally when their provenance is
    existing or synthetic (aggregated and generated data carry no mining
    scores); unscored mined records are invalid.
    """
    kept: list[UtteranceRecord] = []
    dropped: list[UtteranceRecord] = []
    for r in m.records:
        if r.scores is None:
            if r.provenance == "mined":
                raise ValidationError(f"mined record {r.span_key} lacks quality scores")
            kept.append(r)
            continue
        sigma_min, tau_min = policy.thresholds_for(r)
        if r.scores.sigma >= sigma_min and r.scores.tau >= tau_min:
            kept.append(r)
        else:
            dropped.append(r)
    return (
        Manifest(split=m.split, records=tuple(kept)),
        Manifest(split=m.split, records=tuple(dropped)),
    )


def _fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & _MASK64
    return h


class _SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def _shuffled(indices: list[int], seed: int) -> list[int]:
    rng = _SplitMix64(seed)
    out = list(indices)
    for i in range(len(out) - 1, 0, -1):
        j = rng.next() % (i + 1)
        out[i], out[j] = out[j], out[i]
    return out


def sample_test_set(m: Manifest, spec: SampleSpec) -> tuple[Manifest, Manifest]:
    """Deterministic per-group test sampling.

    Per (source, target) group, records are shuffled (see module docstring
    for the PRNG) and taken until the cumulative duration reaches
    target_seconds; the record that crosses the target is included. Groups
    too short to reach the target go to the test split entirely, with a
    warning. Test records keep shuffled order grouped by sorted direction;
    train records keep manifest order.
    """
    group_indices: dict[tuple[str, str], list[int]] = {}
    for idx, r in enumerate(m.records):
        group_indices.setdefault((r.direction.source, r.direction.target), []).append(idx)

    test_indices: list[int] = []
    chosen: set[int] = set()
    for (src, tgt) in sorted(group_indices):
        indices = group_indices[(src, tgt)]
        group_seed = _fnv1a64(f"{spec.seed}|{src}|{tgt}".encode("utf-8"))
        order = _shuffled(indices, group_seed)
        cumulative = 0.0
        taken: list[int] = []
        for idx in order:
            if cumulative >= spec.target_seconds:
                break
            taken.append(idx)
            cumulative += m.records[idx].duration_s
        if cumulative < spec.target_seconds:
            logger.warning(
                "group %s->%s has only %.3f s (< target %.3f s); entire group sampled into test",
                src, tgt, cumulative, spec.target_seconds,
            )
        elif len(taken) == len(indices):
            logger.warning("group %s->%s fully consumed by test sampling; no train records left", src, tgt)
        test_indices.extend(taken)
        chosen.update(taken)

    test = Manifest(split="test", records=tuple(m.records[i] for i in test_indices))
    train = Manifest(split="train", records=tuple(r for i, r in enumerate(m.records) if i not in chosen))
    return test, train


_STATS_PROVENANCES = ("existing", "mined", "synthetic")


@dataclass(frozen=True)
class StatsRow:
    lang: str
    direction: str
    split: str
    seconds: dict[str, float]  # provenance -> seconds
    utterances: dict[str, int]

    @property
    def total_seconds(self) -> float:
        return sum(self.seconds.values())

    @property
    def total_utterances(self) -> int:
        return sum(self.utterances.values())


@dataclass(frozen=True)
class StatsReport:
    rows: tuple[StatsRow, ...]

    @property
    def total_seconds(self) -> float:
        return sum(r.total_seconds for r in self.rows)

    @property
    def total_utterances(self) -> int:
        return sum(r.total_utterances for r in self.rows)

    def header(self) -> list[str]:
        cols = ["lang", "direction", "split"]
        for p in _STATS_PROVENANCES:
            cols += [f"{p}_hours", f"{p}_uttr"]
        cols += ["total_hours", "total_uttr"]
        return cols

    def _cells(self, row: StatsRow) -> list[str]:
        cells = [row.lang, row.direction, row.split]
        for p in _STATS_PROVENANCES:
            cells += [_hours(row.seconds.get(p, 0.0)), str(row.utterances.get(p, 0))]
        cells += [_hours(row.total_seconds), str(row.total_utterances)]
        return cells

    def _total_cells(self) -> list[str]:
        cells = ["total", "", ""]
        for p in _STATS_PROVENANCES:
            secs = sum(r.seconds.get(p, 0.0) for r in self.rows)
            utts = sum(r.utterances.get(p, 0) for r in self.rows)
            cells += [_hours(secs), str(utts)]
        cells += [_hours(self.total_seconds), str(self.total_utterances)]
        return cells

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(",".join(self.header()) + "\n")
        for row in self.rows:
            out.write(",".join(self._cells(row)) + "\n")
        out.write(",".join(self._total_cells()) + "\n")
        return out.getvalue()

    def to_text(self) -> str:
        table = [self.header()] + [self._cells(r) for r in self.rows] + [self._total_cells()]
        widths = [max(len(line[c]) for line in table) for c in range(len(table[0]))]
        lines = ["  ".join(cell.rjust(w) for cell, w in zip(line, widths)) for line in table]
        return "\n".join(lines) + "\n"


def _hours(seconds: float) -> str:
    # Banker's rounding at 2 decimals, matching the reported-hours convention.
    return f"{seconds / 3600.0:.2f}"


def stats_report(manifests: Sequence[Manifest]) -> StatsReport:
    """Hours and utterance counts per (language, direction, split, provenance)."""
    acc: dict[tuple[str, str, str], tuple[dict, dict]] = {}
    for m in manifests:
        for r in m.records:
            key = (r.direction.indic, r.direction.label, m.split)
            seconds, utterances = acc.setdefault(key, ({}, {}))
            seconds[r.provenance] = seconds.get(r.provenance, 0.0) + r.duration_s
            utterances[r.provenance] = utterances.get(r.provenance, 0) + 1
    rows = tuple(
        StatsRow(lang=k[0], direction=k[1], split=k[2], seconds=v[0], utterances=v[1])
        for k, v in sorted(acc.items())
    )
    return StatsReport(rows=rows)
