"""CSV corpus loading, class histograms, and deterministic stratified splits.

Sentiment classes travel as the literal strings "-1", "0", "1" in files
(negative / neutral / positive) but are held internally as the contiguous
indices 0/1/2 so one-hot targets stay simple.  The mapping is confined to
this module's I/O boundary and to the export helpers.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass

__all__ = [
    "NEGATIVE",
    "NEUTRAL",
    "POSITIVE",
    "CLASS_NAMES",
    "CorpusError",
    "MissingColumn",
    "UnparsableLabel",
    "EmptyFile",
    "EmptyText",
    "DegenerateSplit",
    "LabeledExample",
    "LabeledCorpus",
    "SplitSpec",
    "external_label",
    "internal_label",
    "load_corpus",
    "deduplicate",
    "class_histogram",
    "stratified_indices",
    "stratified_split",
    "histogram_to_csv",
]

NEGATIVE, NEUTRAL, POSITIVE = 0, 1, 2
CLASS_NAMES = ("-1", "0", "1")

_EXTERNAL_TO_INTERNAL = {"-1": NEGATIVE, "0": NEUTRAL, "1": POSITIVE}


class CorpusError(Exception):
    """Base for corpus loading and splitting failures."""


class MissingColumn(CorpusError):
    def __init__(self, column: str, path: str):
        super().__init__(f"column {column!r} not found in header of {path}")
        self.column = column


class UnparsableLabel(CorpusError):
    def __init__(self, value: str, row: int, path: str):
        super().__init__(
            f"row {row}: label {value!r} is not one of -1, 0, 1 ({path})"
        )
        self.row = row
        self.value = value


class EmptyFile(CorpusError):
    def __init__(self, path: str):
        super().__init__(f"no data rows in {path}")


class EmptyText(CorpusError):
    def __init__(self, row: int, path: str):
        super().__init__(f"row {row}: text is empty after trimming ({path})")
        self.row = row


class DegenerateSplit(CorpusError):
    def __init__(self, label: int, partition: str):
        super().__init__(
            f"class {CLASS_NAMES[label]} would leave partition "
            f"{partition!r} empty despite a positive fraction"
        )


def external_label(label: int) -> str:
    """Internal index 0/1/2 -> file string -1/0/1."""
    return CLASS_NAMES[label]


def internal_label(value: str) -> int:
    """File string -1/0/1 -> internal index 0/1/2; KeyError if unknown."""
    return _EXTERNAL_TO_INTERNAL[value.strip()]


@dataclass(frozen=True)
class LabeledExample:
    text: str
    label: int  # internal index: 0 negative, 1 neutral, 2 positive

    def __post_init__(self):
        if self.label not in (NEGATIVE, NEUTRAL, POSITIVE):
            raise ValueError(f"label index out of range: {self.label}")
        if not self.text.strip():
            raise ValueError("example text is empty")


@dataclass(frozen=True)
class LabeledCorpus:
    examples: tuple[LabeledExample, ...]
    source_path: str

    def __len__(self) -> int:
        return len(self.examples)

    def labels(self) -> list[int]:
        return [ex.label for ex in self.examples]


@dataclass(frozen=True)
class SplitSpec:
    """Stratified split fractions; the remainder after train+val is test."""

    train_fraction: float = 0.8
    val_fraction: float = 0.1
    seed: int = 42

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0,1): {self.train_fraction}")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError(f"val_fraction must be in [0,1): {self.val_fraction}")
        if self.train_fraction + self.val_fraction >= 1.0:
            raise ValueError("train_fraction + val_fraction must leave room for test")

    @property
    def test_fraction(self) -> float:
        return 1.0 - self.train_fraction - self.val_fraction


def load_corpus(path, text_column: str = "text", label_column: str = "label") -> LabeledCorpus:
    """Load a labeled corpus from a headered, comma-separated UTF-8 file.

    Every data row must parse; a bad label or empty text aborts the load
    with the offending row number (1 = first data row).
    """
    path = str(path)
    examples: list[LabeledExample] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise EmptyFile(path)
        for column in (text_column, label_column):
            if column not in header:
                raise MissingColumn(column, path)
        for row_number, row in enumerate(reader, start=1):
            raw_label = row.get(label_column) or ""
            try:
                label = internal_label(raw_label)
            except KeyError:
                raise UnparsableLabel(raw_label, row_number, path) from None
            text = (row.get(text_column) or "").strip()
            if not text:
                raise EmptyText(row_number, path)
            examples.append(LabeledExample(text=text, label=label))
    if not examples:
        raise EmptyFile(path)
    return LabeledCorpus(tuple(examples), source_path=path)


def deduplicate(corpus: LabeledCorpus) -> LabeledCorpus:
    """Drop rows whose exact text string already appeared earlier."""
    seen: set[str] = set()
    kept = []
    for ex in corpus.examples:
        if ex.text in seen:
            continue
        seen.add(ex.text)
        kept.append(ex)
    return LabeledCorpus(tuple(kept), source_path=corpus.source_path)


def class_histogram(corpus) -> tuple[int, int, int]:
    """Counts per class in (negative, neutral, positive) order."""
    counts = [0, 0, 0]
    labels = corpus.labels() if isinstance(corpus, LabeledCorpus) else corpus
    for label in labels:
        counts[int(label)] += 1
    return tuple(counts)


def _allocate(n: int, fractions: tuple[float, float, float]) -> list[int]:
    """Largest-remainder allocation of n items to three partitions.

    Guarantees each count deviates from its exact share by less than one.
    """
    ideal = [f * n for f in fractions]
    counts = [int(x) for x in ideal]
    remainders = [x - c for x, c in zip(ideal, counts)]
    leftover = n - sum(counts)
    # hand leftover units to the largest remainders; ties go to the
    # earlier partition (train before val before test)
    order = sorted(range(3), key=lambda i: (-remainders[i], i))
    for i in range(leftover):  # leftover is at most 2
        counts[order[i]] += 1
    return counts


def stratified_indices(labels, spec: SplitSpec):
    """Split example indices per class into (train, val, test) index lists.

    Membership is decided by a seeded per-class shuffle; each returned
    list is then sorted so partitions preserve corpus order.  The same
    labels and spec always reproduce the same partitions.
    """
    fractions = (spec.train_fraction, spec.val_fraction, spec.test_fraction)
    names = ("train", "val", "test")
    rng = random.Random(spec.seed)
    parts: tuple[list[int], list[int], list[int]] = ([], [], [])
    for label in (NEGATIVE, NEUTRAL, POSITIVE):
        idx = [i for i, lab in enumerate(labels) if lab == label]
        if not idx:
            continue
        rng.shuffle(idx)
        counts = _allocate(len(idx), fractions)
        for part, count, frac in zip(range(3), counts, fractions):
            if frac > 0.0 and count == 0:
                raise DegenerateSplit(label, names[part])
        start = 0
        for part, count in enumerate(counts):
            parts[part].extend(idx[start : start + count])
            start += count
    return tuple(sorted(p) for p in parts)


def stratified_split(corpus: LabeledCorpus, spec: SplitSpec):
    """Partition a corpus into (train, val, test) LabeledCorpus values."""
    train_idx, val_idx, test_idx = stratified_indices(corpus.labels(), spec)

    def pick(indices):
        return LabeledCorpus(
            tuple(corpus.examples[i] for i in indices), corpus.source_path
        )

    return pick(train_idx), pick(val_idx), pick(test_idx)


def histogram_to_csv(histogram: tuple[int, int, int]) -> str:
    """Histogram export: header plus one row per class in -1,0,1 order."""
    lines = ["class,count"]
    for label, count in zip(CLASS_NAMES, histogram):
        lines.append(f"{label},{count}")
    return "\n".join(lines) + "\n"
