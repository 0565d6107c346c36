"""Synthetic election generation, labelling and dataset files.

Datasets are JSON Lines, one election per line::

    {"n": 3, "m": 2, "utilities": [[...], [...], [...]], "label": 1, "label_kind": "rule:borda"}

``label`` is a 0-based candidate index or ``null``. Utility matrices for
real data come as CSV, one voter per row and one candidate per column.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import BallotKind, PreferenceProfile, WelfareKind, welfare_winner
from .rules import RuleKind, rule_winner

SOURCES = ("dirichlet", "spatial", "file")
SPATIAL_DIM = 3


class DatasetError(ValueError):
    pass


def gen_dirichlet(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Each voter's utilities drawn from the flat Dirichlet on the m-simplex."""
    if n < 1 or m < 1:
        raise ValueError("need at least one voter and one candidate")
    return rng.dirichlet(np.ones(m), size=n)


def gen_spatial(n: int, m: int, rng: np.random.Generator, dim: int = SPATIAL_DIM) -> np.ndarray:
    """Voters and candidates uniform in the unit cube; utility is 1 - distance."""
    if n < 1 or m < 1:
        raise ValueError("need at least one voter and one candidate")
    voters = rng.random((n, dim))
    cands = rng.random((m, dim))
    return 1.0 - np.linalg.norm(voters[:, None, :] - cands[None, :, :], axis=-1)


def parse_label(text: str | None) -> tuple[str, str] | None:
    """``rule:NAME`` / ``welfare:KIND`` / ``none`` -> (family, name) or None."""
    if text is None or text == "none":
        return None
    family, _, name = text.partition(":")
    if family == "rule":
        return family, RuleKind(name).value
    if family == "welfare":
        return family, WelfareKind(name).value
    raise ValueError(f"bad label {text!r}; use rule:NAME, welfare:KIND or none")


def compute_label(utilities, label: str | None) -> int | None:
    parsed = parse_label(label)
    if parsed is None:
        return None
    family, name = parsed
    if family == "rule":
        return rule_winner(name, utilities)
    return welfare_winner(utilities, name)


@dataclass(frozen=True)
class DatasetSpec:
    source: str = "dirichlet"
    n_range: tuple[int, int] = (3, 10)
    m_range: tuple[int, int] = (2, 5)
    count: int = 1000
    seed: int = 0
    label: str | None = None
    path: str | None = None

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        for lo, hi in (self.n_range, self.m_range):
            if not 1 <= lo <= hi:
                raise ValueError(f"empty or invalid range [{lo}, {hi}]")
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if self.source == "file" and not self.path:
            raise ValueError("file source needs a path")
        parse_label(self.label)


@dataclass
class LabeledElection:
    utilities: np.ndarray
    label: int | None = None
    label_kind: str | None = None

    def __post_init__(self):
        self.utilities = np.asarray(self.utilities, dtype=np.float64)

    @property
    def n(self) -> int:
        return self.utilities.shape[0]

    @property
    def m(self) -> int:
        return self.utilities.shape[1]

    def ballots(self, kind=BallotKind.CARDINAL) -> np.ndarray:
        return PreferenceProfile.from_utilities(self.utilities, kind).scores

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledElection):
            return NotImplemented
        return (
            self.label == other.label
            and self.label_kind == other.label_kind
            and self.utilities.shape == other.utilities.shape
            and np.array_equal(self.utilities, other.utilities)
        )


def generate(spec: DatasetSpec) -> list[np.ndarray]:
    """Utility matrices only; element ``k`` depends on ``(seed, k)`` alone."""
    pool = read_utility_csv(spec.path) if spec.source == "file" else None
    if pool is not None and (pool.shape[0] < spec.n_range[1] or pool.shape[1] < spec.m_range[1]):
        raise DatasetError(
            f"{spec.path}: matrix is {pool.shape[0]}x{pool.shape[1]}, "
            f"too small for n<={spec.n_range[1]}, m<={spec.m_range[1]}"
        )
    out = []
    for k in range(spec.count):
        rng = np.random.default_rng([spec.seed, k])
        n = int(rng.integers(spec.n_range[0], spec.n_range[1] + 1))
        m = int(rng.integers(spec.m_range[0], spec.m_range[1] + 1))
        if spec.source == "dirichlet":
            out.append(gen_dirichlet(n, m, rng))
        elif spec.source == "spatial":
            out.append(gen_spatial(n, m, rng))
        else:
            rows = rng.choice(pool.shape[0], size=n, replace=False)
            cols = rng.choice(pool.shape[1], size=m, replace=False)
            out.append(pool[np.ix_(rows, cols)].copy())
    return out


def label_dataset(spec: DatasetSpec) -> list[LabeledElection]:
    kind = None if parse_label(spec.label) is None else spec.label
    return [LabeledElection(u, compute_label(u, kind), kind) for u in generate(spec)]


def relabel(dataset: Iterable[LabeledElection], label: str) -> list[LabeledElection]:
    return [LabeledElection(e.utilities, compute_label(e.utilities, label), label) for e in dataset]


@dataclass(frozen=True)
class DeskSplits:
    """Shrunken train/validation/test layout; validation and test use more candidates than training."""

    train: DatasetSpec
    val: DatasetSpec
    test: DatasetSpec = field(default=None)


def desk_splits(source: str = "dirichlet", label: str | None = None, seed: int = 0, train_count: int = 20_000) -> DeskSplits:
    return DeskSplits(
        train=DatasetSpec(source, (3, 10), (2, 5), train_count, seed, label),
        val=DatasetSpec(source, (15, 15), (6, 6), 512, seed + 1_000_003, label),
        test=DatasetSpec(source, (20, 20), (8, 8), 512, seed + 2_000_003, label),
    )


# ------------------------------------------------------------------- files


def read_utility_csv(path) -> np.ndarray:
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                values = [float(c) for c in row]
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: non-numeric entry in row {row!r}") from None
            if not all(math.isfinite(v) for v in values):
                raise DatasetError(f"{path}:{lineno}: non-finite entry")
            if rows and len(values) != len(rows[0]):
                raise DatasetError(f"{path}:{lineno}: ragged row with {len(values)} columns, expected {len(rows[0])}")
            rows.append(values)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def write_utility_csv(utilities, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(utilities, dtype=np.float64):
            writer.writerow([repr(float(v)) for v in row])


def election_to_json(e: LabeledElection) -> str:
    record = {
        "n": e.n,
        "m": e.m,
        "utilities": [[float(v) for v in row] for row in e.utilities],
        "label": e.label,
        "label_kind": e.label_kind,
    }
    return json.dumps(record, separators=(",", ":"))


def write_jsonl(dataset: Iterable[LabeledElection], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for e in dataset:
            fh.write(election_to_json(e))
            fh.write("\n")
    return path


def _parse_record(record, where: str) -> LabeledElection:
    if not isinstance(record, dict):
        raise DatasetError(f"{where}: expected a JSON object")
    for key in ("n", "m", "utilities"):
        if key not in record:
            raise DatasetError(f"{where}: missing field {key!r}")
    n, m = record["n"], record["m"]
    try:
        u = np.array(record["utilities"], dtype=np.float64)
    except (TypeError, ValueError):
        raise DatasetError(f"{where}: utilities must be a rectangular numeric matrix") from None
    if u.ndim != 2 or u.shape != (n, m):
        raise DatasetError(f"{where}: utilities have shape {u.shape}, header says n={n}, m={m}")
    if not np.isfinite(u).all():
        raise DatasetError(f"{where}: non-finite utility")
    label = record.get("label")
    if label is not None and (not isinstance(label, int) or not 0 <= label < m):
        raise DatasetError(f"{where}: label {label!r} is not a candidate index")
    return LabeledElection(u, label, record.get("label_kind"))


def read_jsonl(path) -> list[LabeledElection]:
    path = Path(path)
    out = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            out.append(_parse_record(record, f"{path}:{lineno}"))
    if not out:
        raise DatasetError(f"{path}: empty dataset")
    return out


def utilities_of(dataset: Sequence[LabeledElection]) -> list[np.ndarray]:
    return [e.utilities for e in dataset]
