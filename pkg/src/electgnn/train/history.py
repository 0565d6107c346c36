"""Long-form metric history: one ``(epoch, split, metric, value)`` row per measurement."""

from __future__ import annotations

import csv
from pathlib import Path


class History:
    columns = ("epoch", "split", "metric", "value")

    def __init__(self):
        self.rows: list[tuple[int, str, str, float]] = []

    def log(self, epoch: int, split: str, metric: str, value: float) -> None:
        self.rows.append((int(epoch), split, metric, float(value)))

    def series(self, split: str, metric: str) -> list[float]:
        return [v for _, s, m, v in self.rows if s == split and m == metric]

    def last(self, split: str, metric: str) -> float:
        values = self.series(split, metric)
        if not values:
            raise KeyError(f"no {split}/{metric} entries")
        return values[-1]

    def extend(self, other: "History") -> None:
        self.rows.extend(other.rows)

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.columns)
            for epoch, split, metric, value in self.rows:
                writer.writerow([epoch, split, metric, repr(value)])
        return path

    @classmethod
    def read_csv(cls, path) -> "History":
        out = cls()
        with Path(path).open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if tuple(header or ()) != cls.columns:
                raise ValueError(f"{path}: not a metrics file (header {header})")
            for epoch, split, metric, value in reader:
                out.log(int(epoch), split, metric, float(value))
        return out
