"""Clinic report (metadata) table: comma-delimited UTF-8 with a fixed header."""

from __future__ import annotations

import csv
import io
import os
from pathlib import Path
from typing import Iterable, Union

from .core import SampleLabel, SampleRecord
from .errors import MalformedMetadata, MissingMetadataFile

COLUMNS = ("sample_id", "age", "sex", "site", "collected_on", "label")
METADATA_FILENAME = "metadata.csv"


def parse_metadata(text: str) -> list[SampleRecord]:
    """Parse metadata text into records.

    Structural problems (wrong header, wrong column count, non-integer age,
    unknown label, duplicate ids) raise :class:`MalformedMetadata` naming the
    line. Range and category rules are left to record validation.
    """
    reader = csv.reader(io.StringIO(text))
    records: list[SampleRecord] = []
    seen: dict[str, int] = {}
    header_seen = False
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if not header_seen:
            header = tuple(cell.strip() for cell in row)
            if header != COLUMNS:
                raise MalformedMetadata(f"line {line}: header {','.join(header)!r} "
                                        f"does not match {','.join(COLUMNS)!r}")
            header_seen = True
            continue
        if len(row) != len(COLUMNS):
            raise MalformedMetadata(f"line {line}: expected {len(COLUMNS)} fields, got {len(row)}")
        sample_id, age, sex, site, collected_on, label = (cell.strip() for cell in row)
        try:
            age_value = int(age)
        except ValueError:
            raise MalformedMetadata(f"line {line}: age {age!r} is not an integer") from None
        if label:
            try:
                label_value = SampleLabel(label)
            except ValueError:
                raise MalformedMetadata(f"line {line}: unknown label {label!r}") from None
        else:
            label_value = None
        if sample_id and sample_id in seen:
            raise MalformedMetadata(f"line {line}: duplicate sample_id {sample_id!r} "
                                    f"(first on line {seen[sample_id]})")
        seen[sample_id] = line
        records.append(SampleRecord(sample_id, age_value, sex, site, collected_on, label_value))
    if not header_seen:
        raise MalformedMetadata("line 1: missing header row")
    return records


def read_metadata(path: Union[str, os.PathLike]) -> list[SampleRecord]:
    path = Path(path)
    if not path.is_file():
        raise MissingMetadataFile(f"metadata file not found: {path}")
    return parse_metadata(path.read_text(encoding="utf-8"))


def format_metadata(records: Iterable[SampleRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in records:
        writer.writerow([r.sample_id, r.age, r.sex, r.site, r.collected_on,
                         r.label.value if r.label is not None else ""])
    return buf.getvalue()


def write_metadata(records: Iterable[SampleRecord], path: Union[str, os.PathLike]) -> None:
    Path(path).write_text(format_metadata(records), encoding="utf-8")
