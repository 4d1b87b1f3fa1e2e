"""Dataset manifests: UTF-8 CSV with header ``uuid,path,label[,fold]``."""

from __future__ import annotations

import csv
from collections.abc import Iterator
from dataclasses import dataclass, field
from pathlib import Path

from pydantic import BaseModel, ValidationError, field_validator

from src.errors import CoughScreenError

REQUIRED_COLUMNS = ("uuid", "path", "label")


class ManifestRow(BaseModel):
    uuid: str
    path: Path
    label: int
    fold: int | None = None

    model_config = {"frozen": True}

    @field_validator("uuid")
    @classmethod
    def validate_uuid(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("uuid must be non-empty")
        return v.strip()

    @field_validator("label")
    @classmethod
    def validate_label(cls, v: int) -> int:
        if v not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {v}")
        return v

    @field_validator("fold", mode="before")
    @classmethod
    def empty_fold(cls, v: object) -> object:
        return None if v == "" else v


@dataclass
class Manifest:
    rows: list[ManifestRow]
    source: Path | None = None
    _by_uuid: dict[str, ManifestRow] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._by_uuid = {}
        for row in self.rows:
            if row.uuid in self._by_uuid:
                raise ManifestError(f"duplicate uuid {row.uuid!r}")
            self._by_uuid[row.uuid] = row

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[ManifestRow]:
        return iter(self.rows)

    def get(self, uuid: str) -> ManifestRow:
        return self._by_uuid[uuid]

    @property
    def uuids(self) -> list[str]:
        return [row.uuid for row in self.rows]

    @property
    def labels(self) -> dict[str, int]:
        return {row.uuid: row.label for row in self.rows}

    @property
    def has_folds(self) -> bool:
        return bool(self.rows) and all(row.fold is not None for row in self.rows)

    def subset(self, uuids: set[str]) -> Manifest:
        return Manifest([row for row in self.rows if row.uuid in uuids], self.source)

    def with_labels(self, labels: dict[str, int]) -> Manifest:
        return Manifest([row.model_copy(update={"label": labels[row.uuid]}) for row in self.rows], self.source)


def load_manifest(path: str | Path, check_paths: bool = True) -> Manifest:
    """Read a manifest; relative audio paths resolve against the manifest's directory."""
    manifest_path = Path(path)
    if not manifest_path.exists():
        raise FileNotFoundError(f"manifest not found: {manifest_path}")
    root = manifest_path.parent

    rows: list[ManifestRow] = []
    with open(manifest_path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise ManifestError(f"{manifest_path}: missing columns {missing}")
        for line_no, record in enumerate(reader, start=2):
            try:
                row = ManifestRow(
                    uuid=record["uuid"],
                    path=record["path"],
                    label=record["label"],
                    fold=record.get("fold"),
                )
            except ValidationError as e:
                raise ManifestError(f"{manifest_path}:{line_no}: {e.errors()[0]['msg']}") from e
            resolved = row.path if row.path.is_absolute() else root / row.path
            if check_paths and not resolved.exists():
                raise ManifestError(f"{manifest_path}:{line_no}: audio file not found: {resolved}")
            rows.append(row.model_copy(update={"path": resolved}))
    return Manifest(rows, manifest_path)


def write_manifest(manifest: Manifest | list[ManifestRow], path: str | Path) -> None:
    """Write rows with paths relative to the manifest directory where possible."""
    target = Path(path)
    rows = manifest.rows if isinstance(manifest, Manifest) else manifest
    with_folds = bool(rows) and all(row.fold is not None for row in rows)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow([*REQUIRED_COLUMNS, "fold"] if with_folds else list(REQUIRED_COLUMNS))
        for row in rows:
            try:
                rel = row.path.relative_to(target.parent)
            except ValueError:
                rel = row.path
            values = [row.uuid, rel.as_posix(), str(row.label)]
            if with_folds:
                values.append(str(row.fold))
            writer.writerow(values)


class ManifestError(CoughScreenError):
    """Raised for malformed manifests."""

    pass
