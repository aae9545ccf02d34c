"""Immutable POI catalog with id/kind/city indexes and JSON-lines storage.

On disk a catalog is a directory with one ``<kind>.jsonl`` file per kind.
The first line of each file is a header ``{"format": 1, "kind": "..."}``;
every following line is one record document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .model import CATALOG_FORMAT, Kind, PoiRecord, canonical_json


@dataclass(frozen=True)
class PoiCatalog:
    records: tuple[PoiRecord, ...]
    _by_id: dict = field(init=False, repr=False, compare=False)
    _by_kind: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_id: dict[str, PoiRecord] = {}
        by_kind: dict[Kind, list[PoiRecord]] = {kind: [] for kind in Kind}
        for rec in self.records:
            if rec.id in by_id:
                raise ValueError(f"duplicate record id {rec.id!r}")
            by_id[rec.id] = rec
            by_kind[rec.kind].append(rec)
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_by_kind", by_kind)

    @staticmethod
    def from_records(records: Iterable[PoiRecord]) -> "PoiCatalog":
        """Build a catalog with records in canonical (kind, id) order."""
        ordered = sorted(records, key=lambda r: (r.kind.value, r.id))
        return PoiCatalog(records=tuple(ordered))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[PoiRecord]:
        return iter(self.records)

    def __contains__(self, poi_id: str) -> bool:
        return poi_id in self._by_id

    def get(self, poi_id: str) -> Optional[PoiRecord]:
        return self._by_id.get(poi_id)

    def by_kind(self, kind: Kind, city: Optional[str] = None) -> list[PoiRecord]:
        """All records of a kind, optionally restricted to one city, id order."""
        out = self._by_kind[kind]
        if city is not None:
            out = [r for r in out if r.city == city]
        return sorted(out, key=lambda r: r.id)

    def cities(self) -> set[str]:
        return {r.city for r in self.records}

    def intercity_options(self, origin: str, destination: str, date_iso: Optional[str]) -> list[PoiRecord]:
        """Flights and intercity rows from origin to destination.

        Dated records must match ``date_iso`` exactly; undated records (for
        example self-driving rows) match any date.
        """
        out = []
        for kind in (Kind.FLIGHT, Kind.INTERCITY_TRANSIT):
            for rec in self._by_kind[kind]:
                if rec.attributes.get("origin") != origin:
                    continue
                if rec.attributes.get("destination") != destination:
                    continue
                rec_date = rec.attributes.get("date")
                if rec_date is not None and date_iso is not None and rec_date != date_iso:
                    continue
                out.append(rec)
        return sorted(out, key=lambda r: r.id)

    # -- storage ------------------------------------------------------------

    def save_dir(self, path: str | Path) -> None:
        """Write one JSONL file per non-empty kind under ``path``."""
        root = Path(path)
        root.mkdir(parents=True, exist_ok=True)
        for kind in Kind:
            recs = self.by_kind(kind)
            if not recs:
                continue
            lines = [canonical_json({"format": CATALOG_FORMAT, "kind": kind.value})]
            lines.extend(canonical_json(rec.to_doc()) for rec in recs)
            (root / f"{kind.value}.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")

    @staticmethod
    def load_dir(path: str | Path) -> "PoiCatalog":
        root = Path(path)
        if not root.is_dir():
            raise FileNotFoundError(f"catalog directory not found: {root}")
        records: list[PoiRecord] = []
        for kind in Kind:
            file = root / f"{kind.value}.jsonl"
            if not file.exists():
                continue
            with file.open(encoding="utf-8") as fh:
                header_line = fh.readline()
                try:
                    header = json.loads(header_line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{file}: bad header line: {exc}") from exc
                if header.get("format") != CATALOG_FORMAT:
                    raise ValueError(f"{file}: unsupported catalog format {header.get('format')!r}")
                for lineno, line in enumerate(fh, start=2):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        records.append(PoiRecord.from_doc(json.loads(line)))
                    except (json.JSONDecodeError, KeyError, ValueError) as exc:
                        raise ValueError(f"{file}:{lineno}: bad record: {exc}") from exc
        return PoiCatalog.from_records(records)


__all__ = ["PoiCatalog"]
