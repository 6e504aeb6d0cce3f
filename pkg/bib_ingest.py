import csv
import io
import logging
import re
import string
from typing import Dict, Iterable, List, Optional, Set, Tuple

import pandas as pd

from errors import AliasCycle, EmptyInput, MissingColumn, UsageError

logger = logging.getLogger(__name__)

MIN_YEAR = 1900
MAX_YEAR = 2100
DEFAULT_REF_SEPARATOR = "; "

_STRIP_CHARS = string.punctuation + string.whitespace
_WS_RE = re.compile(r"\s+")
_NUMERIC_ONLY_RE = re.compile(r"[\d\s.,:/-]+")


class BibRecord:
    def __init__(self, record_id: str, pub_year: int, source_journal: str, cited_refs: List[str]):
        self.record_id = record_id
        self.pub_year = pub_year
        self.source_journal = source_journal
        self.cited_refs = list(cited_refs)

    def __repr__(self):
        return f"<BibRecord {self.record_id} year={self.pub_year} refs={len(self.cited_refs)}>"

    def __eq__(self, other):
        if not isinstance(other, BibRecord):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def to_dict(self) -> Dict:
        return {
            "id": self.record_id,
            "year": self.pub_year,
            "source": self.source_journal,
            "cited": list(self.cited_refs),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "BibRecord":
        return cls(str(data["id"]), int(data["year"]), str(data.get("source", "")), list(data.get("cited", [])))


class FormatConfig:
    """Column mapping for the records TSV."""

    def __init__(
        self,
        id_col: str = "id",
        year_col: str = "year",
        source_col: str = "source",
        cited_col: str = "cited",
        ref_separator: str = DEFAULT_REF_SEPARATOR,
    ):
        self.id_col = id_col
        self.year_col = year_col
        self.source_col = source_col
        self.cited_col = cited_col
        if not ref_separator:
            raise UsageError("Reference separator must not be empty.")
        self.ref_separator = ref_separator

    def columns(self) -> Dict[str, str]:
        return {
            "record-id": self.id_col,
            "year": self.year_col,
            "source": self.source_col,
            "cited-reference": self.cited_col,
        }

    def __repr__(self):
        return f"<FormatConfig {self.columns()}>"


class SkippedRow:
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason

    def __repr__(self):
        return f"<SkippedRow line={self.line} {self.reason}>"


def _normalize_text(raw: str) -> str:
    """Uppercase, strip surrounding punctuation/whitespace, collapse inner whitespace."""
    s = _WS_RE.sub(" ", raw.upper())
    return s.strip(_STRIP_CHARS)


class AliasTable:
    """Normalized alias -> canonical name, flattened to one level."""

    def __init__(self, entries: Optional[Dict[str, str]] = None):
        self.entries: Dict[str, str] = dict(entries or {})

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[str, str]]) -> "AliasTable":
        raw: Dict[str, str] = {}
        for alias, canonical in pairs:
            a = _normalize_text(alias)
            c = _normalize_text(canonical)
            if not a or not c or a == c:
                continue
            if a in raw and raw[a] != c:
                logger.warning(f"Alias '{a}' mapped twice ('{raw[a]}' and '{c}'); keeping '{c}'.")
            raw[a] = c

        flat: Dict[str, str] = {}
        for alias in raw:
            seen = [alias]
            target = raw[alias]
            while target in raw:
                if target in seen:
                    raise AliasCycle(f"Alias cycle: {' -> '.join(seen + [target])}")
                seen.append(target)
                target = raw[target]
            flat[alias] = target
        return cls(flat)

    def lookup(self, name: str) -> str:
        return self.entries.get(name, name)

    def __len__(self):
        return len(self.entries)

    def __repr__(self):
        return f"<AliasTable entries={len(self.entries)}>"


def load_aliases(lines: Iterable[str], path: Optional[str] = None) -> AliasTable:
    """Read an `alias,canonical` CSV into an AliasTable."""
    text = "".join(lines)
    if not text.strip():
        return AliasTable()
    df = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    for col in ("alias", "canonical"):
        if col not in df.columns:
            raise MissingColumn(f"Alias file lacks column '{col}'.", path=path, line=1)
    return AliasTable.from_pairs(zip(df["alias"], df["canonical"]))


def normalize_name(raw: str, aliases: Optional[AliasTable] = None) -> str:
    name = _normalize_text(raw)
    if aliases is None:
        return name
    return aliases.lookup(name)


class Normalizer:
    """Callable mapping a raw journal string to its canonical name."""

    def __init__(self, aliases: Optional[AliasTable] = None):
        self.aliases = aliases or AliasTable()

    def __call__(self, raw: str) -> str:
        return normalize_name(raw, self.aliases)

    def __repr__(self):
        return f"<Normalizer {self.aliases!r}>"


def extract_cited_journal(ref) -> Optional[str]:
    """Return the third comma-separated segment of a cited reference, or None."""
    if not isinstance(ref, str):
        return None
    parts = ref.split(",")
    if len(parts) < 3:
        return None
    seg = parts[2].strip()
    if not seg or _NUMERIC_ONLY_RE.fullmatch(seg):
        return None
    return seg


def split_cited_cell(cell: str, separator: str = DEFAULT_REF_SEPARATOR) -> List[str]:
    if not cell or not cell.strip():
        return []
    return [r.strip() for r in cell.split(separator) if r.strip()]


class RecordReader:
    """Parses a records TSV; rows that cannot be used are skipped and kept in `skipped`."""

    def __init__(self, format_cfg: Optional[FormatConfig] = None, path: Optional[str] = None):
        self.cfg = format_cfg or FormatConfig()
        self.path = path
        self.skipped: List[SkippedRow] = []

    def _skip(self, line: int, reason: str) -> None:
        self.skipped.append(SkippedRow(line, reason))
        where = f"{self.path}:{line}" if self.path else f"line {line}"
        logger.warning(f"Skipping record at {where}: {reason}")

    def parse(self, stream: Iterable[str]) -> List[BibRecord]:
        text = "".join(stream)
        if not text.strip():
            raise EmptyInput("Records input is empty.", path=self.path)

        header = text.splitlines()[0].split("\t")
        width = len(header)

        def _bad_line(bad: List[str]) -> List[str]:
            return bad[:width]

        df = pd.read_csv(
            io.StringIO(text),
            sep="\t",
            dtype=str,
            keep_default_na=False,
            quoting=csv.QUOTE_NONE,
            skip_blank_lines=False,
            engine="python",
            on_bad_lines=_bad_line,
        )
        for what, col in self.cfg.columns().items():
            if col not in df.columns:
                raise MissingColumn(f"Header lacks the {what} column '{col}'.", path=self.path, line=1)
        df = df.fillna("")

        if df.empty or all(not any(str(v).strip() for v in row) for row in df.itertuples(index=False)):
            raise EmptyInput("Records input has no data rows.", path=self.path)

        records: List[BibRecord] = []
        seen_ids: Set[str] = set()
        for idx, row in df.iterrows():
            line = int(idx) + 2
            values = [str(row[c]) for c in df.columns]
            if not any(v.strip() for v in values):
                continue
            rid = str(row[self.cfg.id_col]).strip()
            if not rid:
                self._skip(line, "empty record id")
                continue
            if rid in seen_ids:
                self._skip(line, f"duplicate record id '{rid}'")
                continue
            year_text = str(row[self.cfg.year_col]).strip()
            try:
                year = int(year_text)
            except ValueError:
                self._skip(line, f"unparseable year '{year_text}'")
                continue
            if not (MIN_YEAR <= year <= MAX_YEAR):
                self._skip(line, f"year {year} outside [{MIN_YEAR}, {MAX_YEAR}]")
                continue
            seen_ids.add(rid)
            refs = split_cited_cell(str(row[self.cfg.cited_col]), self.cfg.ref_separator)
            records.append(BibRecord(rid, year, str(row[self.cfg.source_col]).strip(), refs))

        logger.debug(f"Parsed {len(records)} records, skipped {len(self.skipped)}.")
        return records


def parse_records(stream: Iterable[str], format_cfg: Optional[FormatConfig] = None) -> List[BibRecord]:
    return RecordReader(format_cfg).parse(stream)


def cited_journals(record: BibRecord, canon: Normalizer) -> Set[str]:
    """Distinct canonical journals cited by one record."""
    out: Set[str] = set()
    for ref in record.cited_refs:
        raw = extract_cited_journal(ref)
        if raw is None:
            continue
        name = canon(raw)
        if name:
            out.add(name)
    return out
