import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import pandas as pd
from lark import Lark, Transformer, Token
from lark.exceptions import UnexpectedInput, VisitError

from audit import (
    NOT_INCLUDED,
    BoxplotSummary,
    Composition,
    CrossTab,
    EvolutionSeries,
    GroupMedians,
    Recommendation,
)
from bib_ingest import BibRecord, Normalizer, cited_journals
from centrality import MEASURES, CentralityReport, CorrelationMatrix, QuartileAssignment
from class_rules import ERIH_DISCIPLINES, NO_DISCIPLINE, ClassLabel, DanishLevel, JournalDossier
from cocit_graph import CoCitationNetwork, edge_key
from errors import (
    DanglingEdge,
    DuplicateEdge,
    IoFailure,
    JournalNetError,
    MalformedFile,
    MalformedHeader,
    MissingColumn,
)

logger = logging.getLogger(__name__)

SCRIPT_DIR = Path(__file__).resolve().parent
PAJEK_GRAMMAR = SCRIPT_DIR / "pajek.lark"

SCORES_HEADER = ["journal", "degree", "weighted_degree", "closeness", "betweenness", "eigenvector", "quartile"]
BOXPLOT_HEADER = ["class", "count", "min", "q1", "median", "q3", "max", "whisker_lo", "whisker_hi", "outliers", "skew"]
DOSSIER_HEADER = [
    "journal", "jcr_ss_quartile", "indexed_ssci", "indexed_ahci", "scopus_ipp_quartile", "ipp_value",
    "erih_plus", "erih_discipline", "fecyt_seal", "latindex_catalogue", "latindex_directory",
]

Label = Union[str, ClassLabel, DanishLevel]


# --------------------------------------------------------------------------------------
# Plain file helpers
# --------------------------------------------------------------------------------------


def read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise IoFailure(f"Cannot read file: {e.strerror or e}", path=path)
    except UnicodeDecodeError as e:
        raise MalformedFile(f"Not valid UTF-8: {e.reason} at byte {e.start}", path=path)


def write_text(path: Optional[str], text: str) -> None:
    """Write UTF-8 text with LF line endings; None or '-' means stdout."""
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as e:
        raise IoFailure(f"Cannot write file: {e.strerror or e}", path=path)


def fmt_number(x: Any) -> str:
    """Integers as-is, floats with 6 significant digits, None/NaN as empty."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.6g}"


def _round6(x: Any) -> Any:
    if isinstance(x, float):
        if math.isnan(x):
            return None
        return float(f"{x:.6g}")
    return x


def _csv(rows: List[List[Any]], header: List[str]) -> str:
    df = pd.DataFrame([[fmt_number(v) if not isinstance(v, str) else v for v in row] for row in rows],
                      columns=header, dtype=str)
    return df.to_csv(index=False, lineterminator="\n")


def _read_csv(path: str, required: Iterable[str], text: Optional[str] = None) -> pd.DataFrame:
    text = read_text(path) if text is None else text
    if not text.strip():
        raise MalformedFile("File is empty; a header row is required.", path=path, line=1)
    try:
        df = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise MalformedFile(f"Cannot parse CSV: {e}", path=path)
    df.columns = [str(c).strip() for c in df.columns]
    for col in required:
        if col not in df.columns:
            raise MissingColumn(f"Header lacks column '{col}'.", path=path, line=1)
    return df


def _canon(name: str, canon: Optional[Normalizer]) -> str:
    return canon(name) if canon is not None else name.strip()


# --------------------------------------------------------------------------------------
# Pajek NET
# --------------------------------------------------------------------------------------


class PajekDocument:
    def __init__(self, vertex_count: int, vertices: List[Tuple[int, str]], edges: List[Tuple[int, int, float]]):
        self.vertex_count = vertex_count
        self.vertices = vertices
        self.edges = edges

    def __repr__(self):
        return f"<PajekDocument vertices={self.vertex_count} edges={len(self.edges)}>"


class _Link:
    def __init__(self, a: int, b: int, weight: float, line: int, directed: bool = False):
        self.a = a
        self.b = b
        self.weight = weight
        self.line = line
        self.directed = directed


def _number(text: str) -> float:
    x = float(text)
    return int(x) if x.is_integer() else x


def _unquote(s: str) -> str:
    return s[1:-1].replace('\\"', '"').replace("\\\\", "\\")


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


class _PajekTransformer(Transformer):
    def quoted(self, items):
        return _unquote(items[0].value)

    def bare(self, items):
        return items[0].value

    def weight(self, items):
        return _number(items[0].value)

    def vertex(self, items):
        tok: Token = items[0]
        labels = items[1:]
        return (int(tok.value), labels[0] if labels else None, tok.line)

    def vertices(self, items):
        header: Token = items[0]
        return (int(items[1].value), items[2:], header.line)

    def link(self, items):
        a, b = items[0], items[1]
        w = items[2] if len(items) > 2 else 1
        return _Link(int(a.value), int(b.value), w, a.line)

    def edges(self, items):
        return [link for link in items[1:]]

    def arcs(self, items):
        links = items[1:]
        for link in links:
            link.directed = True
        return links

    def start(self, items):
        return items[0], [link for section in items[1:] for link in section]


_PARSER: Optional[Lark] = None


def _pajek_parser() -> Lark:
    global _PARSER
    if _PARSER is None:
        with open(PAJEK_GRAMMAR, "r", encoding="utf-8") as f:
            _PARSER = Lark(f.read(), parser="lalr")
    return _PARSER


def _syntax_message(e: UnexpectedInput, text: str) -> str:
    line = getattr(e, "line", None)
    column = getattr(e, "column", None)
    msg = f"Syntax error at line {line}" + (f", column {column}" if column is not None else "") + "."
    lines = text.splitlines()
    if line is not None and 1 <= line <= len(lines):
        msg += f"\n  >> {lines[line - 1]}"
        if column is not None and column > 0:
            msg += "\n     " + " " * (column - 1) + "^"
    return msg


def parse_pajek(text: str, path: Optional[str] = None, strict: bool = False) -> PajekDocument:
    """Parse NET text into a PajekDocument with 1..N vertex ids and symmetrized, merged edges."""
    if not text.endswith("\n"):
        text += "\n"
    try:
        tree = _pajek_parser().parse(text)
        (count, vlines, _), links = _PajekTransformer().transform(tree)
    except UnexpectedInput as e:
        raise MalformedHeader(_syntax_message(e, text), path=path, line=getattr(e, "line", None))
    except VisitError as e:
        raise MalformedFile(f"Cannot interpret NET file: {e.orig_exc}", path=path)

    labels: Dict[int, str] = {}
    for vid, label, line in vlines:
        if not (1 <= vid <= count):
            raise MalformedHeader(f"Vertex id {vid} outside 1..{count}.", path=path, line=line)
        if vid in labels:
            raise MalformedHeader(f"Vertex id {vid} listed twice.", path=path, line=line)
        labels[vid] = label if label is not None else str(vid)
    vertices = [(i, labels.get(i, str(i))) for i in range(1, count + 1)]

    merged: Dict[Tuple[int, int], float] = {}
    seen_directed: Dict[Tuple[int, int], int] = {}
    for link in links:
        for end in (link.a, link.b):
            if not (1 <= end <= count):
                raise DanglingEdge(f"Edge {link.a}-{link.b} references vertex {end} outside 1..{count}.",
                                   path=path, line=link.line)
        if link.weight <= 0:
            raise MalformedFile(f"Edge {link.a}-{link.b} has non-positive weight {link.weight}.",
                                path=path, line=link.line)
        if link.a == link.b:
            logger.warning(f"Dropping self-loop on vertex {link.a} (line {link.line}).")
            continue
        key = (min(link.a, link.b), max(link.a, link.b))
        duplicate = False
        if link.directed:
            arc = (link.a, link.b)
            duplicate = arc in seen_directed
            seen_directed[arc] = link.line
        else:
            duplicate = key in merged
        if duplicate:
            if strict:
                raise DuplicateEdge(f"Edge {link.a}-{link.b} appears twice.", path=path, line=link.line)
            logger.warning(f"Duplicate edge {link.a}-{link.b} at line {link.line}; weights summed.")
        merged[key] = merged.get(key, 0) + link.weight
    edges = [(a, b, w) for (a, b), w in sorted(merged.items())]
    return PajekDocument(count, vertices, edges)


def read_pajek(text: str, path: Optional[str] = None, strict: bool = False, year_label: int = 0) -> CoCitationNetwork:
    """NET text -> network. Citation counts are not in NET, so they are rebuilt as weighted degree."""
    doc = parse_pajek(text, path, strict)
    names = {vid: label for vid, label in doc.vertices}
    if len(set(names.values())) != len(names):
        raise MalformedFile("Vertex labels are not unique.", path=path)
    edges: Dict[Tuple[str, str], float] = {}
    strength: Dict[str, float] = {label: 0 for label in names.values()}
    for a, b, w in doc.edges:
        key = edge_key(names[a], names[b])
        edges[key] = edges.get(key, 0) + w
        strength[names[a]] += w
        strength[names[b]] += w
    nodes = {n: (int(s) if float(s).is_integer() else s) for n, s in strength.items()}
    return CoCitationNetwork(nodes, edges, year_label, lossy=True)


def write_pajek(net: CoCitationNetwork) -> str:
    ids = {name: i for i, name in enumerate(sorted(net.nodes), start=1)}
    out = [f"*Vertices {len(ids)}"]
    out.extend(f"{i} {_quote(name)}" for name, i in ids.items())
    out.append("*Edges")
    links = sorted((min(ids[a], ids[b]), max(ids[a], ids[b]), w) for (a, b), w in net.edges.items())
    for i, j, w in links:
        out.append(f"{i} {j} {_weight_text(w)}")
    return "\n".join(out) + "\n"


def _weight_text(w: float) -> str:
    if float(w).is_integer():
        return str(int(w))
    return repr(float(w))


# --------------------------------------------------------------------------------------
# Network JSON and record store
# --------------------------------------------------------------------------------------


def _dump_json(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def render_network_json(net: CoCitationNetwork) -> str:
    return _dump_json(net.to_dict())


def parse_network_json(text: str, path: Optional[str] = None) -> CoCitationNetwork:
    try:
        data = json.loads(text)
        return CoCitationNetwork.from_dict(data)
    except (ValueError, KeyError, TypeError) as e:
        raise MalformedFile(f"Not a network JSON document: {e}", path=path)


def load_network(path: str, year_label: Optional[int] = None) -> CoCitationNetwork:
    """Read a network from .net (Pajek) or JSON, choosing by extension."""
    text = read_text(path)
    if path.lower().endswith(".net"):
        return read_pajek(text, path=path, year_label=year_label or 0)
    net = parse_network_json(text, path)
    if year_label is not None:
        net.year_label = int(year_label)
    return net


def render_records_json(records: List[BibRecord], canon: Normalizer) -> str:
    rows = []
    for rec in records:
        row = rec.to_dict()
        row["journals"] = sorted(cited_journals(rec, canon))
        rows.append(row)
    return _dump_json({"records": rows})


def parse_records_json(text: str, path: Optional[str] = None) -> List[BibRecord]:
    try:
        data = json.loads(text)
        return [BibRecord.from_dict(r) for r in data["records"]]
    except (ValueError, KeyError, TypeError) as e:
        raise MalformedFile(f"Not a record store: {e}", path=path)


# --------------------------------------------------------------------------------------
# Centrality scores
# --------------------------------------------------------------------------------------


def render_scores_csv(report: CentralityReport, bins: Optional[QuartileAssignment] = None) -> str:
    rows = []
    for name in report.names:
        vals = report.row(name)
        rows.append([name] + [vals[m] for m in MEASURES] + [bins.bins.get(name, "") if bins else ""])
    return _csv(rows, SCORES_HEADER)


def read_scores_csv(path: str, canon: Optional[Normalizer] = None) -> Tuple[Dict[str, Dict[str, float]], QuartileAssignment]:
    """Scores CSV -> ({measure: {journal: score}}, quartile bins)."""
    df = _read_csv(path, ["journal"])
    scores: Dict[str, Dict[str, float]] = {m: {} for m in MEASURES}
    bins: Dict[str, str] = {}
    for idx, row in df.iterrows():
        name = _canon(str(row["journal"]), canon)
        for m in MEASURES:
            if m in df.columns and str(row[m]).strip():
                try:
                    scores[m][name] = float(row[m])
                except ValueError:
                    raise MalformedFile(f"Column '{m}' holds a non-number '{row[m]}'.", path=path, line=int(idx) + 2)
        if "quartile" in df.columns and str(row["quartile"]).strip():
            bins[name] = str(row["quartile"]).strip()
    return scores, QuartileAssignment(bins, (math.nan, math.nan, math.nan))


def render_correlations_csv(corr: CorrelationMatrix) -> str:
    measures = list(corr.pearson.columns)
    rows = []
    for method, frame in (("pearson", corr.pearson), ("spearman", corr.spearman)):
        for m in measures:
            rows.append([method, m] + [float(frame.loc[m, k]) for k in measures])
    return _csv(rows, ["method", "measure"] + measures)


# --------------------------------------------------------------------------------------
# Classification inputs and labels
# --------------------------------------------------------------------------------------


def _bool(value: str, col: str, path: str, line: int) -> bool:
    v = value.strip().lower()
    if v in ("true", "1", "yes"):
        return True
    if v in ("false", "0", "no", ""):
        return False
    raise MalformedFile(f"Column '{col}' expects true/false, got '{value}'.", path=path, line=line)


def _quartile(value: str, col: str, path: str, line: int) -> Optional[int]:
    v = value.strip()
    if not v:
        return None
    if v not in ("1", "2", "3", "4"):
        raise MalformedFile(f"Column '{col}' expects a quartile 1-4, got '{value}'.", path=path, line=line)
    return int(v)


def read_dossiers(path: str, canon: Optional[Normalizer] = None) -> List[JournalDossier]:
    from validate import validate_dossier

    df = _read_csv(path, DOSSIER_HEADER)
    out: List[JournalDossier] = []
    for idx, row in df.iterrows():
        line = int(idx) + 2
        ipp_text = str(row["ipp_value"]).strip()
        try:
            ipp = float(ipp_text) if ipp_text else None
        except ValueError:
            raise MalformedFile(f"Column 'ipp_value' expects a number, got '{ipp_text}'.", path=path, line=line)
        discipline = str(row["erih_discipline"]).strip().lower() or NO_DISCIPLINE
        if discipline not in ERIH_DISCIPLINES:
            raise MalformedFile(f"Column 'erih_discipline' expects one of {', '.join(ERIH_DISCIPLINES)}, "
                                f"got '{row['erih_discipline']}'.", path=path, line=line)
        d = JournalDossier(
            journal=_canon(str(row["journal"]), canon),
            jcr_ss_quartile=_quartile(str(row["jcr_ss_quartile"]), "jcr_ss_quartile", path, line),
            indexed_ssci=_bool(str(row["indexed_ssci"]), "indexed_ssci", path, line),
            indexed_ahci=_bool(str(row["indexed_ahci"]), "indexed_ahci", path, line),
            scopus_ipp_quartile=_quartile(str(row["scopus_ipp_quartile"]), "scopus_ipp_quartile", path, line),
            ipp_value=ipp,
            erih_plus=_bool(str(row["erih_plus"]), "erih_plus", path, line),
            erih_discipline=discipline,
            fecyt_seal=_bool(str(row["fecyt_seal"]), "fecyt_seal", path, line),
            latindex_catalogue=_bool(str(row["latindex_catalogue"]), "latindex_catalogue", path, line),
            latindex_directory=_bool(str(row["latindex_directory"]), "latindex_directory", path, line),
        )
        try:
            validate_dossier(d)
        except JournalNetError as e:
            e.path, e.line = path, line
            raise
        out.append(d)
    return out


def read_levels(path: str, canon: Optional[Normalizer] = None) -> Dict[str, DanishLevel]:
    df = _read_csv(path, ["journal", "level"])
    out: Dict[str, DanishLevel] = {}
    for idx, row in df.iterrows():
        try:
            out[_canon(str(row["journal"]), canon)] = DanishLevel.parse(row["level"])
        except ValueError as e:
            raise MalformedFile(str(e), path=path, line=int(idx) + 2)
    return out


def parse_label(text: str) -> Label:
    try:
        return DanishLevel.parse(text)
    except ValueError:
        pass
    try:
        return ClassLabel.parse(text)
    except ValueError:
        return text.strip()


def read_labels(path: str, canon: Optional[Normalizer] = None) -> Dict[str, Label]:
    """`journal,label` CSV (as written by `classify`); also accepts a levels file."""
    df = _read_csv(path, ["journal"])
    col = "label" if "label" in df.columns else "level"
    if col not in df.columns:
        raise MissingColumn("Header lacks column 'label' (or 'level').", path=path, line=1)
    return {_canon(str(r["journal"]), canon): parse_label(str(r[col])) for _, r in df.iterrows()}


def render_labels_csv(labels: Dict[str, Label], points: Optional[Dict[str, float]] = None) -> str:
    header = ["journal", "label"] + (["points"] if points is not None else [])
    rows = []
    for j in sorted(labels):
        lab = labels[j]
        row = [j, lab.label if isinstance(lab, (ClassLabel, DanishLevel)) else str(lab)]
        if points is not None:
            row.append(points.get(j, 0.0))
        rows.append(row)
    return _csv(rows, header)


def read_fields(path: str, canon: Optional[Normalizer] = None) -> Dict[str, str]:
    df = _read_csv(path, ["journal", "field"])
    return {_canon(str(r["journal"]), canon): str(r["field"]).strip() for _, r in df.iterrows()}


def read_production(path: str, canon: Optional[Normalizer] = None) -> Dict[str, float]:
    df = _read_csv(path, ["journal", "articles"])
    out: Dict[str, float] = {}
    for idx, row in df.iterrows():
        try:
            value = float(row["articles"])
        except ValueError:
            raise MalformedFile(f"Column 'articles' expects a number, got '{row['articles']}'.",
                                path=path, line=int(idx) + 2)
        if value < 0:
            raise MalformedFile("Article counts cannot be negative.", path=path, line=int(idx) + 2)
        out[_canon(str(row["journal"]), canon)] = value
    return out


# --------------------------------------------------------------------------------------
# Audit reports
# --------------------------------------------------------------------------------------


def render_crosstab_csv(ct: CrossTab) -> str:
    return _csv(ct.table(), ["class"] + ct.columns + ["Total"])


def render_boxplot_csv(summaries: Dict[str, BoxplotSummary]) -> str:
    rows = []
    for label, s in summaries.items():
        rows.append([label, s.count, s.min, s.q1, s.median, s.q3, s.max, s.whisker_lo, s.whisker_hi,
                     ";".join(fmt_number(x) for x in s.outliers), s.skew])
    return _csv(rows, BOXPLOT_HEADER)


def render_composition_csv(comp: Composition) -> str:
    """Cells first, then per-class totals (field ALL), then per-field totals (class ALL)."""
    rows: List[List[Any]] = []
    for (field, label), share in comp.cells.items():
        rows.append([field, label, comp.counts[(field, label)], share])
    for label, share in sorted(comp.by_class.items(), key=lambda kv: (kv[0] == NOT_INCLUDED, kv[0])):
        rows.append(["ALL", label, sum(v for (f, lab), v in comp.counts.items() if lab == label), share])
    for field, share in sorted(comp.by_field.items()):
        rows.append([field, "ALL", sum(v for (f, lab), v in comp.counts.items() if f == field), share])
    return _csv(rows, ["field", "class", "count", "share"])


def render_recommendations_json(recs: List[Recommendation]) -> str:
    data = []
    for r in sorted(recs, key=lambda r: r.journal):
        d = r.to_dict()
        d["evidence"] = {k: _round6(v) for k, v in d["evidence"].items()}
        data.append(d)
    return _dump_json(data)


def render_series_json(series: List[EvolutionSeries], medians: Optional[GroupMedians] = None) -> str:
    data = {
        "series": [s.to_dict() for s in sorted(series, key=lambda s: s.journal)],
        "medians": medians.to_dict() if medians is not None else {},
    }
    return _dump_json(data)


def parse_series_json(text: str, path: Optional[str] = None) -> Tuple[List[EvolutionSeries], GroupMedians]:
    try:
        data = json.loads(text)
        series = [EvolutionSeries.from_dict(s) for s in data["series"]]
        medians = GroupMedians.from_dict(data.get("medians", {}))
    except (ValueError, KeyError, TypeError) as e:
        raise MalformedFile(f"Not a series document: {e}", path=path)
    return series, medians


def write_reports(outputs: Union[Dict[Optional[str], Any], Iterable[Tuple[Optional[str], Any]]]) -> None:
    """Write each report object to its path using the matching schema; str objects are written as-is."""
    pairs = outputs.items() if isinstance(outputs, dict) else outputs
    for path, obj in pairs:
        if isinstance(obj, str):
            text = obj
        elif isinstance(obj, CoCitationNetwork):
            text = render_network_json(obj)
        elif isinstance(obj, CentralityReport):
            text = render_scores_csv(obj)
        elif isinstance(obj, tuple) and len(obj) == 2 and isinstance(obj[0], CentralityReport):
            text = render_scores_csv(obj[0], obj[1])
        elif isinstance(obj, CrossTab):
            text = render_crosstab_csv(obj)
        elif isinstance(obj, Composition):
            text = render_composition_csv(obj)
        elif isinstance(obj, CorrelationMatrix):
            text = render_correlations_csv(obj)
        elif isinstance(obj, dict) and all(isinstance(v, BoxplotSummary) for v in obj.values()):
            text = render_boxplot_csv(obj)
        elif isinstance(obj, list) and all(isinstance(v, Recommendation) for v in obj):
            text = render_recommendations_json(obj)
        elif isinstance(obj, list) and all(isinstance(v, EvolutionSeries) for v in obj):
            text = render_series_json(obj)
        else:
            raise TypeError(f"No writer for {type(obj).__name__}")
        write_text(path, text)
