import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from centrality import QUARTILES, CentralityReport, QuartileAssignment
from class_rules import ClassLabel, DanishLevel
from cocit_graph import CoCitationNetwork
from errors import EmptyGroup, MissingMedians, SnapshotOrder, UnknownJournal, UsageError

logger = logging.getLogger(__name__)

NOT_INCLUDED = "Not included"
UNKNOWN_FIELD = "unknown"

DEFAULT_DECLINE_DELTA = 0.005
DEFAULT_PROMOTION_WINDOW = 2
DEFAULT_SKEW_TOLERANCE = 0.10

INTRODUCE_LEVEL1 = "IntroduceLevel1"
STAY = "Stay"
PROMOTE_LEVEL2 = "PromoteLevel2"
REMOVE = "Remove"

Label = Union[str, ClassLabel, DanishLevel]


def _label_text(label: Label) -> str:
    if isinstance(label, (ClassLabel, DanishLevel)):
        return label.label
    return str(label)


def _label_rank(label: Label) -> Tuple[int, str]:
    if isinstance(label, (ClassLabel, DanishLevel)):
        return (-int(label), label.label)
    return (0, str(label))


def _row_order(labels: Iterable[Label]) -> List[str]:
    uniq: Dict[str, Label] = {}
    for lab in labels:
        uniq.setdefault(_label_text(lab), lab)
    order = sorted(uniq.values(), key=_label_rank)
    return [_label_text(x) for x in order if _label_text(x) != NOT_INCLUDED]


# --------------------------------------------------------------------------------------
# Cross-tabulation
# --------------------------------------------------------------------------------------


class CrossTab:
    def __init__(self, rows: List[str], counts: Dict[str, Dict[str, int]], columns: Sequence[str] = QUARTILES):
        self.rows = list(rows)
        self.columns = list(columns)
        self.counts = {r: {c: int(counts.get(r, {}).get(c, 0)) for c in self.columns} for r in self.rows}

    @classmethod
    def from_counts(cls, table: Dict[str, Sequence[int]], columns: Sequence[str] = QUARTILES) -> "CrossTab":
        """Build from printed rows, e.g. {"Level 2": [40, 22, 27, 13]}."""
        counts = {r: dict(zip(columns, vals)) for r, vals in table.items()}
        return cls(list(table), counts, columns)

    def row_total(self, row: str) -> int:
        return sum(self.counts[row].values())

    def column_total(self, col: str) -> int:
        return sum(self.counts[r][col] for r in self.rows)

    @property
    def grand_total(self) -> int:
        return sum(self.row_total(r) for r in self.rows)

    def row_share(self, row: str, col: str = "Q1") -> float:
        total = self.row_total(row)
        return self.counts[row][col] / total if total else 0.0

    def column_share(self, rows: Union[str, Iterable[str]], col: str = "Q1") -> float:
        rows = [rows] if isinstance(rows, str) else list(rows)
        total = self.column_total(col)
        return sum(self.counts[r][col] for r in rows) / total if total else 0.0

    def combined_row_share(self, rows: Iterable[str], col: str = "Q1") -> float:
        rows = list(rows)
        total = sum(self.row_total(r) for r in rows)
        return sum(self.counts[r][col] for r in rows) / total if total else 0.0

    def merge_rows(self, members: Sequence[str], name: Optional[str] = None) -> "CrossTab":
        """Collapse `members` into one row, e.g. C and D into "C/D", placed where the first member was."""
        members = list(dict.fromkeys(members))
        if len(members) < 2:
            raise UsageError(f"A row group needs at least two classes, got {members}.")
        name = name or "/".join(members)
        if name in self.rows and name not in members:
            raise UsageError(f"Row group name '{name}' is already a row.")
        merged = {c: sum(self.counts[r][c] for r in members if r in self.counts) for c in self.columns}
        rows: List[str] = []
        for r in self.rows:
            if r in members:
                if name not in rows:
                    rows.append(name)
            else:
                rows.append(r)
        if name not in rows:
            at = rows.index(NOT_INCLUDED) if NOT_INCLUDED in rows else len(rows)
            rows.insert(at, name)
        counts = {r: self.counts[r] for r in rows if r != name}
        counts[name] = merged
        return CrossTab(rows, counts, self.columns)

    def table(self) -> List[List]:
        """Rows of [label, Q1..Q4, Total] followed by the totals row."""
        out = [[r] + [self.counts[r][c] for c in self.columns] + [self.row_total(r)] for r in self.rows]
        out.append(["Total"] + [self.column_total(c) for c in self.columns] + [self.grand_total])
        return out

    def __repr__(self):
        return f"<CrossTab rows={self.rows} total={self.grand_total}>"


def crosstab(classes: Dict[str, Label], bins: QuartileAssignment, row_order: Optional[List[str]] = None) -> CrossTab:
    """Count network journals per (class, quartile); unclassified journals go to 'Not included'."""
    rows = list(row_order) if row_order else _row_order(classes.values())
    counts: Dict[str, Dict[str, int]] = {}
    unclassified = False
    for journal, q in bins.bins.items():
        if journal in classes:
            row = _label_text(classes[journal])
        else:
            row = NOT_INCLUDED
            unclassified = True
        if row not in rows and row != NOT_INCLUDED:
            rows.append(row)
        counts.setdefault(row, {}).setdefault(q, 0)
        counts[row][q] += 1
    if unclassified or NOT_INCLUDED in counts:
        rows = [r for r in rows if r != NOT_INCLUDED] + [NOT_INCLUDED]
    return CrossTab(rows, counts)


def crosstab_shares(ct: CrossTab, prestigious: Iterable[str], col: str = "Q1") -> Dict[str, float]:
    """The Q1 readings: each row's share in `col`, plus the prestigious rows' share of `col`."""
    prestigious = [r for r in prestigious if r in ct.rows]
    shares = {f"row_share[{r}]": ct.row_share(r, col) for r in ct.rows}
    if prestigious:
        shares["prestigious_row_share"] = ct.combined_row_share(prestigious, col)
        shares["prestigious_column_share"] = ct.column_share(prestigious, col)
    return shares


# --------------------------------------------------------------------------------------
# Boxplots
# --------------------------------------------------------------------------------------


class BoxplotSummary:
    def __init__(self, values: Sequence[float], skew_tolerance: float = DEFAULT_SKEW_TOLERANCE):
        data = np.sort(np.asarray(values, dtype=float))
        self.count = int(data.size)
        self.min = float(data[0])
        self.max = float(data[-1])
        self.q1, self.median, self.q3 = (float(x) for x in np.percentile(data, [25, 50, 75]))
        iqr = self.q3 - self.q1
        lo_fence = self.q1 - 1.5 * iqr
        hi_fence = self.q3 + 1.5 * iqr
        inside = data[(data >= lo_fence) & (data <= hi_fence)]
        self.whisker_lo = float(inside.min())
        self.whisker_hi = float(inside.max())
        self.outliers = [float(x) for x in data if x < self.whisker_lo or x > self.whisker_hi]
        lower_half = self.median - self.q1
        upper_half = self.q3 - self.median
        margin = skew_tolerance * iqr
        if iqr > 0 and upper_half - lower_half > margin:
            self.skew = "left"
        elif iqr > 0 and lower_half - upper_half > margin:
            self.skew = "right"
        else:
            self.skew = "none"

    def to_dict(self) -> Dict:
        return {
            "count": self.count,
            "min": self.min,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.max,
            "whisker_lo": self.whisker_lo,
            "whisker_hi": self.whisker_hi,
            "outliers": list(self.outliers),
            "skew": self.skew,
        }

    def __repr__(self):
        return f"<BoxplotSummary n={self.count} median={self.median:.6g} skew={self.skew}>"


def boxplot_summary(
    scores: Dict[str, float],
    classes: Dict[str, Label],
    groups: Optional[Iterable[Label]] = None,
    skew_tolerance: float = DEFAULT_SKEW_TOLERANCE,
) -> Dict[str, BoxplotSummary]:
    """Per-class boxplot statistics over the scored journals of each class."""
    members: Dict[str, List[float]] = {}
    for journal, label in classes.items():
        members.setdefault(_label_text(label), [])
        if journal in scores:
            members[_label_text(label)].append(scores[journal])
    for g in groups or []:
        members.setdefault(_label_text(g), [])
    order = _row_order(list(classes.values()) + list(groups or []))
    if NOT_INCLUDED in members:
        order.append(NOT_INCLUDED)
    out: Dict[str, BoxplotSummary] = {}
    for label in order:
        vals = members[label]
        if not vals:
            raise EmptyGroup(f"Class '{label}' has no scored journal.")
        out[label] = BoxplotSummary(vals, skew_tolerance)
    return out


# --------------------------------------------------------------------------------------
# Composition
# --------------------------------------------------------------------------------------


class Composition:
    def __init__(self, cells: Dict[Tuple[str, str], float], by_class: Dict[str, float],
                 by_field: Dict[str, float], counts: Dict[Tuple[str, str], int], total: int):
        self.cells = cells
        self.by_class = by_class
        self.by_field = by_field
        self.counts = counts
        self.total = total

    def share(self, field: str, label: Label) -> float:
        return self.cells.get((field, _label_text(label)), 0.0)

    def __repr__(self):
        return f"<Composition journals={self.total} cells={len(self.cells)}>"


def composition(
    classes: Dict[str, Label],
    fields: Dict[str, str],
    journals: Optional[Iterable[str]] = None,
) -> Composition:
    """Percentage shares per (field, class), per class and per field over the network's journals."""
    journal_set = sorted(journals if journals is not None else classes)
    total = len(journal_set)
    counts: Dict[Tuple[str, str], int] = {}
    for j in journal_set:
        label = _label_text(classes[j]) if j in classes else NOT_INCLUDED
        field = fields.get(j) or UNKNOWN_FIELD
        counts[(field, label)] = counts.get((field, label), 0) + 1
    if total == 0:
        return Composition({}, {}, {}, {}, 0)
    cells = {k: 100.0 * v / total for k, v in sorted(counts.items())}
    by_class: Dict[str, float] = {}
    by_field: Dict[str, float] = {}
    for (field, label), v in sorted(counts.items()):
        by_class[label] = by_class.get(label, 0.0) + 100.0 * v / total
        by_field[field] = by_field.get(field, 0.0) + 100.0 * v / total
    return Composition(cells, by_class, by_field, dict(sorted(counts.items())), total)


# --------------------------------------------------------------------------------------
# Evolution and recommendations
# --------------------------------------------------------------------------------------


class Snapshot:
    def __init__(self, year: int, network: CoCitationNetwork, report: CentralityReport):
        self.year = int(year)
        self.network = network
        self.report = report

    def __repr__(self):
        return f"<Snapshot {self.year} nodes={len(self.network)}>"


class EvolutionPoint:
    def __init__(self, year: int, present: bool, eigenvector: Optional[float] = None,
                 betweenness: Optional[float] = None):
        self.year = int(year)
        self.present = present
        self.eigenvector = eigenvector if present else None
        self.betweenness = betweenness if present else None

    def to_dict(self) -> Dict:
        return {"year": self.year, "present": self.present,
                "eigenvector": self.eigenvector, "betweenness": self.betweenness}

    @classmethod
    def from_dict(cls, data: Dict) -> "EvolutionPoint":
        return cls(data["year"], bool(data["present"]), data.get("eigenvector"), data.get("betweenness"))

    def __repr__(self):
        return f"<EvolutionPoint {self.year} present={self.present} eig={self.eigenvector}>"


class EvolutionSeries:
    def __init__(self, journal: str, points: List[EvolutionPoint]):
        years = [p.year for p in points]
        if any(b <= a for a, b in zip(years, years[1:])):
            raise SnapshotOrder(f"Series years for '{journal}' are not strictly increasing: {years}")
        self.journal = journal
        self.points = points

    @property
    def latest(self) -> EvolutionPoint:
        return self.points[-1]

    def present_points(self) -> List[EvolutionPoint]:
        return [p for p in self.points if p.present]

    def delta_over_window(self) -> Optional[float]:
        """Latest minus earliest present eigenvector; None with fewer than two present points."""
        pts = self.present_points()
        if len(pts) < 2:
            return None
        return pts[-1].eigenvector - pts[0].eigenvector

    def to_dict(self) -> Dict:
        return {"journal": self.journal, "points": [p.to_dict() for p in self.points]}

    @classmethod
    def from_dict(cls, data: Dict) -> "EvolutionSeries":
        return cls(data["journal"], [EvolutionPoint.from_dict(p) for p in data["points"]])

    def __repr__(self):
        return f"<EvolutionSeries {self.journal} years={[p.year for p in self.points]}>"


def _check_snapshots(snapshots: Sequence[Snapshot]) -> None:
    if not snapshots:
        raise SnapshotOrder("At least one snapshot is required.")
    years = [s.year for s in snapshots]
    if any(b <= a for a, b in zip(years, years[1:])):
        raise SnapshotOrder(f"Snapshots must be sorted by strictly increasing year, got {years}.")


def evolution_series(snapshots: Sequence[Snapshot], journal: str) -> EvolutionSeries:
    _check_snapshots(snapshots)
    points: List[EvolutionPoint] = []
    for snap in snapshots:
        if journal in snap.network:
            points.append(EvolutionPoint(
                snap.year, True,
                snap.report.scores["eigenvector"].get(journal),
                snap.report.scores["betweenness"].get(journal),
            ))
        else:
            points.append(EvolutionPoint(snap.year, False))
    if not any(p.present for p in points):
        raise UnknownJournal(f"Journal '{journal}' appears in no snapshot.")
    return EvolutionSeries(journal, points)


def listing_tier(current: Label) -> DanishLevel:
    """Map a class onto the two-tier listing scale; CIRC A+/A count as the prestigious tier."""
    if isinstance(current, DanishLevel):
        return current
    if isinstance(current, ClassLabel):
        if current >= ClassLabel.A:
            return DanishLevel.LEVEL2
        if current >= ClassLabel.D:
            return DanishLevel.LEVEL1
        return DanishLevel.NOT_LISTED
    text = str(current)
    try:
        return DanishLevel.parse(text)
    except ValueError:
        return listing_tier(ClassLabel.parse(text))


class GroupMedians:
    """Per-year median score of each listing tier."""

    def __init__(self, medians: Optional[Dict[int, Dict[DanishLevel, float]]] = None):
        self.medians: Dict[int, Dict[DanishLevel, float]] = {int(y): dict(m) for y, m in (medians or {}).items()}

    def get(self, year: int, level: DanishLevel) -> Optional[float]:
        return self.medians.get(int(year), {}).get(level)

    def to_dict(self) -> Dict:
        return {str(y): {str(int(lv)): v for lv, v in sorted(m.items())} for y, m in sorted(self.medians.items())}

    @classmethod
    def from_dict(cls, data: Dict) -> "GroupMedians":
        return cls({int(y): {DanishLevel(int(lv)): float(v) for lv, v in m.items()} for y, m in data.items()})

    def __repr__(self):
        return f"<GroupMedians years={sorted(self.medians)}>"


def group_medians(snapshots: Sequence[Snapshot], levels: Dict[str, Label], measure: str = "eigenvector") -> GroupMedians:
    """Median of `measure` per listing tier in every snapshot (journals present that year only)."""
    _check_snapshots(snapshots)
    out: Dict[int, Dict[DanishLevel, float]] = {}
    for snap in snapshots:
        groups: Dict[DanishLevel, List[float]] = {}
        for journal, score in snap.report.scores[measure].items():
            if journal not in levels:
                continue
            groups.setdefault(listing_tier(levels[journal]), []).append(score)
        out[snap.year] = {lv: float(np.median(vals)) for lv, vals in sorted(groups.items()) if vals}
    return GroupMedians(out)


class Policy:
    def __init__(self, decline_delta: float = DEFAULT_DECLINE_DELTA, promotion_window: int = DEFAULT_PROMOTION_WINDOW):
        if decline_delta < 0 or promotion_window < 1:
            raise ValueError("decline_delta must be >= 0 and promotion_window >= 1")
        self.decline_delta = float(decline_delta)
        self.promotion_window = int(promotion_window)

    def to_dict(self) -> Dict:
        return {"decline_delta": self.decline_delta, "promotion_window": self.promotion_window}

    @classmethod
    def from_dict(cls, data: Dict) -> "Policy":
        return cls(float(data.get("decline_delta", DEFAULT_DECLINE_DELTA)),
                   int(data.get("promotion_window", DEFAULT_PROMOTION_WINDOW)))

    def __repr__(self):
        return f"<Policy {self.to_dict()}>"


class Recommendation:
    def __init__(self, journal: str, action: str, evidence: Dict):
        self.journal = journal
        self.action = action
        self.evidence = evidence

    def to_dict(self) -> Dict:
        return {"journal": self.journal, "action": self.action, "evidence": dict(self.evidence)}

    def __eq__(self, other):
        if not isinstance(other, Recommendation):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self):
        return f"<Recommendation {self.journal}: {self.action}>"


def recommend(
    series: EvolutionSeries,
    current: Label,
    group_medians: GroupMedians,
    policy: Optional[Policy] = None,
) -> Recommendation:
    """Remove > PromoteLevel2 > IntroduceLevel1 > Stay, first matching rule wins."""
    policy = policy or Policy()
    if not series.points:
        raise UnknownJournal(f"Series for '{series.journal}' is empty.")
    tier = listing_tier(current)
    latest = series.latest
    l1 = group_medians.get(latest.year, DanishLevel.LEVEL1)
    l2 = group_medians.get(latest.year, DanishLevel.LEVEL2)
    if l1 is None or l2 is None:
        raise MissingMedians(f"No level-1/level-2 medians for {latest.year} (journal '{series.journal}').")

    delta = series.delta_over_window()
    evidence = {
        "latest_eigenvector": latest.eigenvector,
        "level2_median": l2,
        "level1_median": l1,
        "delta_over_window": delta,
        "present_latest": latest.present,
    }

    if not latest.present:
        action = REMOVE
    elif delta is not None and delta < -policy.decline_delta and latest.eigenvector < l1:
        action = REMOVE
    elif tier == DanishLevel.LEVEL1 and _clears_level2(series, group_medians, policy.promotion_window):
        action = PROMOTE_LEVEL2
    elif tier == DanishLevel.NOT_LISTED and latest.eigenvector >= l1:
        action = INTRODUCE_LEVEL1
    else:
        action = STAY
    return Recommendation(series.journal, action, evidence)


def _clears_level2(series: EvolutionSeries, medians: GroupMedians, window: int) -> bool:
    tail = series.points[-window:]
    if len(tail) < window:
        return False
    for p in tail:
        m = medians.get(p.year, DanishLevel.LEVEL2)
        if not p.present or m is None or p.eigenvector < m:
            return False
    return True


def recommend_all(
    series: Iterable[EvolutionSeries],
    current: Dict[str, Label],
    medians: GroupMedians,
    policy: Optional[Policy] = None,
) -> List[Recommendation]:
    """Recommendations for every series, sorted by journal; unlisted journals count as NotListed."""
    out = [recommend(s, current.get(s.journal, DanishLevel.NOT_LISTED), medians, policy) for s in series]
    return sorted(out, key=lambda r: r.journal)
