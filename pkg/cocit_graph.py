import logging
from collections import Counter
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Tuple

from bib_ingest import BibRecord, Normalizer, cited_journals
from errors import EmptyResult

logger = logging.getLogger(__name__)

DEFAULT_MIN_CITATIONS = 111
DEFAULT_TOP_N = 151

Pair = Tuple[str, str]


def edge_key(a: str, b: str) -> Pair:
    """Unordered pair key; the smaller name comes first."""
    return (a, b) if a <= b else (b, a)


def _count(value) -> float:
    # Pajek-derived networks carry weighted degree, which may be fractional
    x = float(value)
    return int(x) if x.is_integer() else x


class ThresholdConfig:
    def __init__(self, min_citations: int = DEFAULT_MIN_CITATIONS, top_n: int = DEFAULT_TOP_N):
        if int(min_citations) < 1 or int(top_n) < 1:
            raise ValueError("min_citations and top_n must both be >= 1")
        self.min_citations = int(min_citations)
        self.top_n = int(top_n)

    def __repr__(self):
        return f"<ThresholdConfig min_citations={self.min_citations} top_n={self.top_n}>"


class ThresholdReport:
    def __init__(self, retained: int, total: int, eligible: int):
        self.retained = retained
        self.total = total
        self.eligible = eligible

    def __repr__(self):
        return f"<ThresholdReport retained={self.retained}/{self.total} eligible={self.eligible}>"


class CoCitationNetwork:
    """Undirected weighted co-citation graph over canonical journal names.

    Nodes and edges are kept in name order so that two networks with the same
    content are identical regardless of how they were built.
    """

    def __init__(
        self,
        nodes: Dict[str, int],
        edges: Dict[Pair, float],
        year_label: int = 0,
        lossy: bool = False,
    ):
        self.nodes: Dict[str, int] = {name: nodes[name] for name in sorted(nodes)}
        clean: Dict[Pair, float] = {}
        for (a, b), w in edges.items():
            if a == b:
                continue
            key = edge_key(a, b)
            clean[key] = clean.get(key, 0) + w
        self.edges: Dict[Pair, float] = {k: clean[k] for k in sorted(clean)}
        self.year_label = int(year_label)
        self.lossy = lossy
        self.threshold_report: Optional[ThresholdReport] = None
        self._adj: Optional[Dict[str, Dict[str, float]]] = None

    @property
    def names(self) -> List[str]:
        return list(self.nodes)

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, name: str) -> bool:
        return name in self.nodes

    def weight(self, a: str, b: str) -> float:
        return self.edges.get(edge_key(a, b), 0)

    def neighbors(self) -> Dict[str, Dict[str, float]]:
        """Adjacency map name -> {neighbour: weight}, neighbours in name order."""
        if self._adj is None:
            adj: Dict[str, Dict[str, float]] = {n: {} for n in self.nodes}
            for (a, b), w in self.edges.items():
                adj[a][b] = w
                adj[b][a] = w
            self._adj = {n: dict(sorted(nb.items())) for n, nb in adj.items()}
        return self._adj

    def weighted_degree(self, name: str) -> float:
        return sum(self.neighbors()[name].values())

    def __eq__(self, other):
        if not isinstance(other, CoCitationNetwork):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.edges == other.edges
            and self.year_label == other.year_label
        )

    def __repr__(self):
        return f"<CoCitationNetwork year={self.year_label} nodes={len(self.nodes)} edges={len(self.edges)}>"

    def to_dict(self) -> Dict:
        return {
            "year": self.year_label,
            "nodes": [{"name": n, "citations": c} for n, c in self.nodes.items()],
            "edges": [{"a": a, "b": b, "w": w} for (a, b), w in self.edges.items()],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "CoCitationNetwork":
        nodes = {str(n["name"]): _count(n["citations"]) for n in data.get("nodes", [])}
        edges: Dict[Pair, float] = {}
        for e in data.get("edges", []):
            key = edge_key(str(e["a"]), str(e["b"]))
            edges[key] = edges.get(key, 0) + e["w"]
        return cls(nodes, edges, int(data.get("year", 0)))


def count_citations(records: Iterable[BibRecord], canon: Normalizer) -> Dict[str, int]:
    """Citing-document counts per journal; one record adds at most 1 to a journal."""
    counts: Counter = Counter()
    for rec in records:
        counts.update(cited_journals(rec, canon))
    return dict(counts)


def _corpus_year(records: List[BibRecord]) -> int:
    return max((r.pub_year for r in records), default=0)


def build_cocitation(
    records: Iterable[BibRecord],
    canon: Normalizer,
    year_label: Optional[int] = None,
) -> CoCitationNetwork:
    """Unthresholded co-citation network with per-document binary counting."""
    records = list(records)
    counts: Counter = Counter()
    pairs: Counter = Counter()
    for rec in records:
        journals = sorted(cited_journals(rec, canon))
        counts.update(journals)
        pairs.update(combinations(journals, 2))
    year = year_label if year_label is not None else _corpus_year(records)
    net = CoCitationNetwork(dict(counts), dict(pairs), year)
    logger.debug(f"Built {net!r} from {len(records)} records.")
    return net


def apply_threshold(net: CoCitationNetwork, cfg: Optional[ThresholdConfig] = None) -> CoCitationNetwork:
    """Keep journals with >= min_citations, capped at top_n by (count desc, name asc)."""
    cfg = cfg or ThresholdConfig()
    eligible = [(n, c) for n, c in net.nodes.items() if c >= cfg.min_citations]
    if not eligible:
        raise EmptyResult(
            f"No journal reaches the citation threshold of {cfg.min_citations} "
            f"(highest count is {max(net.nodes.values(), default=0)})."
        )
    eligible.sort(key=lambda nc: (-nc[1], nc[0]))
    kept = dict(eligible[: cfg.top_n])
    edges = {k: w for k, w in net.edges.items() if k[0] in kept and k[1] in kept}
    out = CoCitationNetwork(kept, edges, net.year_label, net.lossy)
    out.threshold_report = ThresholdReport(len(kept), len(net.nodes), len(eligible))
    logger.info(
        f"Threshold {cfg.min_citations}/top {cfg.top_n}: kept {len(kept)} of {len(net.nodes)} journals "
        f"({len(eligible)} met the threshold), {len(edges)} edges."
    )
    return out
