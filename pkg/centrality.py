import heapq
import logging
from collections import deque
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from cocit_graph import CoCitationNetwork
from errors import DegenerateInput, NoConvergence

logger = logging.getLogger(__name__)

BINARY = "binary"
WEIGHTED = "weighted"
INVERSE_WEIGHT = "inverse_weight"

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10000
BIN_DECIMALS = 12

MEASURES = ("degree", "weighted_degree", "closeness", "betweenness", "eigenvector")
QUARTILES = ("Q1", "Q2", "Q3", "Q4")

DEFAULT_MODES = {
    "degree": WEIGHTED,
    "closeness": BINARY,
    "betweenness": BINARY,
    "eigenvector": WEIGHTED,
}


def _check_mode(mode: str, allowed: Tuple[str, ...]) -> str:
    if mode not in allowed:
        raise ValueError(f"mode must be one of {', '.join(allowed)}, got '{mode}'")
    return mode


def degree_centrality(net: CoCitationNetwork, weighted: bool = False) -> Dict[str, float]:
    adj = net.neighbors()
    if weighted:
        return {n: sum(nb.values()) for n, nb in adj.items()}
    return {n: len(nb) for n, nb in adj.items()}


def _edge_length(w: float, mode: str) -> float:
    return 1.0 if mode == BINARY else 1.0 / w


def _single_source_bfs(adj: Dict[str, Dict[str, float]], s: str):
    """Unit-length shortest paths: (visit stack, predecessors, path counts, distances)."""
    stack: List[str] = []
    preds: Dict[str, List[str]] = {s: []}
    sigma: Dict[str, float] = {s: 1.0}
    dist: Dict[str, float] = {s: 0}
    queue = deque([s])
    while queue:
        v = queue.popleft()
        stack.append(v)
        dv = dist[v]
        for w in adj[v]:
            if w not in dist:
                dist[w] = dv + 1
                queue.append(w)
                preds[w] = []
                sigma[w] = 0.0
            if dist[w] == dv + 1:
                sigma[w] += sigma[v]
                preds[w].append(v)
    return stack, preds, sigma, dist


def _single_source_dijkstra(adj: Dict[str, Dict[str, float]], s: str, mode: str):
    """Weighted shortest paths with edge length 1/weight."""
    stack: List[str] = []
    preds: Dict[str, List[str]] = {s: []}
    sigma: Dict[str, float] = {s: 1.0}
    dist: Dict[str, float] = {}
    seen: Dict[str, float] = {s: 0.0}
    order = 0
    heap = [(0.0, order, s, s)]
    while heap:
        d, _, pred, v = heapq.heappop(heap)
        if v in dist:
            continue
        sigma[v] += sigma[pred] if pred != v else 0.0
        stack.append(v)
        dist[v] = d
        for w, weight in adj[v].items():
            vw = d + _edge_length(weight, mode)
            if w not in dist and (w not in seen or vw < seen[w]):
                seen[w] = vw
                order += 1
                heapq.heappush(heap, (vw, order, v, w))
                sigma[w] = 0.0
                preds[w] = [v]
            elif vw == seen.get(w):
                sigma[w] += sigma[v]
                preds[w].append(v)
    return stack, preds, sigma, dist


def _shortest_paths(adj, s: str, mode: str):
    if mode == BINARY:
        return _single_source_bfs(adj, s)
    return _single_source_dijkstra(adj, s, mode)


def closeness_centrality(net: CoCitationNetwork, mode: str = BINARY) -> Dict[str, float]:
    """Component-scaled closeness: (m-1)/sum(d) * (m-1)/(n-1)."""
    _check_mode(mode, (BINARY, INVERSE_WEIGHT))
    adj = net.neighbors()
    n = len(adj)
    out: Dict[str, float] = {}
    for v in adj:
        _, _, _, dist = _shortest_paths(adj, v, mode)
        total = sum(dist.values())
        m = len(dist)
        if total > 0 and n > 1:
            out[v] = ((m - 1) / total) * ((m - 1) / (n - 1))
        else:
            out[v] = 0.0
    return out


def betweenness_centrality(
    net: CoCitationNetwork,
    mode: str = BINARY,
    normalized: bool = False,
) -> Dict[str, float]:
    """Brandes pair-dependency accumulation over every source in name order."""
    _check_mode(mode, (BINARY, INVERSE_WEIGHT))
    adj = net.neighbors()
    bc: Dict[str, float] = {v: 0.0 for v in adj}
    for s in adj:
        stack, preds, sigma, _ = _shortest_paths(adj, s, mode)
        delta: Dict[str, float] = {v: 0.0 for v in stack}
        while stack:
            w = stack.pop()
            coeff = (1.0 + delta[w]) / sigma[w]
            for v in preds[w]:
                delta[v] += sigma[v] * coeff
            if w != s:
                bc[w] += delta[w]
    n = len(adj)
    # each unordered pair was counted from both ends
    scale = 0.5
    if normalized and n > 2:
        scale = 1.0 / ((n - 1) * (n - 2))
    return {v: b * scale for v, b in bc.items()}


def _components(adj: Dict[str, Dict[str, float]]) -> List[List[str]]:
    seen = set()
    comps: List[List[str]] = []
    for s in adj:
        if s in seen:
            continue
        comp = []
        queue = deque([s])
        seen.add(s)
        while queue:
            v = queue.popleft()
            comp.append(v)
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        comps.append(comp)
    return comps


def adjacency_matrix(net: CoCitationNetwork, weighted: bool = True) -> np.ndarray:
    index = {name: i for i, name in enumerate(net.names)}
    a = np.zeros((len(index), len(index)), dtype=float)
    for (u, v), w in net.edges.items():
        val = float(w) if weighted else 1.0
        a[index[u], index[v]] = val
        a[index[v], index[u]] = val
    return a


class EigenResult:
    def __init__(self, scores: Dict[str, float], eigenvalue: float, iterations: int, residual: float, disconnected: bool):
        self.scores = scores
        self.eigenvalue = eigenvalue
        self.iterations = iterations
        self.residual = residual
        self.disconnected = disconnected

    def __repr__(self):
        return (f"<EigenResult lambda={self.eigenvalue:.6g} iterations={self.iterations} "
                f"residual={self.residual:.3g} disconnected={self.disconnected}>")


def eigenvector_power_iteration(
    net: CoCitationNetwork,
    mode: str = WEIGHTED,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EigenResult:
    """Principal eigenvector of the adjacency matrix by power iteration.

    Iterates on B + I with B = A / s, s the largest weighted degree. The shift keeps
    bipartite graphs from oscillating, and the scaling makes `tol` a relative residual
    bound. Start vector is uniform.
    """
    _check_mode(mode, (BINARY, WEIGHTED))
    if len(net) == 0:
        raise DegenerateInput("Eigenvector centrality needs a non-empty network.")
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be > 0 and max_iter >= 1")

    a = adjacency_matrix(net, weighted=(mode == WEIGHTED))
    n = a.shape[0]
    s = float(a.sum(axis=1).max())
    b = a / s if s > 0 else a
    v = np.full(n, 1.0 / np.sqrt(n))
    residual = np.inf
    mu = 0.0
    iterations = 0
    for iterations in range(1, max_iter + 1):
        y = b @ v + v
        v = y / np.linalg.norm(y)
        bv = b @ v
        mu = float(v @ bv)
        residual = float(np.linalg.norm(bv - mu * v))
        if residual <= tol:
            break
    else:
        raise NoConvergence(
            f"Power iteration did not converge in {max_iter} iterations (residual {residual:.3g} > {tol:g}).",
            iterations=max_iter,
            residual=residual,
        )

    v = np.abs(v)
    v = v / np.linalg.norm(v)
    disconnected = len(_components(net.neighbors())) > 1
    if disconnected:
        logger.warning(
            "Network is disconnected; eigenvector mass concentrates on the dominant component."
        )
    scores = {name: float(x) for name, x in zip(net.names, v)}
    return EigenResult(scores, mu * s if s > 0 else 0.0, iterations, residual, disconnected)


def eigenvector_centrality(
    net: CoCitationNetwork,
    mode: str = WEIGHTED,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> Dict[str, float]:
    return eigenvector_power_iteration(net, mode, tol, max_iter).scores


class QuartileAssignment:
    """Value-threshold quartile bins; Q1 holds the highest scores and ties share a bin."""

    def __init__(self, bins: Dict[str, str], thresholds: Tuple[float, float, float]):
        self.bins = bins
        self.thresholds = thresholds

    def members(self, q: str) -> List[str]:
        return sorted(n for n, b in self.bins.items() if b == q)

    def sizes(self) -> Dict[str, int]:
        return {q: len(self.members(q)) for q in QUARTILES}

    def __getitem__(self, name: str) -> str:
        return self.bins[name]

    def __contains__(self, name: str) -> bool:
        return name in self.bins

    def __repr__(self):
        return f"<QuartileAssignment sizes={self.sizes()} thresholds={self.thresholds}>"


def quartile_bins(scores: Dict[str, float]) -> QuartileAssignment:
    if not scores:
        raise DegenerateInput("Quartile binning needs at least one score.")
    # scores equal up to power-iteration noise share a bin
    values = np.round(np.array(list(scores.values()), dtype=float), BIN_DECIMALS)
    t75, t50, t25 = (float(x) for x in np.percentile(values, [75, 50, 25]))
    bins: Dict[str, str] = {}
    for name, score in zip(scores, values):
        if score >= t75:
            bins[name] = "Q1"
        elif score >= t50:
            bins[name] = "Q2"
        elif score >= t25:
            bins[name] = "Q3"
        else:
            bins[name] = "Q4"
    return QuartileAssignment(bins, (t75, t50, t25))


class CentralityReport:
    def __init__(self, names: Iterable[str]):
        self.names: List[str] = sorted(names)
        self.scores: Dict[str, Dict[str, float]] = {m: {} for m in MEASURES}
        self.modes: Dict[str, str] = {}
        self.tol: Optional[float] = None
        self.iterations: Optional[int] = None
        self.eigenvalue: Optional[float] = None
        self.disconnected = False

    @property
    def measures(self) -> List[str]:
        return [m for m in MEASURES if self.scores[m]]

    def column(self, measure: str) -> Dict[str, float]:
        return self.scores[measure]

    def row(self, name: str) -> Dict[str, Optional[float]]:
        return {m: self.scores[m].get(name) for m in MEASURES}

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame({m: [self.scores[m].get(n) for n in self.names] for m in self.measures}, index=self.names)
        df.index.name = "journal"
        return df

    def metadata(self) -> Dict:
        return {
            "modes": dict(self.modes),
            "tol": self.tol,
            "iterations": self.iterations,
            "eigenvalue": self.eigenvalue,
            "disconnected": self.disconnected,
        }

    def __repr__(self):
        return f"<CentralityReport nodes={len(self.names)} measures={self.measures}>"


def compute_report(
    net: CoCitationNetwork,
    measures: Iterable[str] = ("degree", "closeness", "betweenness", "eigenvector"),
    modes: Optional[Dict[str, str]] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    normalized: bool = False,
) -> CentralityReport:
    """Run the requested measures and gather scores plus run metadata."""
    chosen = dict(DEFAULT_MODES)
    chosen.update(modes or {})
    report = CentralityReport(net.names)
    for m in measures:
        if m == "degree":
            report.scores["degree"] = degree_centrality(net, weighted=False)
            report.scores["weighted_degree"] = degree_centrality(net, weighted=True)
            report.modes["degree"] = chosen["degree"]
        elif m == "closeness":
            report.scores["closeness"] = closeness_centrality(net, mode=chosen["closeness"])
            report.modes["closeness"] = chosen["closeness"]
        elif m == "betweenness":
            report.scores["betweenness"] = betweenness_centrality(net, mode=chosen["betweenness"], normalized=normalized)
            report.modes["betweenness"] = chosen["betweenness"]
        elif m == "eigenvector":
            res = eigenvector_power_iteration(net, chosen["eigenvector"], tol, max_iter)
            report.scores["eigenvector"] = res.scores
            report.modes["eigenvector"] = chosen["eigenvector"]
            report.tol = tol
            report.iterations = res.iterations
            report.eigenvalue = res.eigenvalue
            report.disconnected = res.disconnected
        else:
            raise ValueError(f"Unknown measure '{m}'")
    return report


class CorrelationMatrix:
    def __init__(self, pearson: pd.DataFrame, spearman: pd.DataFrame, undefined: List[str]):
        self.pearson = pearson
        self.spearman = spearman
        self.undefined = undefined

    def __repr__(self):
        return f"<CorrelationMatrix measures={list(self.pearson.columns)} undefined={self.undefined}>"


def _tidy_corr(corr: pd.DataFrame, undefined: List[str]) -> pd.DataFrame:
    corr = corr.clip(lower=-1.0, upper=1.0)
    for m in corr.columns:
        if m in undefined:
            corr.loc[m, :] = np.nan
            corr.loc[:, m] = np.nan
        else:
            corr.loc[m, m] = 1.0
    return corr


def correlate_measures(report: CentralityReport) -> CorrelationMatrix:
    """Pairwise Pearson and Spearman coefficients between the report's measures."""
    if len(report.names) < 3:
        raise DegenerateInput(f"Correlation needs at least 3 nodes, got {len(report.names)}.")
    df = report.to_frame().astype(float)
    undefined = [m for m in df.columns if df[m].nunique(dropna=True) <= 1]
    for m in undefined:
        logger.warning(f"Measure '{m}' is constant across nodes; its correlations are undefined.")
    pearson = _tidy_corr(df.corr(method="pearson"), undefined)
    spearman = _tidy_corr(df.corr(method="spearman"), undefined)
    return CorrelationMatrix(pearson, spearman, undefined)
