import os
import sys
from typing import Dict, Iterable, Tuple

import networkx as nx
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from cocit_graph import CoCitationNetwork, edge_key  # noqa: E402


def make_net(edges: Dict[Tuple[str, str], float], isolated: Iterable[str] = (), year: int = 2015) -> CoCitationNetwork:
    """Network whose citation counts are the weighted degrees (so every invariant holds)."""
    counts: Dict[str, float] = {n: 0 for n in isolated}
    for (a, b), w in edges.items():
        counts[a] = counts.get(a, 0) + w
        counts[b] = counts.get(b, 0) + w
    return CoCitationNetwork(counts, {edge_key(a, b): w for (a, b), w in edges.items()}, year)


def from_nx(g: nx.Graph, weight: str = "weight", year: int = 2015) -> CoCitationNetwork:
    names = {n: f"J{n:03d}" for n in g.nodes}
    edges = {(names[u], names[v]): d.get(weight, 1) for u, v, d in g.edges(data=True)}
    return make_net(edges, isolated=names.values(), year=year)


def to_nx(net: CoCitationNetwork) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(net.names)
    for (a, b), w in net.edges.items():
        g.add_edge(a, b, weight=w, length=1.0 / w)
    return g


def complete_net(n: int, weight: float = 1) -> CoCitationNetwork:
    names = [f"J{i}" for i in range(n)]
    return make_net({(a, b): weight for i, a in enumerate(names) for b in names[i + 1:]})


def star_net(leaves: int) -> CoCitationNetwork:
    return make_net({("CENTER", f"LEAF{i}"): 1 for i in range(leaves)})


def random_connected(n: int, seed: int, weighted: bool = True, p: float = 0.4) -> nx.Graph:
    """Connected G(n, p) graph; integer weights 1..9 when weighted."""
    rng_seed = seed
    while True:
        g = nx.gnp_random_graph(n, p, seed=rng_seed)
        if nx.is_connected(g):
            break
        rng_seed += 1000
    for i, (u, v) in enumerate(sorted(g.edges)):
        g[u][v]["weight"] = ((seed * 31 + i * 7) % 9) + 1 if weighted else 1
    return g


@pytest.fixture
def triangle_plus_tail():
    return make_net({("A", "B"): 2, ("B", "C"): 1, ("A", "C"): 1, ("C", "D"): 3})
