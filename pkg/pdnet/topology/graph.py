"""
Undirected communication graphs over m agents.

Graphs are immutable values. Generators cover the topologies used in experiments;
random ones are seeded and retried deterministically until connected.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, FrozenSet, Iterable, List, Tuple, Union

import networkx as nx
import numpy as np
from numpy.typing import NDArray

from ..errors import GraphError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]

# Seeded generators retry this many consecutive seeds before giving up.
MAX_CONNECT_ATTEMPTS = 100


def _normalize_edges(m: int, edges: Iterable[Edge]) -> FrozenSet[Edge]:
    normalized: List[Edge] = []
    for raw in edges:
        i, j = int(raw[0]), int(raw[1])
        if i == j:
            raise GraphError(f"self-loop on node {i}")
        if not (0 <= i < m and 0 <= j < m):
            raise GraphError(f"edge {{{i}, {j}}} out of range for m={m}")
        normalized.append((min(i, j), max(i, j)))

    unique = frozenset(normalized)
    if len(unique) != len(normalized):
        raise GraphError("duplicate edges")
    return unique


@dataclass(frozen=True)
class Graph:
    """
    Undirected static graph on nodes 0..m-1.

    Attributes:
        m: Number of agents.
        edges: Unordered pairs stored as (i, j) with i < j.
    """

    m: int
    edges: FrozenSet[Edge] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.m < 1:
            raise GraphError(f"graph needs at least one node, got m={self.m}")
        object.__setattr__(self, "edges", _normalize_edges(self.m, self.edges))

    # Structure

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.m))
        g.add_edges_from(self.edges)
        return g

    def degrees(self) -> NDArray[np.int64]:
        deg = np.zeros(self.m, dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def adjacency(self) -> NDArray[np.float64]:
        adj = np.zeros((self.m, self.m))
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = 1.0
        return adj

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    @property
    def component_count(self) -> int:
        return nx.number_connected_components(self.to_networkx())

    @property
    def is_connected(self) -> bool:
        return self.component_count == 1

    def require_connected(self) -> "Graph":
        """Return self, or raise GraphError naming the number of components."""
        count = self.component_count
        if count != 1:
            raise GraphError(f"graph is disconnected: {count} connected components")
        return self

    def with_isolated_node(self) -> "Graph":
        """Append one node with no edges."""
        return Graph(self.m + 1, self.edges)

    # Generators

    @classmethod
    def from_edges(cls, m: int, edges: Iterable[Edge]) -> "Graph":
        """Build a graph, rejecting self-loops, duplicates and out-of-range nodes."""
        return cls(m, _normalize_edges(m, edges))

    @classmethod
    def from_networkx(cls, g: nx.Graph) -> "Graph":
        relabeled = nx.convert_node_labels_to_integers(g, ordering="sorted")
        edges = frozenset((int(i), int(j)) for i, j in relabeled.edges())
        return cls(relabeled.number_of_nodes(), edges)

    @classmethod
    def ring(cls, m: int) -> "Graph":
        if m < 2:
            raise GraphError(f"ring needs m >= 2, got {m}")
        if m == 2:
            return cls(2, frozenset({(0, 1)}))
        return cls.from_networkx(nx.cycle_graph(m))

    @classmethod
    def path(cls, m: int) -> "Graph":
        return cls.from_networkx(nx.path_graph(m))

    @classmethod
    def complete(cls, m: int) -> "Graph":
        return cls.from_networkx(nx.complete_graph(m))

    @classmethod
    def star(cls, m: int) -> "Graph":
        # networkx.star_graph(n) has n + 1 nodes
        return cls.from_networkx(nx.star_graph(m - 1))

    @classmethod
    def random_geometric(cls, m: int, radius: float, seed: int) -> "Graph":
        return cls._first_connected(
            lambda s: nx.random_geometric_graph(m, radius, seed=s), seed, "random_geometric"
        )

    @classmethod
    def erdos_renyi(cls, m: int, p: float, seed: int) -> "Graph":
        return cls._first_connected(
            lambda s: nx.gnp_random_graph(m, p, seed=s), seed, "erdos_renyi"
        )

    @classmethod
    def _first_connected(
        cls, build: Callable[[int], nx.Graph], seed: int, name: str
    ) -> "Graph":
        for attempt in range(MAX_CONNECT_ATTEMPTS):
            g = build(seed + attempt)
            if nx.is_connected(g):
                if attempt:
                    logger.debug(
                        "%s: seed %d connected after %d retries", name, seed + attempt, attempt
                    )
                return cls.from_networkx(g)
        raise GraphError(
            f"{name}: no connected sample in {MAX_CONNECT_ATTEMPTS} seeds from {seed}"
        )

    # Edge-list files: first line m, then one "i j" pair per line

    @classmethod
    def parse_edge_list(cls, text: str) -> "Graph":
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        if not lines:
            raise GraphError("empty edge list")
        try:
            m = int(lines[0])
            edges: List[Edge] = []
            for ln in lines[1:]:
                i, j = ln.split()
                edges.append((int(i), int(j)))
        except ValueError as e:
            raise GraphError(f"malformed edge list: {e}")
        return cls.from_edges(m, edges)

    def format_edge_list(self) -> str:
        rows = [str(self.m)] + [f"{i} {j}" for i, j in sorted(self.edges)]
        return "\n".join(rows) + "\n"

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Graph":
        return cls.parse_edge_list(Path(path).read_text(encoding="utf-8"))

    def dump(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.format_edge_list(), encoding="utf-8")
