"""Network topology model, named generators, and the edge-list text format.

Nodes are 0-indexed integers. A :class:`Topology` is an undirected simple
graph; every undirected edge carries two directed links, one per direction,
because each endpoint tracks the freshness of updates from the other.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple


class DirectedLink(NamedTuple):
    """Information flow from ``sender`` to ``receiver`` along one edge."""

    receiver: int
    sender: int


class EdgeListParseError(ValueError):
    """Raised for malformed edge-list text; carries the offending line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Topology:
    """Undirected simple graph over ``n`` nodes.

    ``edges`` is canonicalized to a sorted tuple of ``(u, v)`` pairs with
    ``u < v``. Instances are immutable and safe to share across threads.
    Self-loops, duplicate edges, and out-of-range indices are rejected.
    """

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"node count must be >= 1, got {self.n}")
        canonical = []
        seen = set()
        for e in self.edges:
            u, v = e
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge {e} out of range for n={self.n}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            canonical.append(key)
        object.__setattr__(self, "edges", tuple(sorted(canonical)))

    @cached_property
    def _adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(b)) for b in nbrs)

    def neighbors(self, i: int) -> list[int]:
        """Sorted neighbor list of node ``i``."""
        if not (0 <= i < self.n):
            raise IndexError(f"node {i} out of range for n={self.n}")
        return list(self._adjacency[i])

    def degree(self, i: int) -> int:
        if not (0 <= i < self.n):
            raise IndexError(f"node {i} out of range for n={self.n}")
        return len(self._adjacency[i])

    def degrees(self) -> list[int]:
        return [len(b) for b in self._adjacency]

    def max_degree(self) -> int:
        return max((len(b) for b in self._adjacency), default=0)

    def is_regular(self, d: int) -> bool:
        """True iff every node has exactly ``d`` neighbors."""
        return all(len(b) == d for b in self._adjacency)

    def directed_links(self) -> tuple[DirectedLink, ...]:
        """All directed links, sorted by (receiver, sender); two per edge."""
        links = []
        for u, v in self.edges:
            links.append(DirectedLink(receiver=u, sender=v))
            links.append(DirectedLink(receiver=v, sender=u))
        return tuple(sorted(links))

    def has_link(self, link: DirectedLink) -> bool:
        i, j = link
        return (
            0 <= i < self.n
            and 0 <= j < self.n
            and j in self._adjacency[i]
        )


def make_line(n: int) -> Topology:
    """Path graph: nodes 0..n-1 chained; endpoints have degree 1."""
    if n < 1:
        raise ValueError(f"line topology needs n >= 1, got {n}")
    return Topology(n, tuple((k, k + 1) for k in range(n - 1)))


def make_ring(n: int) -> Topology:
    """Cycle graph; every node has degree 2. Requires n >= 3."""
    if n < 3:
        raise ValueError(f"ring topology needs n >= 3, got {n}")
    return Topology(n, tuple((k, (k + 1) % n) for k in range(n)))


def make_star(n: int) -> Topology:
    """Hub node 0 connected to every other node; no leaf-leaf edges."""
    if n < 2:
        raise ValueError(f"star topology needs n >= 2, got {n}")
    return Topology(n, tuple((0, k) for k in range(1, n)))


def make_grid(rows: int, cols: int) -> Topology:
    """4-neighbor lattice; node (r, c) is index r*cols + c."""
    if rows < 1 or cols < 1:
        raise ValueError(f"grid needs positive dimensions, got {rows}x{cols}")
    edges = []
    for r in range(rows):
        for c in range(cols):
            k = r * cols + c
            if c + 1 < cols:
                edges.append((k, k + 1))
            if r + 1 < rows:
                edges.append((k, k + cols))
    return Topology(rows * cols, tuple(edges))


def make_complete(n: int) -> Topology:
    """All n(n-1)/2 edges present."""
    if n < 2:
        raise ValueError(f"complete topology needs n >= 2, got {n}")
    return Topology(n, tuple((u, v) for u in range(n) for v in range(u + 1, n)))


def make_tree6() -> Topology:
    """6-node tree preset: root 0, children 1 and 2, grandchildren 3 (under 1)
    and 4, 5 (under 2)."""
    return Topology(6, ((0, 1), (0, 2), (1, 3), (2, 4), (2, 5)))


def make_asym_star6() -> Topology:
    """6-node asymmetric star preset: star on 5 nodes plus node 5 hanging off
    leaf 1."""
    return Topology(6, ((0, 1), (0, 2), (0, 3), (0, 4), (1, 5)))


def make_asym_circle6() -> Topology:
    """6-node asymmetric circle preset: 5-ring plus pendant node 5 on node 0."""
    return Topology(6, ((0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (0, 5)))


_GRID_RE = re.compile(r"^(\d+)x(\d+)$")


def from_spec(spec: str) -> Topology:
    """Build a topology from a ``name:params`` string.

    Supported: ``line:N``, ``ring:N``, ``star:N``, ``complete:N``,
    ``grid:RxC``, and the fixed presets ``tree6``, ``astar6``, ``acircle6``.
    """
    presets = {
        "tree6": make_tree6,
        "astar6": make_asym_star6,
        "acircle6": make_asym_circle6,
    }
    if spec in presets:
        return presets[spec]()
    name, sep, arg = spec.partition(":")
    if not sep:
        raise ValueError(f"unknown topology spec {spec!r}")
    if name == "grid":
        m = _GRID_RE.match(arg)
        if not m:
            raise ValueError(f"grid spec must look like grid:RxC, got {spec!r}")
        return make_grid(int(m.group(1)), int(m.group(2)))
    makers = {
        "line": make_line,
        "ring": make_ring,
        "star": make_star,
        "complete": make_complete,
    }
    if name not in makers:
        raise ValueError(f"unknown topology spec {spec!r}")
    try:
        size = int(arg)
    except ValueError:
        raise ValueError(f"topology size must be an integer, got {spec!r}") from None
    return makers[name](size)


def serialize(t: Topology) -> str:
    """Edge-list text: first line is the node count, then one ``u v`` line per
    edge in canonical order."""
    lines = [str(t.n)]
    lines.extend(f"{u} {v}" for u, v in t.edges)
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Topology:
    """Parse the edge-list text format.

    Blank lines and lines starting with ``#`` are ignored. The first
    significant line is the node count; every following significant line is
    ``u v`` with two 0-indexed node ids. Raises :class:`EdgeListParseError`
    (with the 1-based line number) on malformed lines, out-of-range indices,
    self-loops, or duplicate edges.
    """
    n: int | None = None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n is None:
            try:
                n = int(line)
            except ValueError:
                raise EdgeListParseError(lineno, f"expected node count, got {line!r}")
            if n < 1:
                raise EdgeListParseError(lineno, f"node count must be >= 1, got {n}")
            continue
        parts = line.split()
        if len(parts) != 2:
            raise EdgeListParseError(lineno, f"expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListParseError(lineno, f"node ids must be integers, got {line!r}")
        if u == v:
            raise EdgeListParseError(lineno, f"self-loop on node {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise EdgeListParseError(lineno, f"edge ({u}, {v}) out of range for n={n}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise EdgeListParseError(lineno, f"duplicate edge {key}")
        seen.add(key)
        edges.append(key)
    if n is None:
        raise EdgeListParseError(1, "empty edge-list input")
    return Topology(n, tuple(edges))
