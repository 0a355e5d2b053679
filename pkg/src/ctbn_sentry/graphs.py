"""Directed-graph queries for process dependence structure.

Covers parent/closure/ancestor queries, moralization, separation, graph
partitions, condensation into strongly connected components, and the
conditional-independence certificates those constructions license for
interacting event processes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping

NodeSet = frozenset


class DiGraph:
    """Immutable directed graph; cycles allowed, self-loops and duplicates not."""

    def __init__(self, nodes: Iterable[str], edges: Iterable[tuple[str, str]] = ()):
        self.nodes: tuple[str, ...] = tuple(nodes)
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate node names")
        node_set = set(self.nodes)
        seen: set[tuple[str, str]] = set()
        ordered: list[tuple[str, str]] = []
        self._parents: dict[str, set[str]] = {n: set() for n in self.nodes}
        self._children: dict[str, set[str]] = {n: set() for n in self.nodes}
        for u, v in edges:
            if u not in node_set or v not in node_set:
                raise ValueError(f"edge ({u!r}, {v!r}) references unknown node")
            if u == v:
                raise ValueError(f"self-loop at {u!r}")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u!r}, {v!r})")
            seen.add((u, v))
            ordered.append((u, v))
            self._parents[v].add(u)
            self._children[u].add(v)
        self.edges: tuple[tuple[str, str], ...] = tuple(ordered)

    def parents_of(self, node: str) -> frozenset:
        return frozenset(self._parents[node])

    def children_of(self, node: str) -> frozenset:
        return frozenset(self._children[node])

    def has_edge(self, u: str, v: str) -> bool:
        return v in self._children.get(u, ())

    def __contains__(self, node: str) -> bool:
        return node in self._parents

    def __repr__(self):
        return f"DiGraph({len(self.nodes)} nodes, {len(self.edges)} edges)"


class UGraph:
    """Immutable undirected graph without self-loops."""

    def __init__(self, nodes: Iterable[str], edges: Iterable[tuple[str, str]] = ()):
        self.nodes: tuple[str, ...] = tuple(nodes)
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise ValueError("duplicate node names")
        self._adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        pairs: set[frozenset] = set()
        for u, v in edges:
            if u not in node_set or v not in node_set:
                raise ValueError(f"edge ({u!r}, {v!r}) references unknown node")
            if u == v:
                raise ValueError(f"self-loop at {u!r}")
            pairs.add(frozenset((u, v)))
            self._adj[u].add(v)
            self._adj[v].add(u)
        self.edges: frozenset = frozenset(pairs)

    def neighbors_of(self, node: str) -> frozenset:
        return frozenset(self._adj[node])

    def __contains__(self, node: str) -> bool:
        return node in self._adj

    def __repr__(self):
        return f"UGraph({len(self.nodes)} nodes, {len(self.edges)} edges)"


def _check_nodes(g, A: Iterable[str]) -> frozenset:
    A = frozenset(A)
    missing = [a for a in A if a not in g]
    if missing:
        raise ValueError(f"unknown nodes: {sorted(missing)}")
    return A


# -- basic set queries -------------------------------------------------------


def parents(g: DiGraph, A: Iterable[str]) -> frozenset:
    """Union of the members' parents, excluding A itself."""
    A = _check_nodes(g, A)
    out: set[str] = set()
    for a in A:
        out |= g.parents_of(a)
    return frozenset(out - A)


def closure(g: DiGraph, A: Iterable[str]) -> frozenset:
    A = _check_nodes(g, A)
    return frozenset(A | parents(g, A))


def ancestors(g: DiGraph, A: Iterable[str]) -> frozenset:
    """A together with every node that has a directed path into A."""
    A = _check_nodes(g, A)
    seen = set(A)
    stack = list(A)
    while stack:
        for p in g.parents_of(stack.pop()):
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return frozenset(seen)


def is_ancestral(g: DiGraph, A: Iterable[str]) -> bool:
    A = _check_nodes(g, A)
    return ancestors(g, A) == A


def descendants(g: DiGraph, A: Iterable[str]) -> frozenset:
    A = _check_nodes(g, A)
    seen = set(A)
    stack = list(A)
    while stack:
        for c in g.children_of(stack.pop()):
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return frozenset(seen)


def induced_subgraph(g: DiGraph, A: Iterable[str]) -> DiGraph:
    """Subgraph on A keeping exactly the edges with both endpoints in A."""
    A = _check_nodes(g, A)
    nodes = tuple(n for n in g.nodes if n in A)
    edges = tuple((u, v) for u, v in g.edges if u in A and v in A)
    return DiGraph(nodes, edges)


# -- moralization and separation ----------------------------------------------


def moralize(g: DiGraph) -> UGraph:
    """Undirected skeleton plus an edge between every pair of co-parents."""
    edges: list[tuple[str, str]] = list(g.edges)
    for node in g.nodes:
        ps = sorted(g.parents_of(node))
        for i in range(len(ps)):
            for k in range(i + 1, len(ps)):
                edges.append((ps[i], ps[k]))
    return UGraph(g.nodes, edges)


def separated(ug: UGraph, A: Iterable[str], B: Iterable[str], C: Iterable[str]) -> bool:
    """True iff every path from A to B passes through C.

    Empty A or B is vacuously separated; empty C reduces to plain
    non-reachability.
    """
    A, B, C = (_check_nodes(ug, S) for S in (A, B, C))
    if (A & B) or (A & C) or (B & C):
        raise ValueError("A, B, C must be disjoint")
    if not A or not B:
        return True
    seen = set(A)
    stack = list(A)
    while stack:
        for nb in ug.neighbors_of(stack.pop()):
            if nb in C or nb in seen:
                continue
            if nb in B:
                return False
            seen.add(nb)
            stack.append(nb)
    return True


@dataclass(frozen=True)
class SeparationCertificate:
    """Outcome of a separation query on the moralized ancestral subgraph.

    Truthy iff separation (and hence the conditional independence it
    certifies) holds.
    """

    a: frozenset
    b: frozenset
    c: frozenset
    separated: bool
    ancestral_set: frozenset
    moral_edges_added: tuple[tuple[str, str], ...]

    def __bool__(self) -> bool:
        return self.separated

    def to_json(self) -> str:
        return json.dumps({
            "A": sorted(self.a),
            "B": sorted(self.b),
            "C": sorted(self.c),
            "separated": self.separated,
            "ancestral_set": sorted(self.ancestral_set),
            "moral_edges_added": [list(e) for e in self.moral_edges_added],
        })


def ctbn_independent(g: DiGraph, A: Iterable[str], B: Iterable[str],
                     C: Iterable[str]) -> SeparationCertificate:
    """Separation of A and B by C in the moral graph of their ancestral subgraph.

    A true certificate guarantees that the processes in A and in B evolve
    independently through time given the processes in C.
    """
    A, B, C = (_check_nodes(g, S) for S in (A, B, C))
    if (A & B) or (A & C) or (B & C):
        raise ValueError("A, B, C must be disjoint")
    anc = ancestors(g, A | B | C)
    sub = induced_subgraph(g, anc)
    moral = moralize(sub)
    skeleton = {frozenset(e) for e in sub.edges}
    added = sorted(tuple(sorted(e)) for e in moral.edges if e not in skeleton)
    return SeparationCertificate(
        a=A, b=B, c=C,
        separated=separated(moral, A, B, C),
        ancestral_set=anc,
        moral_edges_added=tuple(added),
    )


# -- graph partitions and condensation ----------------------------------------


@dataclass(frozen=True)
class GraphPartition:
    """A quotient graph over a partition of the node set.

    ``blocks`` maps block names to member node sets; ``graph`` is the block
    graph, with an edge between two distinct blocks iff some underlying edge
    crosses between them.
    """

    blocks: Mapping[str, frozenset]
    graph: DiGraph

    def block_of(self, node: str) -> str:
        for name, members in self.blocks.items():
            if node in members:
                return name
        raise KeyError(node)

    def unroll(self, block_names: Iterable[str]) -> frozenset:
        out: set[str] = set()
        for name in block_names:
            out |= self.blocks[name]
        return frozenset(out)


def graph_partition(g: DiGraph, blocks: Mapping[str, Iterable[str]]) -> GraphPartition:
    """Quotient of g by the given blocks (which must partition the nodes)."""
    named = {name: frozenset(members) for name, members in blocks.items()}
    covered: set[str] = set()
    for name, members in named.items():
        if not members:
            raise ValueError(f"block {name!r} is empty")
        overlap = covered & members
        if overlap:
            raise ValueError(f"blocks overlap on {sorted(overlap)}")
        covered |= members
    missing = set(g.nodes) - covered
    extra = covered - set(g.nodes)
    if missing:
        raise ValueError(f"blocks do not cover nodes: {sorted(missing)}")
    if extra:
        raise ValueError(f"blocks mention unknown nodes: {sorted(extra)}")

    owner = {node: name for name, members in named.items() for node in members}
    block_edges: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    for u, v in g.edges:
        bu, bv = owner[u], owner[v]
        if bu != bv and (bu, bv) not in seen:
            seen.add((bu, bv))
            block_edges.append((bu, bv))
    return GraphPartition(named, DiGraph(tuple(named), block_edges))


def strongly_connected_components(g: DiGraph) -> list[frozenset]:
    """Tarjan's algorithm, iterative; components in reverse topological order."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    out: list[frozenset] = []
    counter = 0

    for root in g.nodes:
        if root in index:
            continue
        work = [(root, iter(sorted(g.children_of(root))))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, children = work[-1]
            advanced = False
            for child in children:
                if child not in index:
                    index[child] = low[child] = counter
                    counter += 1
                    stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(sorted(g.children_of(child)))))
                    advanced = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                out.append(frozenset(comp))
    return out


def condensation(g: DiGraph) -> GraphPartition:
    """Partition by strongly connected components; the block graph is acyclic.

    Blocks are named after their smallest member node for reproducible
    output.
    """
    comps = strongly_connected_components(g)
    # order blocks by first appearance in the node declaration order
    first_pos = {comp: min(g.nodes.index(n) for n in comp) for comp in comps}
    ordered = sorted(comps, key=first_pos.get)
    blocks = {min(comp): comp for comp in ordered}
    return graph_partition(g, blocks)


@dataclass(frozen=True)
class PartitionSeparationCertificate:
    """Block-level separation plus the node-level claim it implies."""

    block_certificate: SeparationCertificate
    a_nodes: frozenset
    b_nodes: frozenset
    c_nodes: frozenset

    @property
    def separated(self) -> bool:
        return self.block_certificate.separated

    def __bool__(self) -> bool:
        return self.separated


def partition_independent(
    g: DiGraph,
    blocks: Mapping[str, Iterable[str]],
    block_a: Iterable[str],
    block_b: Iterable[str],
    block_c: Iterable[str],
) -> PartitionSeparationCertificate:
    """Run the separation query inside a graph partition.

    A true answer certifies separation of the unrolled node sets in the
    underlying graph, and hence conditional independence of the corresponding
    process groups.
    """
    part = graph_partition(g, blocks)
    cert = ctbn_independent(part.graph, block_a, block_b, block_c)
    return PartitionSeparationCertificate(
        block_certificate=cert,
        a_nodes=part.unroll(cert.a),
        b_nodes=part.unroll(cert.b),
        c_nodes=part.unroll(cert.c),
    )


@dataclass(frozen=True)
class SccIndependenceCertificate:
    """Certificate that two non-adjacent components are independent given a
    separating set of whole components."""

    block_a: str
    block_b: str
    a_nodes: frozenset
    b_nodes: frozenset
    separating_blocks: frozenset
    separating_nodes: frozenset
    node_certificate: SeparationCertificate

    def __bool__(self) -> bool:
        return self.node_certificate.separated


def nonadjacent_scc_independence(g: DiGraph, block_a: str | Iterable[str],
                                 block_b: str | Iterable[str]) -> SccIndependenceCertificate:
    """Separating set for two strongly connected components with no direct edges.

    The certificate conditions on the parent blocks of whichever component is
    not a descendant of the other; when both choices are available the
    smaller separating set wins (ties go to block_b's parents).  Raises
    ``ValueError`` if the blocks are adjacent in g.
    """
    cond = condensation(g)

    def resolve(block) -> str:
        if isinstance(block, str) and block in cond.blocks:
            return block
        members = frozenset([block]) if isinstance(block, str) else frozenset(block)
        for name, comp in cond.blocks.items():
            if comp == members:
                return name
        raise ValueError(f"{block!r} is not a strongly connected component of the graph")

    name_a, name_b = resolve(block_a), resolve(block_b)
    if name_a == name_b:
        raise ValueError("blocks must be distinct")
    nodes_a, nodes_b = cond.blocks[name_a], cond.blocks[name_b]
    for u, v in g.edges:
        if (u in nodes_a and v in nodes_b) or (u in nodes_b and v in nodes_a):
            raise ValueError(
                f"components {name_a!r} and {name_b!r} are adjacent; no certificate")

    bg = cond.graph
    desc_a = descendants(bg, [name_a])
    desc_b = descendants(bg, [name_b])
    options = []
    # when block_a is not downstream of block_b, the ancestral closure of
    # {a, b} + Pa(b) contains no descendant of b, so Pa(b) cuts b off entirely
    if name_a not in desc_b:
        options.append((frozenset(bg.parents_of(name_b)), "b"))
    if name_b not in desc_a:
        options.append((frozenset(bg.parents_of(name_a)), "a"))
    if not options:  # impossible: the condensation is acyclic
        raise AssertionError("cycle between condensation blocks")
    # smaller separating set first; ties favor conditioning on block_b's parents
    options.sort(key=lambda item: (len(cond.unroll(item[0])), item[1] != "b"))
    sep_blocks = options[0][0]
    sep_nodes = cond.unroll(sep_blocks)
    cert = ctbn_independent(g, nodes_a, nodes_b, sep_nodes)
    return SccIndependenceCertificate(
        block_a=name_a, block_b=name_b,
        a_nodes=nodes_a, b_nodes=nodes_b,
        separating_blocks=sep_blocks, separating_nodes=sep_nodes,
        node_certificate=cert,
    )


# -- DOT export ----------------------------------------------------------------


def digraph_to_dot(g: DiGraph, name: str = "g") -> str:
    lines = [f"digraph {name} {{"]
    for n in g.nodes:
        lines.append(f'  "{n}";')
    for u, v in g.edges:
        lines.append(f'  "{u}" -> "{v}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def ugraph_to_dot(g: UGraph, name: str = "g") -> str:
    lines = [f"graph {name} {{"]
    for n in g.nodes:
        lines.append(f'  "{n}";')
    for e in sorted(tuple(sorted(e)) for e in g.edges):
        lines.append(f'  "{e[0]}" -- "{e[1]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def partition_to_dot(part: GraphPartition, name: str = "partition") -> str:
    lines = [f"digraph {name} {{"]
    for block, members in part.blocks.items():
        label = block + r"\n{" + ", ".join(sorted(members)) + "}"
        lines.append(f'  "{block}" [label="{label}"];')
    for u, v in part.graph.edges:
        lines.append(f'  "{u}" -> "{v}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
