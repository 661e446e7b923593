"""Heteroclinic connection graph of the m-armed vortex attractor.

Edges between equilibria whose Morse indices differ by one are decided by
the blocking rules (Morse blocking and zero-number blocking); everything
not blocked is connected.  Larger index gaps follow by cascading.  As an
independent check every pair is also tested directly: an edge exists iff
the two equilibria are adjacent and the source has the larger index.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .equilibria import VortexEquilibrium, zero_number
from .errors import RuleDisagreement

PERMITTED = "permitted-by-liberalism"
CASCADED = "cascaded"
BLOCKED_MORSE = "blocked-morse"
BLOCKED_ZERO = "blocked-zero-number"


@dataclass
class ConnectionGraph:
    nodes: list  # VortexEquilibrium, ordered by d
    edges: dict  # (src label, dst label) -> justification
    blocked: dict  # (hi label, lo label) -> reason
    lam: float
    m: int
    surface_id: str
    section_sensitive: list = field(default_factory=list)

    def node(self, label: str) -> VortexEquilibrium:
        return next(n for n in self.nodes if n.label == label)

    def to_json(self) -> dict:
        return {
            "lambda": self.lam, "m": self.m, "surface": self.surface_id,
            "nodes": [{"id": n.label, "index": n.morse_index, "zero_number": n.zero_number,
                       "d": n.d} for n in self.nodes],
            "edges": [{"src": a, "dst": b, "justification": j}
                      for (a, b), j in sorted(self.edges.items())],
            "blocked": [{"src": a, "dst": b, "justification": j}
                        for (a, b), j in sorted(self.blocked.items())],
            "section_sensitive": [list(p) for p in self.section_sensitive],
        }

    def to_dot(self) -> str:
        lines = [f'digraph "A_m (m={self.m}, lambda={self.lam:g})" {{', "  rankdir=TB;"]
        for n in self.nodes:
            lines.append(f'  "{n.label}" [label="{n.label}\\ni={n.morse_index}"];')
        for (a, b), j in sorted(self.edges.items()):
            style = "dashed" if j == CASCADED else "solid"
            lines.append(f'  "{a}" -> "{b}" [style={style}];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _z(e1: VortexEquilibrium, e2: VortexEquilibrium) -> int:
    if e1.s is not e2.s and not np.array_equal(e1.s, e2.s):
        raise ValueError("difference zero numbers need profiles on a common mesh")
    return zero_number(e1.u - e2.u)


def _between(e1, e2, everything):
    lo, hi = sorted((e1.d, e2.d))
    return [e for e in everything if lo < e.d < hi]


def _same_pattern(a, b, star) -> bool:
    return _z(a, star) == _z(a, b) == _z(b, star)


def adjacent(e1: VortexEquilibrium, e2: VortexEquilibrium, all_equilibria: list) -> bool:
    """No equilibrium between the two (ordered by ``d``) shares their difference zero numbers."""
    if e1 is e2:
        raise ValueError("adjacency needs two different equilibria")
    return not any(_same_pattern(e1, e2, u) for u in _between(e1, e2, all_equilibria))


def blocked(e_hi: VortexEquilibrium, e_lo: VortexEquilibrium,
            all_equilibria: list) -> Optional[str]:
    """Blocking reason for an index-drop-one pair, or ``None`` if a connection exists."""
    if e_hi.morse_index != e_lo.morse_index + 1:
        raise ValueError("blocking is defined for Morse indices differing by one")
    if _z(e_hi, e_lo) != e_lo.morse_index:
        return BLOCKED_MORSE
    if not adjacent(e_hi, e_lo, all_equilibria):
        return BLOCKED_ZERO
    return None


def _section_verdicts(e_hi, e_lo, everything, stride=64):
    """Zero-number-blocking verdicts when betweenness is read at interior sections."""
    verdicts = set()
    target = _z(e_hi, e_lo)
    stars = [u for u in everything if u is not e_hi and u is not e_lo]
    for i in range(1, len(e_hi.s) - 1, stride):
        lo, hi = sorted((e_hi.u[i], e_lo.u[i]))
        hit = any(lo < u.u[i] < hi and _z(e_hi, u) == target == _z(e_lo, u) for u in stars)
        verdicts.add(hit)
    return verdicts


def connection_graph(equilibria: list, surface_id: str = "") -> ConnectionGraph:
    """Build the graph by blocking + cascading and check it against the direct criterion."""
    nodes = sorted(equilibria, key=lambda e: e.d)
    lam, m = nodes[0].lam, nodes[0].m
    edges, block, sensitive = {}, {}, []
    for a in nodes:
        for b in nodes:
            if a.morse_index == b.morse_index + 1:
                reason = blocked(a, b, nodes)
                if reason is None:
                    edges[(a.label, b.label)] = PERMITTED
                else:
                    block[(a.label, b.label)] = reason
                at_zero = reason == BLOCKED_ZERO
                if reason != BLOCKED_MORSE and _section_verdicts(a, b, nodes) - {at_zero}:
                    sensitive.append((a.label, b.label))
    # cascading closure over index-drop-one edges
    succ = {}
    for (a, b) in edges:
        succ.setdefault(a, set()).add(b)
    changed = True
    while changed:
        changed = False
        for a in list(succ):
            for b in list(succ[a]):
                for c in succ.get(b, ()):
                    if c not in succ[a]:
                        succ[a].add(c)
                        edges[(a, c)] = CASCADED
                        changed = True
    direct = {(a.label, b.label) for a, b in _ordered_pairs(nodes)
              if a.morse_index > b.morse_index and adjacent(a, b, nodes)}
    if direct != set(edges):
        raise RuleDisagreement(
            f"blocking/cascading edges and the adjacency criterion differ: "
            f"only construction {sorted(set(edges) - direct)}, only direct {sorted(direct - set(edges))}")
    return ConnectionGraph(nodes, edges, block, lam, m, surface_id, sensitive)


def _ordered_pairs(nodes):
    for a, b in combinations(nodes, 2):
        yield a, b
        yield b, a


def chafee_infante_edges(k: int) -> set:
    """Edge set of the Chafee-Infante attractor with equilibria ``u_j^+-``, ``j <= k``."""
    labels = [f"u{j}{s}" for j in range(k + 1) for s in "+-"]
    edges = {("0", lab) for lab in labels}
    for j in range(k + 1):
        for l in range(j):
            for s1 in "+-":
                for s2 in "+-":
                    edges.add((f"u{j}{s1}", f"u{l}{s2}"))
    return edges


def is_chafee_infante(graph: ConnectionGraph, k: int) -> bool:
    """Whether nodes, indices and edges are exactly those of the Chafee-Infante attractor."""
    want_nodes = {("0", k + 1)} | {(f"u{j}{s}", j) for j in range(k + 1) for s in "+-"}
    have_nodes = {(n.label, n.morse_index) for n in graph.nodes}
    return have_nodes == want_nodes and set(graph.edges) == chafee_infante_edges(k)


def sign_symmetric(graph: ConnectionGraph) -> bool:
    """Invariance of the edge set under flipping the sign of every nontrivial node."""
    def flip(label):
        if label == "0":
            return label
        return label[:-1] + ("-" if label[-1] == "+" else "+")
    return {(flip(a), flip(b)) for a, b in graph.edges} == set(graph.edges)
