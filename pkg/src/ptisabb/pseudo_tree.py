"""DFS pseudo trees over the constraint graph."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple

from .model import AdcopInstance


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class PseudoTree:
    root: int
    parent: Dict[int, Optional[int]]
    pseudo_parents: Dict[int, FrozenSet[int]]
    children: Dict[int, Tuple[int, ...]]
    pseudo_children: Dict[int, FrozenSet[int]]
    depth: Dict[int, int]
    # ancestors of each agent, ordered shallowest first
    sep: Dict[int, Tuple[int, ...]]
    # DFS visit order (pre-order)
    order: Tuple[int, ...]

    def order_key(self, agent: int) -> Tuple[int, int]:
        """Canonical dimension key: shallowest first, then smaller id."""
        return (self.depth[agent], agent)

    def all_parents(self, agent: int) -> Tuple[int, ...]:
        """Parent and pseudo parents, shallowest first."""
        ap = set(self.pseudo_parents[agent])
        if self.parent[agent] is not None:
            ap.add(self.parent[agent])
        return tuple(sorted(ap, key=self.order_key))

    def is_leaf(self, agent: int) -> bool:
        return not self.children[agent]

    def descendants(self, agent: int) -> List[int]:
        out = []
        stack = list(self.children[agent])
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(self.children[v])
        return sorted(out)

    def ancestors(self, agent: int) -> List[int]:
        out = []
        p = self.parent[agent]
        while p is not None:
            out.append(p)
            p = self.parent[p]
        return out[::-1]

    def post_order(self) -> List[int]:
        """Children before parents."""
        return list(reversed(self.order))

    def tree_edges(self) -> List[Tuple[int, int]]:
        return sorted((min(v, p), max(v, p)) for v, p in self.parent.items() if p is not None)

    def pseudo_edges(self) -> List[Tuple[int, int]]:
        return sorted((min(v, p), max(v, p)) for v, pps in self.pseudo_parents.items() for p in pps)

    def to_dot(self) -> str:
        lines = ["digraph pseudotree {"]
        for v in self.order:
            lines.append(f"  a{v} [label=\"a{v} sep={list(self.sep[v])}\"];")
        for v in self.order:
            if self.parent[v] is not None:
                lines.append(f"  a{self.parent[v]} -> a{v};")
            for p in sorted(self.pseudo_parents[v]):
                lines.append(f"  a{p} -> a{v} [style=dashed];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_pseudo_tree(instance: AdcopInstance, root: Optional[int] = None) -> PseudoTree:
    """DFS pseudo tree rooted at the max-degree agent (or ``root``).

    Neighbours are explored in descending degree, ties broken by smaller id.
    """
    n = instance.agent_count
    if not instance.is_connected():
        raise TreeError("constraint graph is disconnected")
    if root is None:
        root = min(instance.agents, key=lambda v: (-instance.degree(v), v))
    if not 0 <= root < n:
        raise TreeError(f"unknown root {root}")

    def ranked(v):
        return sorted(instance.neighbors(v), key=lambda u: (-instance.degree(u), u))

    parent: Dict[int, Optional[int]] = {root: None}
    depth = {root: 0}
    order = [root]
    stack = [(root, iter(ranked(root)))]
    while stack:
        v, it = stack[-1]
        nxt = next((u for u in it if u not in parent), None)
        if nxt is None:
            stack.pop()
            continue
        parent[nxt] = v
        depth[nxt] = depth[v] + 1
        order.append(nxt)
        stack.append((nxt, iter(ranked(nxt))))

    children: Dict[int, List[int]] = {v: [] for v in range(n)}
    for v in order:
        if parent[v] is not None:
            children[parent[v]].append(v)
    pseudo_parents: Dict[int, set] = {v: set() for v in range(n)}
    pseudo_children: Dict[int, set] = {v: set() for v in range(n)}
    for i, j in instance.pairs():
        if parent[i] == j or parent[j] == i:
            continue
        lo, hi = (i, j) if depth[i] < depth[j] else (j, i)
        pseudo_parents[hi].add(lo)
        pseudo_children[lo].add(hi)

    sep: Dict[int, Tuple[int, ...]] = {}
    for v in reversed(order):
        s = set(pseudo_parents[v])
        if parent[v] is not None:
            s.add(parent[v])
        for c in children[v]:
            s.update(sep[c])
        s.discard(v)
        sep[v] = tuple(sorted(s, key=lambda a: (depth[a], a)))

    return PseudoTree(
        root=root,
        parent=parent,
        pseudo_parents={v: frozenset(s) for v, s in pseudo_parents.items()},
        children={v: tuple(c) for v, c in children.items()},
        pseudo_children={v: frozenset(s) for v, s in pseudo_children.items()},
        depth=depth,
        sep=sep,
        order=tuple(order),
    )


def separators(tree: PseudoTree) -> Dict[int, Tuple[int, ...]]:
    return dict(tree.sep)
