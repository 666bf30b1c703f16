"""Concrete heap states and variable bindings."""

from __future__ import annotations

import re
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

KEY_MIN = 0
KEY_MAX = 1000
KEY_STEP = 10
_FRESH = re.compile(r"p\d+")


@lru_cache(maxsize=None)
def natural(node: str) -> tuple:
    return tuple(int(p) if p.isdigit() else p for p in re.split(r"(\d+)", node))


@dataclass(frozen=True)
class HeapState:
    """Finite heap: nodes with immutable keys and labelled successor edges.

    ``clock`` is carried along but ignored by equality and hashing, so two
    states with identical memory compare equal regardless of when they occur.
    """

    keys: tuple[tuple[str, int], ...]
    succ: tuple[tuple[str, str, str], ...]  # (node, label, target)
    sentinels: tuple[tuple[str, str], ...] = ()
    terminal: Optional[str] = None
    clock: int = field(default=0, compare=False)

    @classmethod
    def build(cls, keys: Mapping[str, int], edges: Iterable[tuple], sentinels=(), terminal=None,
              clock=0) -> "HeapState":
        succ = []
        for e in edges:
            a, b, label = (e[0], e[1], e[2]) if len(e) == 3 else (e[0], e[1], "next")
            succ.append((a, label, b))
        seen = {(a, l) for a, l, _ in succ}
        if len(seen) != len(succ):
            raise ValueError("successor must be a function per (node, label)")
        return cls(tuple(sorted(keys.items(), key=lambda kv: natural(kv[0]))),
                   tuple(sorted(succ, key=lambda s: (natural(s[0]), s[1]))),
                   tuple(sentinels), terminal, clock)

    def __hash__(self) -> int:
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.keys, self.succ, self.sentinels, self.terminal))
            object.__setattr__(self, "_hash", h)
        return h

    @property
    def nodes(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.keys)

    @property
    def key_map(self) -> dict[str, int]:
        return dict(self.keys)

    @property
    def sentinel_names(self) -> set[str]:
        return {s for s, _ in self.sentinels}

    def key(self, node: str) -> int:
        for n, k in self.keys:
            if n == node:
                return k
        raise KeyError(node)

    def successor(self, node: str, label: str = "next") -> Optional[str]:
        for a, l, b in self.succ:
            if a == node and l == label:
                return b
        return None

    def edges(self) -> list[tuple[str, str, str]]:
        return [(a, b, l) for a, l, b in self.succ]

    def has_node(self, node: str) -> bool:
        return any(n == node for n, _ in self.keys)

    def with_node(self, node: str, key: int) -> "HeapState":
        km = self.key_map
        km[node] = key
        return HeapState(tuple(sorted(km.items(), key=lambda kv: natural(kv[0]))), self.succ,
                         self.sentinels, self.terminal, self.clock)

    def with_successor(self, node: str, label: str, target: Optional[str]) -> "HeapState":
        succ = [s for s in self.succ if not (s[0] == node and s[1] == label)]
        if target is not None:
            succ.append((node, label, target))
        succ.sort(key=lambda s: (natural(s[0]), s[1]))
        return HeapState(self.keys, tuple(succ), self.sentinels, self.terminal, self.clock)

    def tick(self, n: int = 1) -> "HeapState":
        return HeapState(self.keys, self.succ, self.sentinels, self.terminal, self.clock + n)

    def reachable(self) -> set[str]:
        out, todo = set(), sorted(self.sentinel_names - {self.terminal})
        while todo:
            n = todo.pop()
            if n in out:
                continue
            out.add(n)
            todo += [b for a, _, b in self.succ if a == n]
        return out

    def canonical(self) -> tuple:
        """Reachable part of the heap; used to compare outcomes of executions."""
        live = self.reachable()
        return (tuple((n, k) for n, k in self.keys if n in live),
                tuple(s for s in self.succ if s[0] in live))

    def normalized(self, keep: Iterable[str] = ()) -> tuple["HeapState", dict[str, str]]:
        """Isomorphic representative for state-space search: fresh nodes
        (``p1``, ``p2``, ...) not in ``keep`` are renamed in key order.
        Returns the state and the renaming applied."""
        keep = set(keep)
        km = self.key_map
        fresh = sorted((n for n in km if _FRESH.fullmatch(n) and n not in keep),
                       key=lambda n: (km[n], natural(n)))
        taken = {n for n in km if n not in fresh}
        ren, i = {}, 1
        for n in fresh:
            while f"p{i}" in taken:
                i += 1
            if n != f"p{i}":
                ren[n] = f"p{i}"
            i += 1
        if not ren:
            return self, ren
        r = lambda n: ren.get(n, n)
        keys = tuple(sorted(((r(n), k) for n, k in self.keys), key=lambda kv: natural(kv[0])))
        succ = tuple(sorted(((r(a), l, r(b)) for a, l, b in self.succ),
                            key=lambda s: (natural(s[0]), s[1])))
        return HeapState(keys, succ, self.sentinels, self.terminal, self.clock), ren

    def node_order(self, node: str) -> tuple:
        """Interior nodes first, then sentinels, each in natural id order."""
        return (node in self.sentinel_names, natural(node))

    def fresh_id(self, taken: Iterable[str] = ()) -> str:
        used = set(self.nodes) | set(taken)
        i = 1
        while f"p{i}" in used:
            i += 1
        return f"p{i}"

    def to_facts(self) -> str:
        lines = [f"edge({a},{b})." if l == "next" else f"child({a},{b},{l})."
                 for a, l, b in self.succ]
        lines += [f"key({n},{k})." for n, k in self.keys]
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"clock": self.clock, "keys": dict(self.keys),
                "edges": [[a, b, l] for a, l, b in self.succ]}

    def __str__(self) -> str:
        return " ".join(f"{a}-{l}->{b}" if l != "next" else f"{a}->{b}"
                        for a, l, b in self.succ) or "<empty>"


@dataclass(frozen=True)
class Binding:
    """Knowledge symbols mapped to nodes, plus key/label variables to values.

    ``fresh`` lists the symbols bound to nodes that are not yet in the heap;
    their keys live in ``fresh_keys``.
    """

    nodes: tuple[tuple[str, str], ...] = ()
    values: tuple[tuple[str, object], ...] = ()
    fresh_keys: tuple[tuple[str, int], ...] = ()

    @classmethod
    def of(cls, nodes=None, values=None, fresh_keys=None) -> "Binding":
        return cls(tuple(sorted((nodes or {}).items())), tuple(sorted((values or {}).items())),
                   tuple(sorted((fresh_keys or {}).items())))

    @property
    def node_map(self) -> dict[str, str]:
        return dict(self.nodes)

    @property
    def value_map(self) -> dict[str, object]:
        return dict(self.values)

    @property
    def fresh(self) -> set[str]:
        return {s for s, _ in self.fresh_keys}

    def node(self, sym: str) -> str:
        return self.node_map[sym]

    def fresh_key(self, node_id: str) -> Optional[int]:
        nm = self.node_map
        for s, k in self.fresh_keys:
            if nm.get(s) == node_id:
                return k
        return None

    def sort_key(self, state: HeapState) -> tuple:
        fr = self.fresh
        return tuple(state.node_order(n) for s, n in self.nodes if s not in fr)

    def to_dict(self) -> dict:
        return {"nodes": dict(self.nodes), "values": dict(self.values),
                "fresh": dict(self.fresh_keys)}

    def __str__(self) -> str:
        parts = [f"{s}:{n}" for s, n in self.nodes]
        parts += [f"{v}={x}" for v, x in self.values]
        return "{" + ", ".join(parts) + "}"
