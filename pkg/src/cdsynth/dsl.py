"""Line-oriented logic-program DSL for data-structure theories and knowledge.

A theory file declares fluent/static predicates, sentinels, the structural
root and a set of stratified rules.  A knowledge file declares the operations
(pre/post conditions, ordered ``link`` steps) and the membership traversal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Iterable, Iterator, Optional, Union

import networkx as nx

__all__ = [
    "Term", "Atom", "Literal", "Comparison", "Rule", "Theory", "Step",
    "BlockSpec", "OperationSpec", "TraversalSpec", "PrimitiveSpec",
    "KnowledgeBase", "DSLError", "DSLSyntaxError", "UndeclaredPredicate",
    "UnsafeRule", "NotStratified", "KnowledgeError", "parse_theory",
    "parse_knowledge", "builtin_bundle", "check_stratification",
    "render_theory", "BUNDLES", "NIL",
]

BUNDLES = ("linked_list", "external_bst", "internal_bst")
NIL = "nil"
#: predicates supplied by the heap itself rather than by rules
BASE_PREDICATES = {"edge": 2, "child": 3, "key": 2}


# --------------------------------------------------------------------- errors

class DSLError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line, self.col = line, col
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + message)


class DSLSyntaxError(DSLError):
    pass


class UndeclaredPredicate(DSLError):
    pass


class UnsafeRule(DSLError):
    def __init__(self, message, variables=(), line=0, col=0):
        self.variables = tuple(variables)
        super().__init__(message, line, col)


class NotStratified(DSLError):
    def __init__(self, cycle, line=0, col=0):
        self.cycle = cycle
        super().__init__("negation cycle: " + " -> ".join(cycle), line, col)


class KnowledgeError(DSLError):
    pass


# ---------------------------------------------------------------------- terms

@dataclass(frozen=True)
class Term:
    kind: str  # "var" | "const" | "int"
    name: Union[str, int]
    sentinel: bool = False

    @property
    def is_var(self) -> bool:
        return self.kind == "var"

    def __str__(self) -> str:
        return str(self.name)


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> set[str]:
        return {a.name for a in self.args if a.is_var}

    def __str__(self) -> str:
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(map(str, self.args))})"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    negated: bool = False

    def __str__(self) -> str:
        return ("not " if self.negated else "") + str(self.atom)


@dataclass(frozen=True)
class Comparison:
    op: str  # "<" | "="
    left: Term
    right: Term

    def variables(self) -> set[str]:
        return {t.name for t in (self.left, self.right) if t.is_var}

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class Rule:
    head: Optional[Atom]
    pos: tuple[Atom, ...] = ()
    neg: tuple[Atom, ...] = ()
    cmps: tuple[Comparison, ...] = ()
    line: int = field(default=0, compare=False)

    @property
    def is_constraint(self) -> bool:
        return self.head is None

    @property
    def is_fact(self) -> bool:
        return self.head is not None and not (self.pos or self.neg or self.cmps)

    def unsafe_variables(self) -> list[str]:
        bound = set().union(*(a.variables() for a in self.pos)) if self.pos else set()
        used: list[str] = []
        if self.head is not None:
            used += [a.name for a in self.head.args if a.is_var]
        for a in self.neg:
            used += [t.name for t in a.args if t.is_var]
        for c in self.cmps:
            used += sorted(c.variables())
        seen, out = set(), []
        for v in used:
            if v not in bound and v not in seen:
                seen.add(v)
                out.append(v)
        return out

    def __str__(self) -> str:
        body = [str(a) for a in self.pos]
        body += [f"not {a}" for a in self.neg]
        body += [str(c) for c in self.cmps]
        head = str(self.head) if self.head is not None else ""
        if not body:
            return f"{head}."
        return f"{head} :- {', '.join(body)}." if head else f":- {', '.join(body)}."


@dataclass
class Theory:
    rules: list[Rule]
    fluents: dict[str, int]
    statics: dict[str, int]
    sentinels: dict[str, str]  # name -> "min" | "max"
    root: str
    labels: tuple[str, ...] = ("next",)
    shape: str = "chain"

    @property
    def predicates(self) -> dict[str, int]:
        return {**self.statics, **self.fluents}

    @property
    def derived(self) -> set[str]:
        return {r.head.pred for r in self.rules if r.head is not None}

    @property
    def labelled(self) -> bool:
        return self.labels != ("next",)

    def sentinel_terms(self) -> list[Term]:
        return [Term("const", s, True) for s in self.sentinels]

    def constants(self) -> set[str]:
        got = self.__dict__.get("_constants")
        if got is None:
            got = self.__dict__["_constants"] = frozenset(self.sentinels) | set(self.labels) | {NIL}
        return got

    def is_fact(self, atom: Atom) -> bool:
        """True when a ground ``atom`` is an unconditional rule of the theory."""
        return any(r.is_fact and r.head == atom for r in self.rules)


# ------------------------------------------------------------------ knowledge

@dataclass(frozen=True)
class Step:
    src: Term
    dst: Term
    label: Optional[Term] = None

    def __str__(self) -> str:
        if self.label is None:
            return f"link({self.src},{self.dst})"
        return f"link({self.src},{self.dst},{self.label})"


PreItem = Union[Literal, Comparison]


@dataclass(frozen=True)
class BlockSpec:
    op: str
    block_id: str
    pre: tuple[PreItem, ...]
    post: tuple[Literal, ...]
    steps: tuple[Step, ...]

    def literals(self) -> list[Literal]:
        return [p for p in self.pre if isinstance(p, Literal)]

    def comparisons(self) -> list[Comparison]:
        return [p for p in self.pre if isinstance(p, Comparison)]


@dataclass(frozen=True)
class TraversalSpec:
    op: str
    start: str
    descend: tuple[Rule, ...]  # heads are descend(X,Y); K is the target key


@dataclass(frozen=True)
class PrimitiveSpec:
    name: str = "link"
    modifies: str = "first"
    causes: str = "edge"
    deref_uses: str = "edge"


@dataclass(frozen=True)
class OperationSpec:
    name: str
    blocks: tuple[BlockSpec, ...] = ()
    traversal: Optional[TraversalSpec] = None

    @property
    def destructive(self) -> bool:
        return any(b.steps for b in self.blocks)


@dataclass
class KnowledgeBase:
    operations: dict[str, OperationSpec]
    theory: Theory
    fresh: frozenset[str] = frozenset({"tau"})
    primitives: PrimitiveSpec = PrimitiveSpec()
    max_steps: int = 6

    def destructive(self) -> list[OperationSpec]:
        return [op for op in self.operations.values() if op.destructive]

    def traversal(self) -> Optional[TraversalSpec]:
        for op in self.operations.values():
            if op.traversal is not None:
                return op.traversal
        return None


# ------------------------------------------------------------------ tokenizer

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>%[^\n]*)
  | (?P<directive>\#[a-z_]+)
  | (?P<neck>:-)
  | (?P<int>-?\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[()\[\],.<=/:])
""", re.VERBOSE)


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Tok]:
    toks, line, start, pos = [], 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, start = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            toks.append(Tok(kind, m.group(), line, pos - start + 1))
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: Optional[Tok] = None) -> DSLSyntaxError:
        tok = tok or self.tok
        found = tok.text or "end of input"
        return DSLSyntaxError(f"{msg} (found {found!r})", tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind != "eof"

    def eat(self, text: Optional[str] = None, kind: Optional[str] = None) -> Tok:
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            raise self.error(f"expected {text or kind}")
        self.i += 1
        return t

    def statements(self) -> Iterator[Tok]:
        while self.tok.kind != "eof":
            yield self.tok

    # terms and atoms
    def term(self) -> Term:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return Term("int", int(t.text))
        if t.kind == "name":
            self.i += 1
            if t.text[0].isupper() or t.text[0] == "_":
                return Term("var", t.text)
            return Term("const", t.text)
        raise self.error("expected a term")

    def atom(self) -> Atom:
        name = self.eat(kind="name")
        if name.text[0].isupper():
            raise self.error("predicate names must be lowercase", name)
        args: list[Term] = []
        if self.at("("):
            self.eat("(")
            args.append(self.term())
            while self.at(","):
                self.eat(",")
                args.append(self.term())
            self.eat(")")
        return Atom(name.text, tuple(args))

    def body_item(self) -> Union[Literal, Comparison]:
        if self.tok.kind == "name" and self.tok.text == "not":
            nxt = self.toks[self.i + 1]
            if nxt.kind == "name":
                self.eat()
                return Literal(self.atom(), True)
        t = self.tok
        if t.kind == "int" or (t.kind == "name" and t.text[0].isupper()):
            left = self.term()
            if not (self.at("<") or self.at("=")):
                raise self.error("expected '<' or '='")
            op = self.eat().text
            return Comparison(op, left, self.term())
        return Literal(self.atom())

    def body(self, stop: str = ".") -> list[Union[Literal, Comparison]]:
        items = [self.body_item()]
        while self.at(","):
            self.eat(",")
            items.append(self.body_item())
        return items

    def bracket_list(self) -> list[Union[Literal, Comparison]]:
        self.eat("[")
        if self.at("]"):
            self.eat("]")
            return []
        items = self.body("]")
        self.eat("]")
        return items

    def rule(self) -> Rule:
        line = self.tok.line
        head = None
        if not self.at(":-"):
            head = self.atom()
        items: list[Union[Literal, Comparison]] = []
        if self.at(":-"):
            self.eat(":-")
            items = self.body()
        self.eat(".")
        return _make_rule(head, items, line)


def _make_rule(head, items, line) -> Rule:
    pos = tuple(i.atom for i in items if isinstance(i, Literal) and not i.negated)
    neg = tuple(i.atom for i in items if isinstance(i, Literal) and i.negated)
    cmps = tuple(i for i in items if isinstance(i, Comparison))
    return Rule(head, pos, neg, cmps, line)


# -------------------------------------------------------------------- theory

def _pred_decls(p: _Parser) -> dict[str, int]:
    out = {}
    while not p.at("."):
        name = p.eat(kind="name").text
        p.eat("/")
        out[name] = int(p.eat(kind="int").text)
    p.eat(".")
    return out


def _names(p: _Parser) -> list[str]:
    out = []
    while not p.at("."):
        out.append(p.eat(kind="name").text)
    p.eat(".")
    return out


def parse_theory(text: str, validate: bool = True) -> Theory:
    """Parse a theory.  With ``validate`` the rules are checked for safety,
    declarations and stratification."""
    p = _Parser(text)
    rules: list[Rule] = []
    fluents: dict[str, int] = {}
    statics: dict[str, int] = {}
    sentinels: dict[str, str] = {}
    root = None
    labels: tuple[str, ...] = ("next",)
    shape = "chain"
    root_tok = None
    for tok in p.statements():
        if tok.kind == "directive":
            p.eat()
            d = tok.text
            if d == "#fluent":
                fluents.update(_pred_decls(p))
            elif d == "#static":
                statics.update(_pred_decls(p))
            elif d == "#sentinel":
                names = []
                while not p.at("."):
                    n = p.eat(kind="name").text
                    role = None
                    if p.at("/"):
                        p.eat("/")
                        role = p.eat(kind="name").text
                        if role not in ("min", "max"):
                            raise p.error("sentinel role must be min or max")
                    names.append((n, role))
                p.eat(".")
                for idx, (n, role) in enumerate(names):
                    if n in sentinels:
                        raise DSLError(f"sentinel {n} declared twice", tok.line, tok.col)
                    sentinels[n] = role or ("min" if idx == 0 and len(names) > 1 else "max")
            elif d == "#root":
                root_tok = tok
                root = _names(p)[0]
            elif d == "#labels":
                labels = tuple(_names(p))
            elif d == "#shape":
                shape = _names(p)[0]
                if shape not in ("chain", "tree", "fulltree"):
                    raise DSLError(f"unknown shape {shape}", tok.line, tok.col)
            else:
                raise p.error("unknown directive", tok)
        else:
            rules.append(p.rule())
    rules = [_mark_sentinels(r, sentinels) for r in rules]
    theory = Theory(rules, fluents, statics, sentinels, root or "", labels, shape)
    if validate:
        _validate_theory(theory, root_tok)
    return theory


def _mark_term(t: Term, sentinels) -> Term:
    if t.kind == "const" and t.name in sentinels:
        return replace(t, sentinel=True)
    return t


def _mark_atom(a: Atom, sentinels) -> Atom:
    return Atom(a.pred, tuple(_mark_term(t, sentinels) for t in a.args))


def _mark_sentinels(r: Rule, sentinels) -> Rule:
    return Rule(
        _mark_atom(r.head, sentinels) if r.head is not None else None,
        tuple(_mark_atom(a, sentinels) for a in r.pos),
        tuple(_mark_atom(a, sentinels) for a in r.neg),
        r.cmps, r.line)


def _validate_theory(th: Theory, root_tok=None) -> None:
    if not th.root:
        raise DSLError("missing structural-root declaration (#root)")
    for r in th.rules:
        bad = r.unsafe_variables()
        if bad:
            raise UnsafeRule(f"unsafe rule {r}: variable(s) {', '.join(bad)} "
                             "not bound by a positive body atom", bad, r.line)
        if any(c.op != "<" for c in r.cmps):
            raise DSLError(f"only '<' comparisons are allowed in theory rules: {r}", r.line)
    decl = th.predicates
    for r in th.rules:
        for a in ([r.head] if r.head is not None else []) + list(r.pos) + list(r.neg):
            if a.pred not in decl:
                raise UndeclaredPredicate(f"undeclared predicate {a.pred}/{a.arity} in {r}", r.line)
            if decl[a.pred] != a.arity:
                raise DSLError(f"arity mismatch for {a.pred}: declared /{decl[a.pred]}, "
                               f"used /{a.arity}", r.line)
    if th.root not in decl:
        raise UndeclaredPredicate(f"root predicate {th.root} is not declared")
    if th.root not in th.derived:
        raise DSLError(f"root predicate {th.root} has no defining rule")
    g = _dependency_graph(th)
    reach = nx.descendants(g, th.root) | {th.root}
    if not any(_is_recursive(g, p) for p in reach):
        raise DSLError(f"root predicate {th.root} is not defined recursively")
    res = check_stratification(th)
    if res is not True:
        raise NotStratified(res)


def _dependency_graph(th: Theory) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(th.predicates)
    for r in th.rules:
        if r.head is None:
            continue
        for a in r.pos:
            _add_dep(g, r.head.pred, a.pred, False)
        for a in r.neg:
            _add_dep(g, r.head.pred, a.pred, True)
    return g


def _add_dep(g, head, body, negative):
    if g.has_edge(head, body):
        g[head][body]["neg"] = g[head][body]["neg"] or negative
    else:
        g.add_edge(head, body, neg=negative)


def _is_recursive(g: nx.DiGraph, p: str) -> bool:
    return g.has_edge(p, p) or any(p in c and len(c) > 1 for c in nx.strongly_connected_components(g))


def check_stratification(theory: Theory):
    """``True`` when no predicate depends on itself through negation,
    otherwise a witness cycle such as ``['p', 'not p']``."""
    g = _dependency_graph(theory)
    for comp in nx.strongly_connected_components(g):
        sub = g.subgraph(comp)
        for u, v, d in sub.edges(data=True):
            if not d["neg"]:
                continue
            if u == v:
                return [u, f"not {v}"]
            back = nx.shortest_path(sub, v, u)
            return [u, f"not {v}"] + back[1:]
    return True


def strata(theory: Theory) -> list[list[Rule]]:
    """Rules grouped by stratum in evaluation order."""
    g = _dependency_graph(theory)
    cond = nx.condensation(g)
    level: dict[int, int] = {}
    for c in reversed(list(nx.topological_sort(cond))):
        lv = 0
        for _, succ in cond.out_edges(c):
            step = any(g[u][v]["neg"] for u in cond.nodes[c]["members"]
                       for v in cond.nodes[succ]["members"] if g.has_edge(u, v))
            lv = max(lv, level[succ] + (1 if step else 0))
        level[c] = lv
    mapping = cond.graph["mapping"]
    buckets: dict[int, list[Rule]] = {}
    for r in theory.rules:
        if r.head is None:
            continue
        buckets.setdefault(level[mapping[r.head.pred]], []).append(r)
    return [buckets[k] for k in sorted(buckets)]


def render_theory(th: Theory) -> str:
    lines = []
    if th.fluents:
        lines.append("#fluent " + " ".join(f"{p}/{n}" for p, n in th.fluents.items()) + ".")
    if th.statics:
        lines.append("#static " + " ".join(f"{p}/{n}" for p, n in th.statics.items()) + ".")
    if th.sentinels:
        lines.append("#sentinel " + " ".join(f"{s}/{r}" for s, r in th.sentinels.items()) + ".")
    if th.labels != ("next",):
        lines.append("#labels " + " ".join(th.labels) + ".")
    if th.shape != "chain":
        lines.append(f"#shape {th.shape}.")
    lines.append(f"#root {th.root}.")
    lines += [str(r) for r in th.rules]
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------- knowledge

def _node_symbols(items: Iterable, theory: Theory) -> set[str]:
    consts = theory.constants()
    out = set()
    for it in items:
        terms: tuple[Term, ...]
        if isinstance(it, Literal):
            terms = it.atom.args
        elif isinstance(it, Step):
            terms = (it.src, it.dst)
        else:
            continue
        out |= {t.name for t in terms if t.kind == "const" and t.name not in consts}
    return out


def parse_knowledge(text: str, theory: Theory, max_steps: int = 6) -> KnowledgeBase:
    p = _Parser(text)
    fresh: set[str] = set()
    blocks: dict[str, list[BlockSpec]] = {}
    traversals: dict[str, TraversalSpec] = {}
    order: list[str] = []
    current_trav: Optional[str] = None
    for tok in p.statements():
        if tok.kind != "directive":
            raise p.error("expected a knowledge directive")
        p.eat()
        d = tok.text
        if d == "#fresh":
            fresh |= set(_names(p))
        elif d == "#op":
            name = p.eat(kind="name").text
            if name not in blocks:
                blocks[name] = []
                order.append(name)
            if p.at("."):
                p.eat(".")
                continue
            block_id = p.eat(kind="name").text
            p.eat("pre")
            pre = p.bracket_list()
            p.eat("post")
            post = p.bracket_list()
            p.eat("steps")
            steps = _steps(p)
            p.eat(".")
            blk = _check_block(name, block_id, pre, post, steps, theory, fresh or {"tau"},
                               tok, max_steps)
            blocks[name].append(blk)
        elif d == "#traverse":
            name = p.eat(kind="name").text
            p.eat("from")
            start = p.eat(kind="name").text
            p.eat(".")
            if start not in theory.sentinels:
                raise KnowledgeError(f"traversal must start at a sentinel, not {start}",
                                     tok.line, tok.col)
            traversals[name] = TraversalSpec(name, start, ())
            current_trav = name
            if name not in blocks:
                blocks[name] = []
                order.append(name)
        elif d == "#descend":
            if current_trav is None:
                raise KnowledgeError("#descend before #traverse", tok.line, tok.col)
            items = p.body()
            p.eat(".")
            rule = _make_rule(Atom("descend", (Term("var", "X"), Term("var", "Y"))), items,
                              tok.line)
            _check_descend(rule, theory, tok)
            tr = traversals[current_trav]
            traversals[current_trav] = replace(tr, descend=tr.descend + (rule,))
        else:
            raise p.error("unknown directive", tok)
    ops = {}
    for name in order:
        ops[name] = OperationSpec(name, tuple(blocks[name]), traversals.get(name))
    for name, tr in traversals.items():
        if not tr.descend:
            raise KnowledgeError(f"traversal {name} has no #descend rule")
    return KnowledgeBase(ops, theory, frozenset(fresh or {"tau"}), PrimitiveSpec(), max_steps)


def _steps(p: _Parser) -> list[Step]:
    p.eat("[")
    out = []
    while not p.at("]"):
        t = p.tok
        a = p.atom()
        if a.pred != "link" or a.arity not in (2, 3):
            raise p.error("steps must be link(a,b) or link(a,b,label)", t)
        out.append(Step(a.args[0], a.args[1], a.args[2] if a.arity == 3 else None))
        if p.at(","):
            p.eat(",")
    p.eat("]")
    return out


def _check_block(name, block_id, pre, post, steps, theory, fresh, tok, max_steps) -> BlockSpec:
    decl = theory.predicates
    where = dict(line=tok.line, col=tok.col)
    for it in list(pre) + list(post):
        if isinstance(it, Literal):
            a = it.atom
            if a.pred not in decl:
                raise UndeclaredPredicate(f"{name}/{block_id}: unknown predicate {a.pred}", **where)
            if decl[a.pred] != a.arity:
                raise KnowledgeError(f"{name}/{block_id}: arity mismatch for {a.pred}", **where)
    for it in post:
        if isinstance(it, Comparison):
            raise KnowledgeError(f"{name}/{block_id}: comparisons are not allowed in post", **where)
        if it.atom.pred not in theory.fluents:
            raise KnowledgeError(f"{name}/{block_id}: post uses undeclared fluent {it.atom.pred}",
                                 **where)
    if len(steps) > max_steps:
        raise KnowledgeError(f"{name}/{block_id}: {len(steps)} steps exceed the bound {max_steps}",
                             **where)
    known = _node_symbols(pre, theory) | set(fresh)
    for s in steps:
        for t in (s.src, s.dst):
            if t.is_var or t.kind == "int":
                raise KnowledgeError(f"{name}/{block_id}: step {s} must use node symbols", **where)
            if t.name not in known and t.name not in theory.constants():
                raise KnowledgeError(f"{name}/{block_id}: step {s} uses undeclared node "
                                     f"symbol {t.name}", **where)
        if s.src.name == NIL:
            raise KnowledgeError(f"{name}/{block_id}: cannot link from nil", **where)
        if s.label is not None and s.label.kind == "const" and s.label.name not in theory.labels:
            raise KnowledgeError(f"{name}/{block_id}: unknown label {s.label}", **where)
    pre = tuple(Literal(_mark_atom(i.atom, theory.sentinels), i.negated)
                if isinstance(i, Literal) else i for i in pre)
    post = tuple(Literal(_mark_atom(i.atom, theory.sentinels), i.negated) for i in post)
    return BlockSpec(name, block_id, pre, post, tuple(steps))


def _check_descend(rule: Rule, theory: Theory, tok) -> None:
    derefs = [a for a in rule.pos if a.pred in ("edge", "child")]
    if len(derefs) != 1:
        raise KnowledgeError("each #descend rule needs exactly one dereference", tok.line, tok.col)
    a = derefs[0]
    if not (a.args[0] == Term("var", "X") and a.args[1] == Term("var", "Y")):
        raise KnowledgeError("the dereference must read X's successor into Y", tok.line, tok.col)
    bound = set().union(*(x.variables() for x in rule.pos)) | {"K"}
    for c in rule.cmps:
        if c.variables() - bound:
            raise UnsafeRule(f"unsafe descend rule {rule}", sorted(c.variables() - bound),
                             tok.line, tok.col)


# ------------------------------------------------------------------- bundles

def builtin_bundle(name: str) -> tuple[Theory, KnowledgeBase]:
    if name not in BUNDLES:
        raise KeyError(f"unknown bundle {name!r}; choose from {', '.join(BUNDLES)}")
    base = resources.files("cdsynth") / "bundles"
    theory = parse_theory((base / f"{name}.theory.dsl").read_text())
    kb = parse_knowledge((base / f"{name}.knowledge.dsl").read_text(), theory)
    return theory, kb
