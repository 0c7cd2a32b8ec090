"""Grammar data model: productions, rhs expressions, and flattening.

A grammar is an ordered list of productions.  Productions are either
concrete (they carry an rhs expression) or interfaces (pure alternatives
over the productions that declare to implement them).  Grammars can extend
other grammars; ``flatten`` merges an extends chain into a single
production table with child-wins overriding.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

#: The single builtin lexical nonterminal: an identifier token.
BUILTIN_NAME = "Name"

#: Marker returned by last-terminal analysis when a production can end in
#: an identifier token instead of a terminal literal.
NO_TERMINAL = "<none>"


class GrammarError(Exception):
    """Structural problem in a grammar or an extends chain."""


class LeftRecursionError(GrammarError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("left recursion through: " + " -> ".join(self.cycle))


# ---------------------------------------------------------------------------
# Rhs expressions

@dataclass(frozen=True)
class Terminal:
    text: str

    def __post_init__(self):
        if not self.text:
            raise GrammarError("empty terminal")


@dataclass(frozen=True)
class NontermRef:
    target: str
    label: str | None = None

    @property
    def key(self):
        return self.label if self.label is not None else self.target


@dataclass(frozen=True)
class Sequence:
    items: tuple

    def __post_init__(self):
        if len(self.items) < 1:
            raise GrammarError("empty sequence")


@dataclass(frozen=True)
class Alternative:
    branches: tuple

    def __post_init__(self):
        if len(self.branches) < 2:
            raise GrammarError("alternative needs at least two branches")


@dataclass(frozen=True)
class Group:
    inner: object
    cardinality: str = "one"  # one | optional | star | plus

    def __post_init__(self):
        if self.cardinality not in ("one", "optional", "star", "plus"):
            raise GrammarError("bad cardinality %r" % (self.cardinality,))


RhsExpr = (Terminal, NontermRef, Sequence, Alternative, Group)


# ---------------------------------------------------------------------------
# Productions and grammars

@dataclass(frozen=True)
class Production:
    name: str
    kind: str = "concrete"  # concrete | interface
    implements: tuple = ()
    rhs: object = None

    def __post_init__(self):
        if self.kind not in ("concrete", "interface"):
            raise GrammarError("bad production kind %r" % (self.kind,))
        if self.kind == "interface" and self.rhs is not None:
            raise GrammarError("interface production %r cannot have an rhs" % self.name)
        if self.kind == "concrete" and self.rhs is None:
            raise GrammarError("concrete production %r needs an rhs" % self.name)


@dataclass(frozen=True)
class Grammar:
    name: str
    extends: tuple = ()
    productions: tuple = ()
    source: str | None = None

    def __post_init__(self):
        if not IDENT_RE.fullmatch(self.name):
            raise GrammarError("grammar name %r is not an identifier" % self.name)
        seen = set()
        for p in self.productions:
            if p.name in seen:
                raise GrammarError(
                    "duplicate production %r in grammar %s" % (p.name, self.name))
            seen.add(p.name)


@dataclass
class SlotInfo:
    """Static shape of one slot of a production."""

    key: str
    cardinality: str          # one | optional | many
    targets: set = field(default_factory=set)
    labeled: bool = False


def _walk_refs(expr):
    if isinstance(expr, NontermRef):
        yield expr
    elif isinstance(expr, Sequence):
        for it in expr.items:
            yield from _walk_refs(it)
    elif isinstance(expr, Alternative):
        for b in expr.branches:
            yield from _walk_refs(b)
    elif isinstance(expr, Group):
        yield from _walk_refs(expr.inner)


def _walk_terminals(expr):
    if isinstance(expr, Terminal):
        yield expr.text
    elif isinstance(expr, Sequence):
        for it in expr.items:
            yield from _walk_terminals(it)
    elif isinstance(expr, Alternative):
        for b in expr.branches:
            yield from _walk_terminals(b)
    elif isinstance(expr, Group):
        yield from _walk_terminals(expr.inner)


_INF = float("inf")


def _counts(expr):
    """Per slot key: (min, max) occurrence bounds over one derivation."""
    if isinstance(expr, Terminal):
        return {}
    if isinstance(expr, NontermRef):
        return {expr.key: (1, 1)}
    if isinstance(expr, Sequence):
        acc = {}
        for it in expr.items:
            for k, (lo, hi) in _counts(it).items():
                plo, phi = acc.get(k, (0, 0))
                acc[k] = (plo + lo, phi + hi)
        return acc
    if isinstance(expr, Alternative):
        per = [_counts(b) for b in expr.branches]
        keys = set().union(*per) if per else set()
        acc = {}
        for k in keys:
            los = [c.get(k, (0, 0))[0] for c in per]
            his = [c.get(k, (0, 0))[1] for c in per]
            acc[k] = (min(los), max(his))
        return acc
    if isinstance(expr, Group):
        inner = _counts(expr.inner)
        out = {}
        for k, (lo, hi) in inner.items():
            if expr.cardinality == "optional":
                out[k] = (0, hi)
            elif expr.cardinality == "star":
                out[k] = (0, _INF if hi else 0)
            elif expr.cardinality == "plus":
                out[k] = (lo, _INF if hi else 0)
            else:
                out[k] = (lo, hi)
        return out
    raise TypeError(expr)


def slot_plan(production):
    """Map slot key -> SlotInfo for a concrete production."""
    if production.rhs is None:
        return {}
    plan = {}
    for k, (lo, hi) in _counts(production.rhs).items():
        if hi > 1:
            card = "many"
        elif lo == 0:
            card = "optional"
        else:
            card = "one"
        plan[k] = SlotInfo(key=k, cardinality=card)
    for ref in _walk_refs(production.rhs):
        info = plan[ref.key]
        info.targets.add(ref.target)
        if ref.label is not None:
            info.labeled = True
    return plan


def labeled_refs(production):
    """Every labeled nonterminal reference of a concrete production, in rhs order."""
    if production.rhs is None:
        return []
    return [(r.label, r.target) for r in _walk_refs(production.rhs)
            if r.label is not None]


def is_addressable_by_name(production):
    """True iff every derivation of the production binds a ``name`` label
    to an identifier in a non-optional position."""
    if production.kind != "concrete":
        return False

    def addr(expr):
        if isinstance(expr, NontermRef):
            return (expr.label == "name"
                    and expr.target in (BUILTIN_NAME, "QualifiedModelElementName"))
        if isinstance(expr, Sequence):
            return any(addr(it) for it in expr.items)
        if isinstance(expr, Alternative):
            return all(addr(b) for b in expr.branches)
        if isinstance(expr, Group):
            return expr.cardinality == "one" and addr(expr.inner)
        return False

    return addr(production.rhs)


# ---------------------------------------------------------------------------
# Flattening

class FlatGrammar:
    """An extends chain merged into a single validated production table."""

    def __init__(self, root, productions, implementors):
        self.root = root
        self.productions = productions      # name -> Production, insertion ordered
        self.implementors = implementors    # interface name -> [concrete names]
        self.builtins = frozenset({BUILTIN_NAME})
        self._plans = {}
        self._nullable = None
        self._last = None

    def production(self, name):
        try:
            return self.productions[name]
        except KeyError:
            raise GrammarError("unknown production %r" % name) from None

    def is_interface(self, name):
        p = self.productions.get(name)
        return p is not None and p.kind == "interface"

    def concrete_names(self):
        return [n for n, p in self.productions.items() if p.kind == "concrete"]

    def slot_plan(self, name):
        if name not in self._plans:
            self._plans[name] = slot_plan(self.production(name))
        return self._plans[name]

    def terminal_literals(self):
        out = set()
        for p in self.productions.values():
            if p.rhs is not None:
                out.update(_walk_terminals(p.rhs))
        return out

    # -- nullability ---------------------------------------------------

    def nullable(self, name):
        if self._nullable is None:
            self._nullable = _nullable_map(self)
        return self._nullable.get(name, False)

    def _nullable_expr(self, expr):
        return _nullable_expr(expr, self.nullable)

    # -- last terminals ------------------------------------------------

    def last_terminal_map(self):
        if self._last is None:
            self._last = _last_map(self)
        return self._last


def _nullable_expr(expr, prod_nullable):
    if isinstance(expr, Terminal):
        return False
    if isinstance(expr, NontermRef):
        if expr.target == BUILTIN_NAME:
            return False
        return prod_nullable(expr.target)
    if isinstance(expr, Sequence):
        return all(_nullable_expr(it, prod_nullable) for it in expr.items)
    if isinstance(expr, Alternative):
        return any(_nullable_expr(b, prod_nullable) for b in expr.branches)
    if isinstance(expr, Group):
        if expr.cardinality in ("optional", "star"):
            return True
        return _nullable_expr(expr.inner, prod_nullable)
    raise TypeError(expr)


def _nullable_map(flat):
    nullable = {n: False for n in flat.productions}
    changed = True
    while changed:
        changed = False
        for name, p in flat.productions.items():
            if p.kind == "interface":
                val = any(nullable[i] for i in flat.implementors.get(name, ()))
            else:
                val = _nullable_expr(p.rhs, lambda t: nullable.get(t, False))
            if val and not nullable[name]:
                nullable[name] = True
                changed = True
    return nullable


def _last_of(expr, last, nullable):
    """Returns (set of last terminals / NO_TERMINAL markers, may_be_empty)."""
    if isinstance(expr, Terminal):
        return {expr.text}, False
    if isinstance(expr, NontermRef):
        if expr.target == BUILTIN_NAME:
            return {NO_TERMINAL}, False
        return set(last.get(expr.target, ())), nullable.get(expr.target, False)
    if isinstance(expr, Sequence):
        acc = set()
        for it in reversed(expr.items):
            s, empty = _last_of(it, last, nullable)
            acc |= s
            if not empty:
                return acc, False
        return acc, True
    if isinstance(expr, Alternative):
        acc = set()
        empty = False
        for b in expr.branches:
            s, e = _last_of(b, last, nullable)
            acc |= s
            empty = empty or e
        return acc, empty
    if isinstance(expr, Group):
        s, e = _last_of(expr.inner, last, nullable)
        if expr.cardinality in ("optional", "star"):
            return s, True
        return s, e
    raise TypeError(expr)


def _last_map(flat):
    nullable = {n: flat.nullable(n) for n in flat.productions}
    last = {n: set() for n in flat.productions}
    changed = True
    while changed:
        changed = False
        for name, p in flat.productions.items():
            if p.kind == "interface":
                cur = set()
                for i in flat.implementors.get(name, ()):
                    cur |= last[i]
            else:
                cur, _ = _last_of(p.rhs, last, nullable)
            if cur != last[name]:
                last[name] = cur
                changed = True
    return last


def last_terminals(flat, name):
    """Every terminal that can end a complete derivation of a concrete
    production; NO_TERMINAL marks derivations ending in an identifier."""
    p = flat.production(name)
    if p.kind != "concrete":
        raise GrammarError("last_terminals needs a concrete production, got %r" % name)
    return frozenset(flat.last_terminal_map()[name])


def _left_targets(expr, nullable):
    """Nonterminals reachable at the leftmost position before any terminal."""
    if isinstance(expr, Terminal):
        return set(), False
    if isinstance(expr, NontermRef):
        if expr.target == BUILTIN_NAME:
            return set(), False
        return {expr.target}, nullable.get(expr.target, False)
    if isinstance(expr, Sequence):
        acc = set()
        for it in expr.items:
            ts, empty = _left_targets(it, nullable)
            acc |= ts
            if not empty:
                return acc, False
        return acc, True
    if isinstance(expr, Alternative):
        acc = set()
        empty = False
        for b in expr.branches:
            ts, e = _left_targets(b, nullable)
            acc |= ts
            empty = empty or e
        return acc, empty
    if isinstance(expr, Group):
        ts, e = _left_targets(expr.inner, nullable)
        if expr.cardinality in ("optional", "star"):
            return ts, True
        return ts, e
    raise TypeError(expr)


def _check_left_recursion(flat):
    nullable = {n: flat.nullable(n) for n in flat.productions}
    edges = {}
    for name, p in flat.productions.items():
        if p.kind == "interface":
            edges[name] = set(flat.implementors.get(name, ()))
        else:
            edges[name], _ = _left_targets(p.rhs, nullable)

    WHITE, GREY, BLACK = 0, 1, 2
    color = {n: WHITE for n in edges}
    stack = []

    def visit(n):
        color[n] = GREY
        stack.append(n)
        for m in sorted(edges.get(n, ())):
            if m not in color:
                continue
            if color[m] == GREY:
                cycle = stack[stack.index(m):] + [m]
                raise LeftRecursionError(cycle)
            if color[m] == WHITE:
                visit(m)
        stack.pop()
        color[n] = BLACK

    for n in edges:
        if color[n] == WHITE:
            visit(n)


def flatten(grammars, root):
    """Merge an extends chain into a FlatGrammar.

    Same-name productions are overridden child-wins along the chain;
    interface implementor lists accumulate in declaration order with the
    extending grammar's implementors first.
    """
    by_name = {}
    for g in grammars:
        if g.name in by_name:
            raise GrammarError("grammar %r given twice" % g.name)
        by_name[g.name] = g

    order = []
    seen = set()

    def visit(name):
        if name in seen:
            return
        if name not in by_name:
            raise GrammarError("unresolved grammar name %r" % name)
        seen.add(name)
        g = by_name[name]
        order.append(g)
        for e in g.extends:
            visit(e)

    visit(root)

    productions = {}
    implementors = {}
    for g in order:
        for p in g.productions:
            if p.name in productions:
                # child already won; only sanity-check the override shape
                if productions[p.name].kind != p.kind:
                    raise GrammarError(
                        "production %r overridden with a different kind" % p.name)
                continue
            productions[p.name] = p
            if p.kind == "interface":
                implementors.setdefault(p.name, [])
            else:
                for i in p.implements:
                    implementors.setdefault(i, []).append(p.name)

    flat = FlatGrammar(root, productions, implementors)

    for name, p in productions.items():
        for i in p.implements:
            tgt = productions.get(i)
            if tgt is None or tgt.kind != "interface":
                raise GrammarError(
                    "production %r implements %r, which is not an interface"
                    % (name, i))
        if p.rhs is None:
            continue
        for ref in _walk_refs(p.rhs):
            if ref.target == BUILTIN_NAME:
                continue
            if ref.target not in productions:
                raise GrammarError(
                    "unresolved nonterminal %r referenced from %r"
                    % (ref.target, name))

    _check_left_recursion(flat)
    return flat
