"""Reader for the textual ``.dg`` grammar format.

The format::

    grammar <Name> (extends <Name> (, <Name>)*)? {
      interface <Name> ;
      <Name> (implements <Name> (, <Name>)*)? = <rhs> ;
    }

Rhs expressions support double-quoted terminals, ``label:Target``
references, ``|`` alternatives, parenthesized groups and ``? * +``
cardinality suffixes.  ``//`` and ``/* */`` comments are skipped.
"""

from __future__ import annotations

from .model import (
    Alternative,
    BUILTIN_NAME,
    Grammar,
    GrammarError,
    Group,
    IDENT_RE,
    NontermRef,
    Production,
    Sequence,
    Terminal,
)


class GrammarSyntaxError(GrammarError):
    def __init__(self, message, origin, line, column):
        self.origin = origin
        self.line = line
        self.column = column
        super().__init__("%s:%d:%d: %s" % (origin, line, column, message))


_PUNCT = ("{", "}", "(", ")", ";", ",", "=", ":", "|", "?", "*", "+")


class _Tok:
    __slots__ = ("kind", "text", "line", "column")

    def __init__(self, kind, text, line, column):
        self.kind = kind          # ident | string | punct | eof
        self.text = text
        self.line = line
        self.column = column


def _lex(text, origin):
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                raise GrammarSyntaxError("unterminated comment", origin, line, col)
            skipped = text[i:end + 2]
            line += skipped.count("\n")
            if "\n" in skipped:
                col = len(skipped) - skipped.rfind("\n")
            else:
                col += len(skipped)
            i = end + 2
            continue
        if c == '"':
            j = i + 1
            out = []
            while j < n and text[j] != '"':
                if text[j] == "\\":
                    if j + 1 >= n or text[j + 1] not in ('"', "\\"):
                        raise GrammarSyntaxError("bad escape", origin, line, col)
                    out.append(text[j + 1])
                    j += 2
                elif text[j] == "\n":
                    raise GrammarSyntaxError("unterminated string", origin, line, col)
                else:
                    out.append(text[j])
                    j += 1
            if j >= n:
                raise GrammarSyntaxError("unterminated string", origin, line, col)
            toks.append(_Tok("string", "".join(out), line, col))
            col += j + 1 - i
            i = j + 1
            continue
        m = IDENT_RE.match(text, i)
        if m:
            toks.append(_Tok("ident", m.group(), line, col))
            col += len(m.group())
            i = m.end()
            continue
        if c in _PUNCT:
            toks.append(_Tok("punct", c, line, col))
            i += 1
            col += 1
            continue
        raise GrammarSyntaxError("illegal character %r" % c, origin, line, col)
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Reader:
    def __init__(self, text, origin):
        self.origin = origin
        self.toks = _lex(text, origin)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise GrammarSyntaxError(message, self.origin, tok.line, tok.column)

    def expect_punct(self, text):
        t = self.peek()
        if t.kind != "punct" or t.text != text:
            self.error("expected %r" % text)
        return self.next()

    def expect_ident(self, what="identifier"):
        t = self.peek()
        if t.kind != "ident":
            self.error("expected %s" % what)
        return self.next()

    def at_punct(self, text):
        t = self.peek()
        return t.kind == "punct" and t.text == text

    def at_keyword(self, word):
        t = self.peek()
        return t.kind == "ident" and t.text == word

    # -- grammar level -------------------------------------------------

    def grammar(self):
        if not self.at_keyword("grammar"):
            self.error("expected 'grammar'")
        self.next()
        name = self.expect_ident("grammar name").text
        extends = []
        if self.at_keyword("extends"):
            self.next()
            extends.append(self.expect_ident("grammar name").text)
            while self.at_punct(","):
                self.next()
                extends.append(self.expect_ident("grammar name").text)
        self.expect_punct("{")
        productions = []
        seen = set()
        while not self.at_punct("}"):
            tok = self.peek()
            p = self.production()
            if p.name in seen:
                self.error("duplicate production %r" % p.name, tok)
            if p.name == BUILTIN_NAME:
                self.error("production may not be named %r" % BUILTIN_NAME, tok)
            seen.add(p.name)
            productions.append(p)
        self.expect_punct("}")
        if self.peek().kind != "eof":
            self.error("trailing input after grammar")
        return Grammar(name=name, extends=tuple(extends),
                       productions=tuple(productions), source=self.origin)

    def production(self):
        if self.at_keyword("interface"):
            self.next()
            name = self.expect_ident("interface name").text
            self.expect_punct(";")
            return Production(name=name, kind="interface")
        name = self.expect_ident("production name").text
        implements = []
        if self.at_keyword("implements"):
            self.next()
            implements.append(self.expect_ident("interface name").text)
            while self.at_punct(","):
                self.next()
                implements.append(self.expect_ident("interface name").text)
        self.expect_punct("=")
        rhs = self.alternative()
        self.expect_punct(";")
        return Production(name=name, implements=tuple(implements), rhs=rhs)

    # -- rhs level -----------------------------------------------------

    def alternative(self):
        branches = [self.sequence()]
        while self.at_punct("|"):
            self.next()
            branches.append(self.sequence())
        if len(branches) == 1:
            return branches[0]
        return Alternative(branches=tuple(branches))

    def sequence(self):
        items = [self.item()]
        while True:
            t = self.peek()
            if t.kind == "string" or t.kind == "ident" or (
                    t.kind == "punct" and t.text == "("):
                items.append(self.item())
            else:
                break
        if len(items) == 1:
            return items[0]
        return Sequence(items=tuple(items))

    def item(self):
        t = self.peek()
        if t.kind == "punct" and t.text in ("?", "*", "+"):
            self.error("cardinality suffix with nothing to apply to")
        atom = self.primary()
        t = self.peek()
        if t.kind == "punct" and t.text in ("?", "*", "+"):
            self.next()
            card = {"?": "optional", "*": "star", "+": "plus"}[t.text]
            return Group(inner=atom, cardinality=card)
        return atom

    def primary(self):
        t = self.peek()
        if t.kind == "string":
            self.next()
            if not t.text:
                self.error("empty terminal", t)
            return Terminal(text=t.text)
        if t.kind == "ident":
            self.next()
            if self.at_punct(":"):
                self.next()
                target = self.expect_ident("reference target").text
                return NontermRef(target=target, label=t.text)
            return NontermRef(target=t.text)
        if t.kind == "punct" and t.text == "(":
            self.next()
            inner = self.alternative()
            self.expect_punct(")")
            nxt = self.peek()
            if nxt.kind == "punct" and nxt.text in ("?", "*", "+"):
                self.next()
                card = {"?": "optional", "*": "star", "+": "plus"}[nxt.text]
                return Group(inner=inner, cardinality=card)
            if isinstance(inner, (Terminal, NontermRef, Group)):
                return inner
            return Group(inner=inner, cardinality="one")
        self.error("expected a terminal, reference, or group")


def parse_grammar(text, origin="<string>"):
    """Parse ``.dg`` text into a Grammar value."""
    return _Reader(text, origin).grammar()
