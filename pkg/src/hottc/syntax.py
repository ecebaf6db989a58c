"""Lexer, recursive-descent parser, notation desugaring and a surface printer.

The notation table is fixed. Every Unicode token has an ASCII spelling,
normalized by the lexer into the token's `value` while `text` keeps the
source characters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from . import level as lv
from .errors import LexError, ParseError
from .level import Level
from .term import EXPLICIT, IMPLICIT, INST

Span = tuple[int, int]

IDENT = "identifier"
KEYWORD = "keyword"
SYMBOL = "symbol"
ULIT = "universe-literal"
DIRECTIVE = "directive"
STRING = "string"
EOF = "eof"

KEYWORDS = {"definition", "axiom", "inductive", "hit", "attribute", "import", "Type"}
DIRECTIVES = {"#defeq", "#check", "#print_axioms", "#normalize"}

# ASCII (and keyword) spellings of Unicode notation
ALIASES = {
    "fun": "λ", "\\lam": "λ", "\\Pi": "Π", "\\Sigma": "Σ", "->": "→", "\\to": "→",
    "\\.": "⬝", "-1": "⁻¹", "^-1": "⁻¹", "~=": "≃", "\\tr": "▸", "\\o": "∘",
    "\\times": "×", "\\x": "×",
}

# longest first
SYMBOLS = sorted(
    [":=", ".{", "=[", "(", ")", "{", "}", "[", "]", ",", ":", "|", "@", "=", "→", "⬝", "⁻¹",
     "▸", "∘", "≃", "×", "+", "*", "λ", "Π", "Σ", "->", "-1", "^-1", "~="],
    key=len, reverse=True,
)

_NOT_IDENT = set("λΠΣ")
_SUBSCRIPTS = set("₀₁₂₃₄₅₆₇₈₉")
_SUPERSCRIPTS = set("⁰¹²³⁴⁵⁶⁷⁸⁹")


def _ident_start(c: str) -> bool:
    return (c.isalpha() and c not in _NOT_IDENT) or c == "_"


def _ident_char(c: str) -> bool:
    return (_ident_start(c) or c.isdigit() or c == "'" or c in _SUBSCRIPTS
            or c in _SUPERSCRIPTS) and c not in _NOT_IDENT and c != "⁻"


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: Span
    value: str = ""

    def __post_init__(self):
        if not self.value:
            object.__setattr__(self, "value", self.text)


def tokenize(source: str) -> list[Token]:
    toks: list[Token] = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if source.startswith("--", i):
            j = source.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if source.startswith("/-", i):
            j = source.find("-/", i + 2)
            if j < 0:
                raise LexError("unterminated block comment", (i, n))
            i = j + 2
            continue
        if c == '"':
            j = source.find('"', i + 1)
            if j < 0 or "\n" in source[i:j]:
                raise LexError("unterminated string literal", (i, n if j < 0 else j))
            toks.append(Token(STRING, source[i:j + 1], (i, j + 1), source[i + 1:j]))
            i = j + 1
            continue
        if c == "#":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            if word not in DIRECTIVES:
                raise LexError(f"unknown directive '{word}'", (i, j))
            toks.append(Token(DIRECTIVE, word, (i, j)))
            i = j
            continue
        if c == "\\":
            j = i + 1
            if j < n and source[j] == ".":
                j += 1
            else:
                while j < n and source[j].isalpha():
                    j += 1
            word = source[i:j]
            if word not in ALIASES:
                raise LexError(f"unknown escape '{word}'", (i, j))
            toks.append(Token(SYMBOL, word, (i, j), ALIASES[word]))
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            toks.append(Token(ULIT, source[i:j], (i, j)))
            i = j
            continue
        if _ident_start(c):
            j = i
            while True:
                while j < n and _ident_char(source[j]):
                    j += 1
                # dotted names: a '.' directly followed by another identifier segment
                if j + 1 < n and source[j] == "." and _ident_start(source[j + 1]):
                    j += 1
                    continue
                break
            word = source[i:j]
            if word == "_":
                toks.append(Token(SYMBOL, word, (i, j)))
            elif word in KEYWORDS:
                toks.append(Token(KEYWORD, word, (i, j)))
            elif word in ALIASES:
                toks.append(Token(SYMBOL, word, (i, j), ALIASES[word]))
            else:
                toks.append(Token(IDENT, word, (i, j)))
            i = j
            continue
        for s in SYMBOLS:
            if source.startswith(s, i):
                toks.append(Token(SYMBOL, s, (i, i + len(s)), ALIASES.get(s, s)))
                i += len(s)
                break
        else:
            raise LexError(f"illegal character {c!r}", (i, i + 1))
    toks.append(Token(EOF, "", (n, n)))
    return toks


# ---------------------------------------------------------------------------
# surface trees; spans take no part in equality


@dataclass
class Binder:
    name: str
    type: Optional["STerm"]
    vis: str = EXPLICIT
    span: Span = field(default=(0, 0), compare=False)


@dataclass
class SVar:
    name: str
    levels: Optional[list[Optional[Level]]] = None
    span: Span = field(default=(0, 0), compare=False)


@dataclass
class SSort:
    level: Optional[Level]  # None: to be inferred
    span: Span = field(default=(0, 0), compare=False)


@dataclass
class SApp:
    fn: "STerm"
    arg: "STerm"
    span: Span = field(default=(0, 0), compare=False)


@dataclass
class SLam:
    binders: list[Binder]
    body: "STerm"
    span: Span = field(default=(0, 0), compare=False)


@dataclass
class SPi:
    binders: list[Binder]
    body: "STerm"
    span: Span = field(default=(0, 0), compare=False)


@dataclass
class SArrow:
    dom: "STerm"
    cod: "STerm"
    span: Span = field(default=(0, 0), compare=False)


@dataclass
class SExplicit:
    name: str
    levels: Optional[list[Optional[Level]]] = None
    span: Span = field(default=(0, 0), compare=False)


@dataclass
class SHole:
    span: Span = field(default=(0, 0), compare=False)


@dataclass
class SNotation:
    op: str  # an infix/postfix symbol, "=[]" or "Σ"
    parts: list["STerm"]
    span: Span = field(default=(0, 0), compare=False)


STerm = Union[SVar, SSort, SApp, SLam, SPi, SArrow, SExplicit, SHole, SNotation]


@dataclass
class Ctor:
    name: str
    binders: list[Binder]
    type: STerm
    span: Span = field(default=(0, 0), compare=False)


@dataclass
class SurfaceDecl:
    kind: str  # definition | axiom | inductive | hit-init | attribute | import | directive
    name: str = ""
    univ_params: list[str] = field(default_factory=list)
    binders: list[Binder] = field(default_factory=list)
    type: Optional[STerm] = None
    value: Optional[STerm] = None
    attributes: list[str] = field(default_factory=list)
    ctors: list[Ctor] = field(default_factory=list)
    directive: str = ""  # defeq | check | print_axioms | normalize
    terms: list[STerm] = field(default_factory=list)
    names: list[str] = field(default_factory=list)  # expected axioms for #print_axioms
    expect_axioms: bool = False
    span: Span = field(default=(0, 0), compare=False)


ATTRIBUTES = ("class", "instance", "coercion")

# binary operators: symbol -> (precedence, associativity, function name)
INFIX = {
    "→": (25, "right", None),
    "≃": (27, "right", "equiv"),
    "×": (35, "right", "prod"),
    "=": (50, "none", "eq"),
    "=[]": (50, "none", "pathover"),
    "∘": (60, "right", "compose"),
    "+": (65, "left", "add"),
    "*": (70, "left", "mul"),
    "▸": (73, "right", "transport"),
    "⬝": (75, "left", "concat"),
}
POSTFIX = {"⁻¹": "inverse"}


# ---------------------------------------------------------------------------
# parser


class Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, value: str, kind: Optional[str] = None) -> bool:
        t = self.tok
        return t.value == value and (kind is None or t.kind == kind) and t.kind != STRING

    def advance(self) -> Token:
        t = self.tok
        if t.kind != EOF:
            self.i += 1
        return t

    def fail(self, expected: str):
        t = self.tok
        found = "end of input" if t.kind == EOF else f"'{t.text}'"
        raise ParseError(f"expected {expected}, found {found}", t.span)

    def expect(self, value: str) -> Token:
        if not self.at(value):
            self.fail(f"'{value}'")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != IDENT:
            self.fail(what)
        return self.advance()

    def _span(self, start: int) -> Span:
        prev = self.toks[self.i - 1] if self.i > 0 else self.tok
        return (start, max(prev.span[1], start))

    # -- levels ------------------------------------------------------------

    def level(self) -> Optional[Level]:
        if self.tok.kind == IDENT and self.tok.value == "max":
            self.advance()
            args = [self.level_atom()]
            while not (self.at("}") or self.at(")")) and self.tok.kind != EOF:
                args.append(self.level_atom())
            if len(args) < 2:
                self.fail("a second argument to max")
            if any(a is None for a in args):
                self.fail("a level")
            return lv.lmax(*args)
        l = self.level_atom()
        while self.at("+"):
            self.advance()
            if self.tok.kind != ULIT:
                self.fail("a numeral")
            k = int(self.advance().text)
            if l is None:
                self.fail("a level")
            l = lv.succ(l, k)
        return l

    def level_atom(self) -> Optional[Level]:
        t = self.tok
        if t.kind == ULIT:
            self.advance()
            return lv.succ(lv.ZERO, int(t.text))
        if t.kind == IDENT and t.value != "max":
            self.advance()
            return lv.LParam(t.text)
        if self.at("_"):
            self.advance()
            return None
        if self.at("("):
            self.advance()
            l = self.level()
            self.expect(")")
            return l
        self.fail("a universe level")

    def level_args(self) -> list[Optional[Level]]:
        self.expect(".{")
        out = []
        while not self.at("}"):
            out.append(self.level_atom())
        self.expect("}")
        return out

    # -- binders -------------------------------------------------------------

    _OPEN = {"(": (")", EXPLICIT), "{": ("}", IMPLICIT), "[": ("]", INST)}

    def _is_binder_group(self) -> bool:
        """At a bracket that opens `names : type` rather than a parenthesized term."""
        if self.tok.value not in self._OPEN or self.tok.kind != SYMBOL:
            return False
        if self.tok.value in "{[":
            return True
        k = 1
        while self.peek(k).kind == IDENT or self.peek(k).value == "_":
            k += 1
        return k > 1 and self.peek(k).value == ":"

    def binder_group(self, allow_bare: bool = False) -> list[Binder]:
        start = self.tok.span[0]
        close, vis = self._OPEN[self.advance().value]
        names = []
        while self.tok.kind == IDENT or self.at("_"):
            names.append(self.advance().text)
        if not names:
            self.fail("a binder name")
        ty = None
        if self.at(":"):
            self.advance()
            ty = self.term()
        elif not allow_bare and vis == EXPLICIT:
            self.fail("':'")
        self.expect(close)
        span = self._span(start)
        return [Binder(n, ty, vis, span) for n in names]

    def telescope(self, allow_bare: bool = True) -> list[Binder]:
        """Bracketed binder groups, as in declaration headers."""
        out: list[Binder] = []
        while self.tok.value in self._OPEN and self.tok.kind == SYMBOL and self._is_binder_group():
            out.extend(self.binder_group(allow_bare))
        _check_duplicates(out)
        return out

    def lambda_binders(self) -> list[Binder]:
        """Binders after λ/Π/Σ, up to and including the comma."""
        out: list[Binder] = []
        while True:
            if self.tok.kind == IDENT or self.at("_"):
                start = self.tok.span[0]
                names = []
                while self.tok.kind == IDENT or self.at("_"):
                    names.append(self.advance().text)
                ty = None
                if self.at(":"):
                    self.advance()
                    ty = self.term()
                span = self._span(start)
                out.extend(Binder(n, ty, EXPLICIT, span) for n in names)
                if ty is not None:
                    break
            elif self.tok.value in self._OPEN and self.tok.kind == SYMBOL:
                out.extend(self.binder_group(allow_bare=True))
            else:
                break
        if not out:
            self.fail("a binder")
        self.expect(",")
        _check_duplicates(out)
        return out

    # -- terms ---------------------------------------------------------------

    def term(self, min_prec: int = 0) -> STerm:
        start = self.tok.span[0]
        if self.tok.kind == SYMBOL and self.tok.value in ("λ", "Π", "Σ"):
            which = self.advance().value
            binders = self.lambda_binders()
            body = self.term()
            span = self._span(start)
            if which == "λ":
                return SLam(binders, body, span)
            if which == "Π":
                return SPi(binders, body, span)
            return SNotation("Σ", [SLam(binders, body, span)], span)
        lhs = self.application()
        while True:
            t = self.tok
            if t.kind != SYMBOL:
                break
            op = "=[]" if t.value == "=[" else t.value
            if op not in INFIX:
                break
            prec, assoc, _ = INFIX[op]
            if prec < min_prec:
                break
            self.advance()
            parts = []
            if op == "=[]":
                parts.append(self.term())
                self.expect("]")
            nxt = prec if assoc == "right" else prec + 1
            rhs = self.term(nxt)
            span = self._span(start)
            if op == "→":
                lhs = SArrow(lhs, rhs, span)
            else:
                lhs = SNotation(op, [lhs] + parts + [rhs], span)
            if assoc == "none" and self.tok.kind == SYMBOL and self.tok.value in ("=", "=["):
                self.fail("parentheses around a chained equation")
        return lhs

    def _starts_atom(self) -> bool:
        t = self.tok
        if t.kind == IDENT:
            return True
        if t.kind == KEYWORD:
            return t.value == "Type"
        return t.kind == SYMBOL and t.value in ("(", "_", "@")

    def application(self) -> STerm:
        start = self.tok.span[0]
        fn = self.atom()
        while self._starts_atom():
            arg = self.atom()
            fn = SApp(fn, arg, self._span(start))
        return fn

    def atom(self) -> STerm:
        start = self.tok.span[0]
        t = self.tok
        if t.kind == IDENT:
            self.advance()
            levels = self.level_args() if self.at(".{") else None
            node: STerm = SVar(t.text, levels, self._span(start))
        elif t.kind == KEYWORD and t.value == "Type":
            self.advance()
            level = None
            if self.at(".{"):
                self.advance()
                level = self.level()
                if level is None:
                    self.fail("a universe level")
                self.expect("}")
            node = SSort(level, self._span(start))
        elif self.at("_"):
            self.advance()
            node = SHole(self._span(start))
        elif self.at("@"):
            self.advance()
            name = self.ident("a constant name after '@'")
            levels = self.level_args() if self.at(".{") else None
            node = SExplicit(name.text, levels, self._span(start))
        elif self.at("("):
            self.advance()
            node = self.term()
            self.expect(")")
        else:
            self.fail("a term")
        while self.tok.kind == SYMBOL and self.tok.value in POSTFIX:
            op = self.advance().value
            node = SNotation(op, [node], self._span(start))
        return node

    # -- declarations --------------------------------------------------------

    def univ_params(self) -> list[str]:
        if not self.at(".{"):
            return []
        self.advance()
        out = []
        while self.tok.kind == IDENT:
            out.append(self.advance().text)
        self.expect("}")
        if not out:
            self.fail("a universe parameter name")
        return out

    def attrs(self) -> list[str]:
        out = []
        while self.at("[") and self.peek().value in ATTRIBUTES and self.peek(2).value == "]":
            self.advance()
            out.append(self.advance().value)
            self.advance()
        return out

    def decl(self) -> SurfaceDecl:
        start = self.tok.span[0]
        t = self.tok
        if t.kind == KEYWORD and t.value in ("definition", "axiom"):
            self.advance()
            name = self.ident("a declaration name").text
            univs = self.univ_params()
            attrs = self.attrs()
            binders = self.telescope()
            ty = None
            if t.value == "axiom" or self.at(":"):
                self.expect(":")
                ty = self.term()
            value = None
            if t.value == "definition":
                self.expect(":=")
                value = self.term()
            return SurfaceDecl(t.value, name, univs, binders, ty, value, attrs, span=self._span(start))
        if t.kind == KEYWORD and t.value == "inductive":
            self.advance()
            name = self.ident("a type name").text
            univs = self.univ_params()
            attrs = self.attrs()
            binders = self.telescope()
            self.expect(":")
            ty = self.term()
            self.expect(":=")
            ctors = []
            while self.at("|"):
                cstart = self.advance().span[0]
                cname = self.ident("a constructor name").text
                cbinders = self.telescope()
                self.expect(":")
                cty = self.term()
                ctors.append(Ctor(cname, cbinders, cty, self._span(cstart)))
            return SurfaceDecl("inductive", name, univs, binders, ty, None, attrs, ctors,
                               span=self._span(start))
        if t.kind == KEYWORD and t.value == "hit":
            self.advance()
            w = self.tok
            if w.kind != IDENT or w.text not in ("quotient", "trunc"):
                self.fail("'quotient' or 'trunc'")
            self.advance()
            return SurfaceDecl("hit-init", w.text, span=self._span(start))
        if t.kind == KEYWORD and t.value == "attribute":
            self.advance()
            name = self.ident("a constant name").text
            attrs = self.attrs()
            if not attrs:
                self.fail("an attribute such as [instance]")
            return SurfaceDecl("attribute", name, attributes=attrs, span=self._span(start))
        if t.kind == KEYWORD and t.value == "import":
            self.advance()
            if self.tok.kind != STRING:
                self.fail("a string literal")
            path = self.advance().value
            return SurfaceDecl("import", path, span=self._span(start))
        if t.kind == DIRECTIVE:
            return self.directive()
        self.fail("a declaration")

    def directive(self) -> SurfaceDecl:
        start = self.tok.span[0]
        which = self.advance().value[1:]
        if which == "print_axioms":
            name = self.ident("a constant name").text
            d = SurfaceDecl("directive", name, directive=which, span=(0, 0))
            if self.at("[") and self.peek().value not in ATTRIBUTES:
                self.advance()
                d.expect_axioms = True
                while not self.at("]"):
                    d.names.append(self.ident("an axiom name").text)
                    if self.at(","):
                        self.advance()
                self.expect("]")
            d.span = self._span(start)
            return d
        binders: list[Binder] = []
        if self._is_binder_group():
            binders = self.telescope()
            self.expect(",")
        if which == "defeq":
            terms = [self.atom(), self.atom()]
        elif which == "check":
            terms = [self.term()]
            self.expect(":")
            terms.append(self.term())
        else:
            terms = [self.term()]
        return SurfaceDecl("directive", "", binders=binders, directive=which, terms=terms,
                           span=self._span(start))

    def module(self) -> list[SurfaceDecl]:
        out = []
        while self.tok.kind != EOF:
            out.append(self.decl())
        return out


def _check_duplicates(binders: list[Binder]) -> None:
    seen: set[str] = set()
    for b in binders:
        if b.name == "_":
            continue
        if b.name in seen:
            raise ParseError(f"duplicate binder name '{b.name}'", b.span)
        seen.add(b.name)


def parse_module(tokens: Union[list[Token], str]) -> list[SurfaceDecl]:
    if isinstance(tokens, str):
        tokens = tokenize(tokens)
    return Parser(tokens).module()


def parse_term(source: str) -> STerm:
    p = Parser(tokenize(source))
    t = p.term()
    if p.tok.kind != EOF:
        p.fail("end of input")
    return t


def parse_declaration_group(source: str) -> list[SurfaceDecl]:
    return parse_module(tokenize(source))


# ---------------------------------------------------------------------------
# desugaring


def desugar(t: STerm) -> STerm:
    match t:
        case SVar() | SSort() | SHole() | SExplicit():
            return t
        case SApp(fn, arg, span):
            return SApp(desugar(fn), desugar(arg), span)
        case SLam(bs, body, span):
            return SLam(_desugar_binders(bs), desugar(body), span)
        case SPi(bs, body, span):
            return SPi(_desugar_binders(bs), desugar(body), span)
        case SArrow(dom, cod, span):
            return SPi([Binder("_", desugar(dom), EXPLICIT, span)], desugar(cod), span)
        case SNotation(op, parts, span):
            ps = [desugar(p) for p in parts]
            if op == "Σ":
                lam = ps[0]
                assert isinstance(lam, SLam)
                out = lam.body
                for b in reversed(lam.binders):
                    out = SApp(SVar("sigma", None, span), SLam([b], out, span), span)
                return out
            if op in POSTFIX:
                return SApp(SVar(POSTFIX[op], None, span), ps[0], span)
            fn = INFIX[op][2]
            if op == "=[]":
                args = [SHole(span)] + ps  # x =[p] y  ~>  pathover _ x p y
            elif op == "▸":
                args = [SHole(span)] + ps
            else:
                args = ps
            out: STerm = SVar(fn, None, span)
            for a in args:
                out = SApp(out, a, span)
            return out
    raise TypeError(t)


def _desugar_binders(bs: list[Binder]) -> list[Binder]:
    return [Binder(b.name, None if b.type is None else desugar(b.type), b.vis, b.span) for b in bs]


def desugar_decl(d: SurfaceDecl) -> SurfaceDecl:
    def ds(t):
        return None if t is None else desugar(t)

    return SurfaceDecl(
        d.kind, d.name, list(d.univ_params), _desugar_binders(d.binders), ds(d.type), ds(d.value),
        list(d.attributes),
        [Ctor(c.name, _desugar_binders(c.binders), desugar(c.type), c.span) for c in d.ctors],
        d.directive, [desugar(t) for t in d.terms], list(d.names), d.expect_axioms, d.span,
    )


# ---------------------------------------------------------------------------
# printing (parse(print(x)) == x)


def _show_level(l: Optional[Level]) -> str:
    if l is None:
        return "_"
    return lv.show_level(l).replace("+", " + ")


def _level_arg(l: Optional[Level]) -> str:
    s = _show_level(l)
    return f"({s})" if " " in s else s


_BRK = {EXPLICIT: "()", IMPLICIT: "{}", INST: "[]"}


def show_binders(bs: list[Binder]) -> str:
    out = []
    for b in bs:
        o, c = _BRK[b.vis]
        body = b.name if b.type is None else f"{b.name} : {show_term(b.type)}"
        out.append(f"{o}{body}{c}")
    return " ".join(out)


def _is_atomic(t: STerm) -> bool:
    return isinstance(t, (SVar, SSort, SHole, SExplicit)) or (
        isinstance(t, SNotation) and t.op in POSTFIX)


def _arg(t: STerm) -> str:
    return show_term(t) if _is_atomic(t) else f"({show_term(t)})"


def _operand(t: STerm) -> str:
    return show_term(t) if _is_atomic(t) or isinstance(t, SApp) else f"({show_term(t)})"


def show_term(t: STerm) -> str:
    match t:
        case SVar(name, levels):
            return name + ("" if levels is None else ".{" + " ".join(_level_arg(l) for l in levels) + "}")
        case SExplicit(name, levels):
            return "@" + name + ("" if levels is None else ".{" + " ".join(_level_arg(l) for l in levels) + "}")
        case SSort(level):
            return "Type" if level is None else "Type.{" + _show_level(level) + "}"
        case SHole():
            return "_"
        case SApp(fn, arg):
            f = show_term(fn) if isinstance(fn, SApp) or _is_atomic(fn) else f"({show_term(fn)})"
            return f"{f} {_arg(arg)}"
        case SLam(bs, body):
            return f"λ {show_binders(bs)}, {show_term(body)}"
        case SPi(bs, body):
            return f"Π {show_binders(bs)}, {show_term(body)}"
        case SArrow(dom, cod):
            return f"{_operand(dom)} → {_operand(cod)}"
        case SNotation(op, parts):
            if op == "Σ":
                lam = parts[0]
                return f"Σ {show_binders(lam.binders)}, {show_term(lam.body)}"
            if op in POSTFIX:
                return f"{_arg(parts[0])}{op}"
            if op == "=[]":
                return f"{_operand(parts[0])} =[{show_term(parts[1])}] {_operand(parts[2])}"
            return f"{_operand(parts[0])} {op} {_operand(parts[1])}"
    raise TypeError(t)


def show_decl(d: SurfaceDecl) -> str:
    univs = (".{" + " ".join(d.univ_params) + "}") if d.univ_params else ""
    attrs = "".join(f" [{a}]" for a in d.attributes)
    bs = (" " + show_binders(d.binders)) if d.binders else ""
    if d.kind in ("definition", "axiom"):
        s = f"{d.kind} {d.name}{univs}{attrs}{bs}"
        if d.type is not None:
            s += f" : {show_term(d.type)}"
        if d.value is not None:
            s += f" :=\n  {show_term(d.value)}"
        return s
    if d.kind == "inductive":
        s = f"inductive {d.name}{univs}{attrs}{bs} : {show_term(d.type)} :="
        for c in d.ctors:
            cb = (" " + show_binders(c.binders)) if c.binders else ""
            s += f"\n| {c.name}{cb} : {show_term(c.type)}"
        return s
    if d.kind == "hit-init":
        return f"hit {d.name}"
    if d.kind == "attribute":
        return f"attribute {d.name}{attrs}"
    if d.kind == "import":
        return f'import "{d.name}"'
    if d.kind == "directive":
        if d.directive == "print_axioms":
            s = f"#print_axioms {d.name}"
            if d.expect_axioms:
                s += " [" + ", ".join(d.names) + "]"
            return s
        head = f"#{d.directive} " + (show_binders(d.binders) + ", " if d.binders else "")
        if d.directive == "defeq":
            return head + f"{_arg(d.terms[0])} {_arg(d.terms[1])}"
        if d.directive == "check":
            return head + f"{show_term(d.terms[0])} : {show_term(d.terms[1])}"
        return head + show_term(d.terms[0])
    raise ValueError(d.kind)


def show_module(decls: list[SurfaceDecl]) -> str:
    return "\n\n".join(show_decl(d) for d in decls) + "\n"
