"""File-level checking: imports, declarations, directives and reports."""

from __future__ import annotations

import json
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, TypeVar

from .elaborator import Elaborator, Options, add_attribute, elaborate_definition, elaborate_inductive
from .env import INDUCTIVE, Declaration, Environment
from .errors import DirectiveFailure, HottError, ImportError_, ParseError
from .hits import init_hit
from .inductives import InductiveDecl
from .kernel import TypeChecker, check_declaration, collect_axioms
from .pretty import pp
from .syntax import SurfaceDecl, desugar_decl, parse_module, parse_term, desugar
from .term import mk_lambda, mk_pi

T = TypeVar("T")

EXIT_OK, EXIT_TYPE, EXIT_PARSE, EXIT_IO = 0, 1, 2, 3
_EXIT_FOR_CLASS = {"parse": EXIT_PARSE, "io": EXIT_IO}


def run_with_big_stack(fn: Callable[[], T], stack_mb: int = 512) -> T:
    """Run fn in a thread with a large stack; deep terms recurse deeply."""
    box: dict = {}

    def target() -> None:
        try:
            box["value"] = fn()
        except BaseException as e:  # re-raised in the caller's thread
            box["error"] = e

    old = threading.stack_size()
    threading.stack_size(stack_mb * 1024 * 1024)
    try:
        th = threading.Thread(target=target)
        th.start()
        th.join()
    finally:
        threading.stack_size(old)
    if "error" in box:
        raise box["error"]
    return box["value"]


def line_col(source: str, offset: int) -> tuple[int, int]:
    line = source.count("\n", 0, offset) + 1
    col = offset - (source.rfind("\n", 0, offset) + 1) + 1
    return line, col


@dataclass
class Diagnostic:
    path: str
    line: int
    col: int
    error_class: str
    kind: str
    message: str

    def format(self) -> str:
        return f"{self.path}:{self.line}:{self.col}: {self.error_class} error ({self.kind}): {self.message}"


@dataclass
class DirectiveResult:
    path: str
    line: int
    directive: str
    passed: bool
    output: str


@dataclass
class FileReport:
    path: str
    declarations: list[str] = field(default_factory=list)
    directives: list[DirectiveResult] = field(default_factory=list)
    errors: list[Diagnostic] = field(default_factory=list)
    axioms: list[str] = field(default_factory=list)

    @property
    def directives_passed(self) -> int:
        return sum(d.passed for d in self.directives)

    @property
    def directives_failed(self) -> int:
        return sum(not d.passed for d in self.directives)


@dataclass
class CheckReport:
    files: list[FileReport] = field(default_factory=list)
    errors: list[Diagnostic] = field(default_factory=list)  # not attributable to a checked file
    time: float = 0.0
    env: Optional[Environment] = None

    def all_errors(self) -> list[Diagnostic]:
        return self.errors + [e for f in self.files for e in f.errors]

    @property
    def ok(self) -> bool:
        return not self.all_errors() and not any(f.directives_failed for f in self.files)

    @property
    def declaration_count(self) -> int:
        return sum(len(f.declarations) for f in self.files)

    def exit_code(self) -> int:
        code = EXIT_OK
        for e in self.all_errors():
            code = max(code, _EXIT_FOR_CLASS.get(e.error_class, EXIT_TYPE))
        if code == EXIT_OK and not self.ok:
            code = EXIT_TYPE
        return code

    def to_dict(self, stable: bool = False) -> dict:
        files = []
        for f in self.files:
            files.append({
                "path": f.path,
                "declarations": len(f.declarations),
                "declaration_names": list(f.declarations),
                "directives_passed": f.directives_passed,
                "directives_failed": f.directives_failed,
                "directives": [asdict(d) for d in f.directives],
                "errors": [asdict(e) for e in f.errors],
                "axioms": list(f.axioms),
            })
        out = {
            "ok": self.ok,
            "exit_code": self.exit_code(),
            "files": files,
            "errors": [asdict(e) for e in self.errors],
            "total_declarations": self.declaration_count,
        }
        if not stable:
            out["time"] = round(self.time, 3)
        return out

    def to_json(self, stable: bool = False) -> str:
        return json.dumps(self.to_dict(stable), indent=2, ensure_ascii=False)

    def to_text(self, stable: bool = False) -> str:
        lines = []
        for e in self.errors:
            lines.append(e.format())
        for f in self.files:
            lines.append(f"{f.path}: {len(f.declarations)} declarations, "
                         f"{f.directives_passed} directives passed, {f.directives_failed} failed")
            for d in f.directives:
                if not d.passed:
                    lines.append(f"  {f.path}:{d.line}: #{d.directive} failed: {d.output}")
            for e in f.errors:
                lines.append("  " + e.format())
            if f.axioms:
                lines.append(f"  axioms: {', '.join(f.axioms)}")
        n_err = len(self.all_errors())
        n_fail = sum(f.directives_failed for f in self.files)
        summary = (f"{len(self.files)} files, {self.declaration_count} declarations, "
                   f"{n_err} errors, {n_fail} failed directives")
        if not stable:
            summary += f", {self.time:.2f}s"
        lines.append(summary)
        return "\n".join(lines) + "\n"


class Checker:
    """Threads one environment through files, imports first."""

    def __init__(self, options: Optional[Options] = None, search_path: Sequence[Path] = (),
                 env: Optional[Environment] = None):
        self.opts = options or Options()
        self.search_path = [Path(p) for p in search_path]
        self.env = env or Environment()
        self.reports: list[FileReport] = []
        self.loaded: dict[Path, FileReport] = {}
        self.stack: list[Path] = []
        self.elaborated: list[Declaration] = []
        self.outputs: list[str] = []  # printed directive output, in order

    # -- files -----------------------------------------------------------------

    def resolve(self, name: str, base: Optional[Path]) -> Path:
        cands = []
        p = Path(name)
        if p.is_absolute():
            cands.append(p)
        else:
            if base is not None:
                cands.append(base / p)
            cands.extend(root / p for root in self.search_path)
            cands.append(Path.cwd() / p)
        exts = ["", ".htt"] if p.suffix != ".htt" else [""]
        for c in cands:
            for ext in exts:
                q = c.with_name(c.name + ext) if ext else c
                if q.is_file():
                    return q.resolve()
        raise ImportError_(f"cannot find module '{name}'")

    def check_file(self, path: Path) -> FileReport:
        path = Path(path).resolve()
        if path in self.loaded:
            return self.loaded[path]
        if path in self.stack:
            cycle = self.stack[self.stack.index(path):] + [path]
            raise ImportError_("import cycle: " + " -> ".join(_display(p) for p in cycle))
        source = path.read_text(encoding="utf-8")
        self.stack.append(path)
        try:
            report = self.check_source(source, _display(path), path.parent)
        finally:
            self.stack.pop()
        self.loaded[path] = report
        return report

    def check_source(self, source: str, display: str = "<input>", base: Optional[Path] = None) -> FileReport:
        report = FileReport(display)
        try:
            decls = parse_module(source)
        except HottError as e:
            report.errors.append(self._diag(display, source, e))
            self.reports.append(report)
            return report
        for d in decls:
            try:
                if d.kind == "import":
                    self._import(d, base)
                    continue
                self.process(desugar_decl(d), report)
            except HottError as e:
                if e.span is None:
                    e.span = d.span
                report.errors.append(self._diag(display, source, e))
        report.axioms = sorted({a for n in report.declarations if n in self.env
                                for a in collect_axioms(self.env, n)})
        self._fix_lines(report, source)
        self.reports.append(report)
        return report

    def _import(self, d: SurfaceDecl, base: Optional[Path]) -> None:
        try:
            p = self.resolve(d.name, base)
        except ImportError_ as e:
            e.span = d.span
            raise
        try:
            self.check_file(p)
        except OSError as e:
            raise ImportError_(f"cannot read '{d.name}': {e.strerror}", d.span)
        except ImportError_ as e:
            e.span = d.span
            raise

    def _diag(self, display: str, source: str, e: HottError) -> Diagnostic:
        line, col = line_col(source, e.span[0]) if e.span else (1, 1)
        return Diagnostic(display, line, col, e.error_class, type(e).__name__.rstrip("_"), e.message)

    def _fix_lines(self, report: FileReport, source: str) -> None:
        for dr in report.directives:
            if isinstance(dr.line, tuple):
                dr.line = line_col(source, dr.line[0])[0]

    # -- declarations ------------------------------------------------------------

    def process(self, d: SurfaceDecl, report: FileReport) -> None:
        if d.kind in ("definition", "axiom"):
            decl = elaborate_definition(self.env, d, self.opts)
            self._commit(decl, report)
            self._attributes(d.name, d.attributes)
        elif d.kind == "inductive":
            name, univs, ty, nparams, ctors = elaborate_inductive(self.env, d, self.opts)
            decl = Declaration(name, univs, ty, INDUCTIVE, info=InductiveDecl(nparams, ctors))
            self._commit(decl, report)
            report.declarations.extend(c for c, _ in ctors)
            report.declarations.append(f"{name}.rec")
            self._attributes(d.name, d.attributes)
        elif d.kind == "hit-init":
            size = self.env.size
            self.env = init_hit(self.env, d.name)
            for ev in self.env.events()[size:]:
                if ev[0] == "decl":
                    report.declarations.append(ev[1])
        elif d.kind == "attribute":
            if d.name not in self.env:
                raise HottError(f"unknown constant '{d.name}'", d.span)
            self._attributes(d.name, d.attributes)
        elif d.kind == "directive":
            res = self.directive(d)
            res.path = report.path
            res.line = d.span  # converted to a line number once the file is done
            report.directives.append(res)
        else:
            raise HottError(f"unsupported declaration kind '{d.kind}'", d.span)

    def _commit(self, decl: Declaration, report: FileReport) -> None:
        self.env = check_declaration(self.env, decl)
        self.elaborated.append(decl)
        report.declarations.append(decl.name)

    def _attributes(self, name: str, attrs: Iterable[str]) -> None:
        for a in attrs:
            self.env = add_attribute(self.env, name, a)

    # -- directives ------------------------------------------------------------

    def _open_directive(self, d: SurfaceDecl) -> tuple[Elaborator, list]:
        el = Elaborator(self.env, self.opts)
        el.span = d.span
        fvs = el.elab_binders(d.binders)
        return el, fvs

    def directive(self, d: SurfaceDecl) -> DirectiveResult:
        kind = d.directive
        res = DirectiveResult("", 0, kind, False, "")
        if kind == "print_axioms":
            if d.name not in self.env:
                raise HottError(f"unknown constant '{d.name}'", d.span)
            axioms = collect_axioms(self.env, d.name)
            res.output = ", ".join(axioms) if axioms else "(none)"
            res.passed = (not d.expect_axioms) or sorted(set(d.names)) == axioms
            if not res.passed:
                res.output = f"expected [{', '.join(sorted(set(d.names)))}], found [{', '.join(axioms)}]"
            self.outputs.append(f"{d.name}: {res.output}")
            return res
        el, fvs = self._open_directive(d)
        tc = TypeChecker(self.env, fuel=self.opts.fuel)
        if kind == "defeq":
            a = el.elab(d.terms[0], None)
            aty = el.infer(a)
            mark = (len(el.trail), len(el.postponed), len(el.lpostponed))
            try:
                b = el.elab_check(d.terms[1], aty)
            except HottError:
                el._undo(mark)
                b = el.elab(d.terms[1], None)
            (ca, cb), _ = el.finalize([mk_lambda(fvs, a), mk_lambda(fvs, b)], generalize_from=2)
            tc.infer(ca, False)
            tc.infer(cb, False)
            res.passed = tc.is_def_eq(ca, cb)
            res.output = "ok" if res.passed else f"{pp(ca)} is not definitionally equal to {pp(cb)}"
        elif kind == "check":
            ty, _ = el.elab_type(d.terms[1])
            t = el.elab_check(d.terms[0], ty)
            (ct, cty), _ = el.finalize([mk_lambda(fvs, t), mk_pi(fvs, ty)], generalize_from=2)
            inferred = tc.infer(ct, False)
            tc.ensure_sort(tc.infer(cty, False))
            res.passed = tc.is_def_eq(inferred, cty)
            res.output = "ok" if res.passed else f"type {pp(inferred)} differs from {pp(cty)}"
        elif kind == "normalize":
            t = el.elab(d.terms[0], None)
            (ct,), _ = el.finalize([mk_lambda(fvs, t)])
            tc.infer(ct, False)
            nf = tc.normalize(ct)
            res.passed = True
            res.output = pp(nf)
            self.outputs.append(res.output)
        else:
            raise DirectiveFailure(f"unknown directive #{kind}", d.span)
        return res

    # -- queries on the final environment ---------------------------------------

    def normalize_text(self, text: str) -> str:
        s = desugar(parse_term(text))
        el = Elaborator(self.env, self.opts)
        t = el.elab(s, None)
        (ct,), _ = el.finalize([t])
        tc = TypeChecker(self.env, fuel=self.opts.fuel)
        tc.infer(ct, False)
        return pp(tc.normalize(ct))

    def report(self, elapsed: float = 0.0) -> CheckReport:
        return CheckReport(list(self.reports), [], elapsed, self.env)


def _display(p: Path) -> str:
    try:
        return str(p.relative_to(Path.cwd()))
    except ValueError:
        return str(p)


def read_manifest(path: Path) -> list[Path]:
    out = []
    base = Path(path).parent
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(base / line)
    return out


def run_check(paths: Sequence[Path], options: Optional[Options] = None, manifest: bool = False,
              search_path: Sequence[Path] = ()) -> CheckReport:
    """Check files (or manifests) in order, threading one environment."""
    start = time.perf_counter()
    checker = Checker(options, search_path)
    top_errors: list[Diagnostic] = []

    def work() -> None:
        files: list[Path] = []
        for p in paths:
            if manifest:
                try:
                    files.extend(read_manifest(Path(p)))
                except OSError as e:
                    top_errors.append(Diagnostic(str(p), 1, 1, "io", "ImportError",
                                                 f"cannot read manifest: {e.strerror}"))
            else:
                files.append(Path(p))
        for f in files:
            try:
                checker.check_file(f)
            except OSError as e:
                top_errors.append(Diagnostic(str(f), 1, 1, "io", "ImportError",
                                             f"cannot read file: {e.strerror}"))
            except ImportError_ as e:
                top_errors.append(Diagnostic(str(f), 1, 1, "io", "ImportError", e.message))

    run_with_big_stack(work)
    rep = checker.report(time.perf_counter() - start)
    rep.errors = top_errors
    rep.checker = checker  # type: ignore[attr-defined]
    return rep
