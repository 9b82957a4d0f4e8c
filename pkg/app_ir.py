# app_ir.py — Textual intermediate representation of an Android app
#
# Stands in for a reverse-engineered APK: components with lifecycle methods
# and callbacks, plus straight-line method bodies in a tiny statement
# language. The taint engine consumes the AppModel built here.
#
# Grammar (line-oriented, '#' starts a comment line):
#
#   app NAME
#   component QNAME kind=activity|service|receiver
#     lifecycle onCreate           (one of the fixed lifecycle names)
#     callback NAME                (NAME or Component-relative NAME)
#   method QNAME(p1, p2) {
#     x = y                        Copy
#     x = y.f                      LoadField
#     x.f = y                      StoreField
#     x = call SIG(a, b)           Invoke with result
#     call SIG(a, b)               Invoke
#     return x | return            Return
#   }
#
# Every method has an implicit 'this' parameter naming the instance of its
# declaring class. 'this' cannot be assigned.
#
# Public API:
#   parse_app(text)  — text (str or UTF-8 bytes) → AppModel, or IRError
#   emit_app(app)    — canonical text; parse_app(emit_app(a)) == a
#   load_app(path)   — parse a .ir file

import re
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Optional, Union

THIS = "this"

KINDS = ("activity", "service", "receiver")

# Canonical order; a component's lifecycle tuple is kept in this order.
LIFECYCLE_ORDER = ("onCreate", "onStart", "onResume", "onPause", "onStop", "onDestroy", "onReceive")

ALLOWED_LIFECYCLE = {
    "activity": ("onCreate", "onStart", "onResume", "onPause", "onStop", "onDestroy"),
    "service":  ("onCreate", "onStart", "onDestroy"),
    "receiver": ("onReceive",),
}

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_QNAME = r"[A-Za-z_$][A-Za-z0-9_$]*(?:\.[A-Za-z_$][A-Za-z0-9_$]*)*"

_RE_APP        = re.compile(rf"^app\s+({_QNAME})$")
_RE_COMPONENT  = re.compile(rf"^component\s+({_QNAME})\s+kind=(\S+)$")
_RE_LIFECYCLE  = re.compile(rf"^lifecycle\s+({_IDENT})$")
_RE_CALLBACK   = re.compile(rf"^callback\s+({_QNAME})$")
_RE_METHOD     = re.compile(rf"^method\s+({_QNAME})\s*\(([^)]*)\)\s*\{{$")
_RE_COPY       = re.compile(rf"^({_IDENT})\s*=\s*({_IDENT})$")
_RE_LOAD       = re.compile(rf"^({_IDENT})\s*=\s*({_IDENT})\.({_IDENT})$")
_RE_STORE      = re.compile(rf"^({_IDENT})\.({_IDENT})\s*=\s*({_IDENT})$")
_RE_CALL       = re.compile(rf"^(?:({_IDENT})\s*=\s*)?call\s+({_QNAME})\s*\(([^)]*)\)$")
_RE_RETURN     = re.compile(rf"^return(?:\s+({_IDENT}))?$")
_RE_NAME       = re.compile(rf"^{_IDENT}$")


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class IRError(Exception):
    """Base class for every app-IR parse or validation failure."""


class IRSyntaxError(IRError):
    def __init__(self, line: int, col: int, message: str):
        self.line = line
        self.col = col
        self.message = message
        super().__init__(f"line {line}, col {col}: {message}")


class DuplicateComponent(IRError):
    def __init__(self, name: str, line: int):
        self.name = name
        self.line = line
        super().__init__(f"line {line}: duplicate component {name}")


class UndefinedMethodReference(IRError):
    def __init__(self, name: str, line: int):
        self.name = name
        self.line = line
        super().__init__(f"line {line}: reference to undefined method {name}")


class UndeclaredLocal(IRError):
    def __init__(self, name: str, method: str, line: int):
        self.name = name
        self.method = method
        self.line = line
        super().__init__(f"line {line}: local '{name}' used before assignment in {method}")


class InvalidLifecycle(IRError):
    def __init__(self, name: str, kind: str, line: int):
        self.name = name
        self.kind = kind
        self.line = line
        super().__init__(f"line {line}: {name} is not a lifecycle method of a {kind}")


class ArityMismatch(IRError):
    def __init__(self, callee: str, expected: int, got: int, line: int):
        self.callee = callee
        self.line = line
        super().__init__(f"line {line}: {callee} takes {expected} argument(s), {got} given")


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------
# 'line' records where a statement came from and is excluded from equality,
# so a re-parsed pretty-print compares equal to the original.

@dataclass(frozen=True)
class Copy:
    dst: str
    src: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class LoadField:
    dst: str
    base: str
    field: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class StoreField:
    base: str
    field: str
    src: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Invoke:
    dst: Optional[str]
    callee: str
    args: tuple
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Return:
    value: Optional[str]
    line: int = field(default=0, compare=False)


Statement = Union[Copy, LoadField, StoreField, Invoke, Return]


def defined_local(stmt: Statement) -> Optional[str]:
    """The local a statement assigns, if any."""
    if isinstance(stmt, (Copy, LoadField)):
        return stmt.dst
    if isinstance(stmt, Invoke):
        return stmt.dst
    return None


def used_locals(stmt: Statement) -> tuple:
    """The locals a statement reads, in source order."""
    if isinstance(stmt, Copy):
        return (stmt.src,)
    if isinstance(stmt, LoadField):
        return (stmt.base,)
    if isinstance(stmt, StoreField):
        return (stmt.base, stmt.src)
    if isinstance(stmt, Invoke):
        return stmt.args
    if isinstance(stmt, Return):
        return (stmt.value,) if stmt.value else ()
    return ()


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MethodBody:
    name: str
    params: tuple
    statements: tuple

    @property
    def declaring_class(self) -> str:
        return class_of(self.name)

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class Component:
    name: str
    kind: str
    lifecycle: tuple = ()
    callbacks: tuple = ()

    def lifecycle_methods(self) -> tuple:
        """Qualified names of the present lifecycle methods, in lifecycle order."""
        return tuple(f"{self.name}.{lc}" for lc in self.lifecycle)


@dataclass(frozen=True)
class AppModel:
    app_name: str
    components: tuple
    methods: Mapping      # read-only view; name → MethodBody

    def __post_init__(self):
        object.__setattr__(self, "methods", MappingProxyType(dict(self.methods)))

    def component(self, name: str) -> Optional[Component]:
        for comp in self.components:
            if comp.name == name:
                return comp
        return None


def class_of(method_name: str) -> str:
    """'com.a.B.run' → 'com.a.B'."""
    return method_name.rsplit(".", 1)[0] if "." in method_name else method_name


def statement_id(method: str, index: int) -> str:
    return f"{method}@{index}"


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _split_args(raw: str, line_no: int, col: int) -> tuple:
    raw = raw.strip()
    if not raw:
        return ()
    names = tuple(a.strip() for a in raw.split(","))
    for name in names:
        if not _RE_NAME.match(name):
            raise IRSyntaxError(line_no, col, f"bad identifier {name!r}")
    return names


def _parse_statement(text: str, line_no: int, col: int) -> Statement:
    m = _RE_CALL.match(text)
    if m:
        dst, callee, args = m.groups()
        return Invoke(dst, callee, _split_args(args, line_no, col), line=line_no)
    m = _RE_RETURN.match(text)
    if m:
        return Return(m.group(1), line=line_no)
    m = _RE_LOAD.match(text)
    if m:
        return LoadField(*m.groups(), line=line_no)
    m = _RE_STORE.match(text)
    if m:
        return StoreField(*m.groups(), line=line_no)
    m = _RE_COPY.match(text)
    if m:
        return Copy(*m.groups(), line=line_no)
    raise IRSyntaxError(line_no, col, f"unrecognised statement: {text}")


def parse_app(text: Union[str, bytes]) -> AppModel:
    """
    Parse IR source into an AppModel.

    Raises IRSyntaxError for malformed text and the other IRError subclasses
    for well-formed programs that break a model invariant.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as e:
            raise IRSyntaxError(1, e.start + 1, "input is not valid UTF-8")
    try:
        return _parse(text)
    except IRError:
        raise
    except Exception as e:
        raise IRSyntaxError(0, 0, f"unreadable app IR: {e}")


def _parse(text: str) -> AppModel:
    app_name   = None
    components = []     # [name, kind, [lifecycle], [callbacks], line]
    methods    = {}
    method_lines = {}
    current    = None   # method being read: [name, params, statements, line]

    lines = text.split("\n")
    for line_no, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        col = len(raw) - len(raw.lstrip()) + 1
        if not stripped or stripped.startswith("#"):
            continue

        # --- Inside a method body ---
        if current is not None:
            if stripped == "}":
                name, params, statements, start = current
                methods[name] = MethodBody(name, params, tuple(statements))
                method_lines[name] = start
                current = None
            else:
                current[2].append(_parse_statement(stripped, line_no, col))
            continue

        # --- Header ---
        if app_name is None:
            m = _RE_APP.match(stripped)
            if not m:
                raise IRSyntaxError(line_no, col, "missing `app` header")
            app_name = m.group(1)
            continue

        m = _RE_COMPONENT.match(stripped)
        if m:
            name, kind = m.groups()
            if kind not in KINDS:
                raise IRSyntaxError(line_no, col, f"unknown component kind {kind!r}")
            if any(c[0] == name for c in components):
                raise DuplicateComponent(name, line_no)
            components.append([name, kind, [], [], line_no])
            continue

        m = _RE_LIFECYCLE.match(stripped)
        if m:
            if not components:
                raise IRSyntaxError(line_no, col, "lifecycle outside a component")
            comp = components[-1]
            lc = m.group(1)
            if lc not in ALLOWED_LIFECYCLE[comp[1]]:
                raise InvalidLifecycle(lc, comp[1], line_no)
            if lc in comp[2]:
                raise IRSyntaxError(line_no, col, f"duplicate lifecycle method {lc}")
            comp[2].append(lc)
            continue

        m = _RE_CALLBACK.match(stripped)
        if m:
            if not components:
                raise IRSyntaxError(line_no, col, "callback outside a component")
            comp = components[-1]
            cb = m.group(1)
            qualified = cb if "." in cb else f"{comp[0]}.{cb}"
            if qualified not in comp[3]:
                comp[3].append(qualified)
            continue

        m = _RE_METHOD.match(stripped)
        if m:
            name, raw_params = m.groups()
            if name in methods:
                raise IRSyntaxError(line_no, col, f"duplicate method {name}")
            params = _split_args(raw_params, line_no, col)
            if THIS in params or len(set(params)) != len(params):
                raise IRSyntaxError(line_no, col, f"bad parameter list for {name}")
            current = [name, params, [], line_no]
            continue

        raise IRSyntaxError(line_no, col, f"unexpected line: {stripped}")

    if app_name is None:
        raise IRSyntaxError(1, 1, "missing `app` header")
    if current is not None:
        raise IRSyntaxError(len(lines), 1, f"unterminated method {current[0]}")

    # --- Component references ---
    built = []
    for name, kind, lifecycle, callbacks, line_no in components:
        for lc in lifecycle:
            if f"{name}.{lc}" not in methods:
                raise UndefinedMethodReference(f"{name}.{lc}", line_no)
        for cb in callbacks:
            if cb not in methods:
                raise UndefinedMethodReference(cb, line_no)
        ordered = tuple(lc for lc in LIFECYCLE_ORDER if lc in lifecycle)
        built.append(Component(name, kind, ordered, tuple(callbacks)))

    # --- Method bodies: locals and local-call arity ---
    for body in methods.values():
        _check_body(body, methods)

    return AppModel(app_name, tuple(built), methods)


def _check_body(body: MethodBody, methods: dict) -> None:
    declared = {THIS, *body.params}
    for stmt in body.statements:
        for name in used_locals(stmt):
            if name not in declared:
                raise UndeclaredLocal(name, body.name, stmt.line)
        if isinstance(stmt, Invoke) and stmt.callee in methods:
            expected = methods[stmt.callee].arity
            if expected != len(stmt.args):
                raise ArityMismatch(stmt.callee, expected, len(stmt.args), stmt.line)
        target = defined_local(stmt)
        if target == THIS:
            raise IRSyntaxError(stmt.line, 1, "cannot assign to 'this'")
        if target:
            declared.add(target)


def load_app(path) -> AppModel:
    return parse_app(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# Pretty-printer
# ---------------------------------------------------------------------------

def format_statement(stmt: Statement) -> str:
    if isinstance(stmt, Copy):
        return f"{stmt.dst} = {stmt.src}"
    if isinstance(stmt, LoadField):
        return f"{stmt.dst} = {stmt.base}.{stmt.field}"
    if isinstance(stmt, StoreField):
        return f"{stmt.base}.{stmt.field} = {stmt.src}"
    if isinstance(stmt, Invoke):
        call = f"call {stmt.callee}({', '.join(stmt.args)})"
        return f"{stmt.dst} = {call}" if stmt.dst else call
    if isinstance(stmt, Return):
        return f"return {stmt.value}" if stmt.value else "return"
    raise TypeError(f"not a statement: {stmt!r}")


def emit_app(app: AppModel) -> str:
    """Canonical form: one statement per line, two-space indent."""
    out = [f"app {app.app_name}"]
    for comp in app.components:
        out.append("")
        out.append(f"component {comp.name} kind={comp.kind}")
        out.extend(f"  lifecycle {lc}" for lc in comp.lifecycle)
        out.extend(f"  callback {cb}" for cb in comp.callbacks)
    for body in app.methods.values():
        out.append("")
        out.append(f"method {body.name}({', '.join(body.params)}) {{")
        out.extend(f"  {format_statement(s)}" for s in body.statements)
        out.append("}")
    return "\n".join(out) + "\n"
