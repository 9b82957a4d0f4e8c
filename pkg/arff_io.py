# arff_io.py — Reader/writer for the nominal-only ARFF dialect of the monitor data
#
# Tokenising and value unquoting are delegated to liac-arff. On top of it this
# module handles what the monitor files need and liac-arff does not do:
#   - nominal declarations wrapped over several lines
#   - nominal-only schemas (anything else is UnsupportedAttributeType)
#   - per-row errors that name the row and attribute
#   - values containing '.', '{' or '}' written single-quoted, like process names
#
# Unknown ('?') is None in memory.
#
# Public API:
#   parse_arff(text) / load_arff(path)       — text → Dataset, or ArffError
#   emit_arff(ds) / write_arff(ds, path)     — Dataset → text
#   dataset_to_dict(ds) / dataset_from_dict  — JSON form

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import arff

UNKNOWN = "?"

_NEEDS_NAME_QUOTES  = re.compile(r"[\s{}%,'\"]")
_NEEDS_VALUE_QUOTES = re.compile(r"[.{}]")     # on top of what liac-arff quotes


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class ArffError(Exception):
    """Base class for ARFF read failures."""


class ArffSyntaxError(ArffError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class MissingHeader(ArffError):
    def __init__(self, message: str = "missing @relation header"):
        super().__init__(message)


class UnsupportedAttributeType(ArffError):
    def __init__(self, name: str, type_name: str):
        self.name = name
        self.type_name = type_name
        super().__init__(f"attribute {name}: type {type_name} is not supported (nominal only)")


class UnknownNominalValue(ArffError):
    def __init__(self, row: int, attr: str, value: str):
        self.row = row
        self.attr = attr
        self.value = value
        super().__init__(f"row {row}: {value!r} is not a declared value of {attr}")


class ArityMismatch(ArffError):
    def __init__(self, row: int, expected: int):
        self.row = row
        self.expected = expected
        super().__init__(f"row {row}: expected {expected} value(s)")


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Attribute:
    name: str
    values: tuple

    @property
    def cardinality(self) -> int:
        return len(self.values)


@dataclass
class Dataset:
    relation_name: str
    attributes: list = field(default_factory=list)
    rows: list = field(default_factory=list)     # tuples of str or None

    @property
    def attribute_names(self) -> list:
        return [a.name for a in self.attributes]

    def attribute_index(self, name: str) -> int:
        for i, attr in enumerate(self.attributes):
            if attr.name == name:
                return i
        raise KeyError(name)

    def subset(self, indices) -> "Dataset":
        return Dataset(self.relation_name, list(self.attributes), [self.rows[i] for i in indices])

    def column(self, index: int) -> list:
        return [row[index] for row in self.rows]

    def __len__(self) -> int:
        return len(self.rows)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def parse_arff(text: Union[str, bytes]) -> Dataset:
    """Parse ARFF text. Every failure is raised as an ArffError subclass."""
    try:
        if isinstance(text, (bytes, bytearray)):
            text = bytes(text).decode("utf-8")
        return _parse(text)
    except ArffError:
        raise
    except UnicodeDecodeError as e:
        raise ArffSyntaxError(1, f"input is not valid UTF-8 ({e.reason})")
    except Exception as e:
        raise ArffSyntaxError(0, f"unreadable ARFF: {e}")


def _split_sections(text: str):
    """Return (header lines, data lines) as (line_no, text), wrapped declarations joined."""
    header  = []    # (line_no, text)
    data    = []
    pending = None
    in_data = False

    for line_no, raw in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        line = raw.strip()
        if in_data:
            if line and not line.startswith("%"):
                data.append((line_no, line))
            continue
        if pending is not None:
            pending = (pending[0], f"{pending[1]} {line}")
            if _open_braces(pending[1]) <= 0:
                header.append(pending)
                pending = None
            continue
        if not line or line.startswith("%"):
            continue
        if line.lower().startswith("@data"):
            in_data = True
            continue
        if _open_braces(line) > 0:
            pending = (line_no, line)
            continue
        header.append((line_no, line))

    if pending is not None:
        raise ArffSyntaxError(pending[0], "unterminated nominal declaration")
    return header, data


def _open_braces(line: str) -> int:
    """Unclosed '{' on a line, ignoring braces inside quoted values."""
    depth, quote, escaped = 0, None, False
    for ch in line:
        if escaped:
            escaped = False
        elif ch == "\\":
            escaped = True
        elif quote:
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
    return depth


def _parse(text: str) -> Dataset:
    header, data = _split_sections(text)

    if not header or not header[0][1].lower().startswith("@relation"):
        raise MissingHeader()
    for line_no, line in header[1:]:
        if not line.lower().startswith("@attribute"):
            raise ArffSyntaxError(line_no, f"unexpected header line: {line}")

    try:
        decoded = arff.loads("\n".join(line for _, line in header) + "\n@data\n")
    except arff.ArffException as e:
        at = header[e.line - 1][0] if 0 < e.line <= len(header) else header[0][0]
        raise ArffSyntaxError(at, _describe(e))

    attributes = []
    for name, type_ in decoded["attributes"]:
        if isinstance(type_, str):
            raise UnsupportedAttributeType(name, type_)
        if any(v is None for v in type_):
            raise ArffSyntaxError(0, f"attribute {name}: '?' cannot be a declared value")
        attributes.append(Attribute(name, tuple(type_)))

    rows = [_parse_row(row_no, line_no, line, attributes)
            for row_no, (line_no, line) in enumerate(data, start=1)]
    return Dataset(decoded["relation"], attributes, rows)


def _parse_row(row_no: int, line_no: int, line: str, attributes: list) -> tuple:
    if line.startswith("{"):
        raise ArffSyntaxError(line_no, "sparse rows are not supported")
    if not attributes:
        raise ArityMismatch(row_no, 0)

    # Read the row as all-STRING so nominal checks can report the attribute.
    stub = "@relation row\n" + "".join(f"@attribute a{i} STRING\n" for i in range(len(attributes)))
    try:
        values = arff.loads(f"{stub}@data\n{line}\n")["data"]
    except arff.BadDataFormat:
        raise ArityMismatch(row_no, len(attributes))
    except arff.ArffException as e:
        raise ArffSyntaxError(line_no, _describe(e))
    if len(values) != 1:
        raise ArffSyntaxError(line_no, f"cannot read data row: {line}")

    row = tuple(values[0])
    for attr, value in zip(attributes, row):
        if value is not None and value not in attr.values:
            raise UnknownNominalValue(row_no, attr.name, value)
    return row


def _describe(e: Exception) -> str:
    try:
        return str(e)
    except Exception:
        return type(e).__name__


def load_arff(path) -> Dataset:
    return parse_arff(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# Writer
# ---------------------------------------------------------------------------

def _quote_value(value: str) -> str:
    if value in ("", UNKNOWN):
        return f"'{value}'"
    encoded = arff.encode_string(value)
    if encoded == value and _NEEDS_VALUE_QUOTES.search(value):
        return f"'{value}'"
    return encoded


def _quote_name(name: str) -> str:
    return f"'{name}'" if _NEEDS_NAME_QUOTES.search(name) else name


def emit_arff(ds: Dataset) -> str:
    lines = [f"@relation {_quote_name(ds.relation_name)}"]
    for attr in ds.attributes:
        values = ",".join(_quote_value(v) for v in attr.values)
        lines.append(f"@attribute {_quote_name(attr.name)} {{{values}}}")
    lines.append("@data")
    for row in ds.rows:
        lines.append(",".join(UNKNOWN if v is None else _quote_value(v) for v in row))
    return "\n".join(lines) + "\n"


def write_arff(ds: Dataset, path) -> None:
    Path(path).write_text(emit_arff(ds), encoding="utf-8")


# ---------------------------------------------------------------------------
# JSON form
# ---------------------------------------------------------------------------

def dataset_to_dict(ds: Dataset) -> dict:
    return {
        "relation":   ds.relation_name,
        "attributes": [{"name": a.name, "values": list(a.values)} for a in ds.attributes],
        "rows":       [list(row) for row in ds.rows],
    }


def dataset_from_dict(obj: dict) -> Dataset:
    try:
        attributes = [Attribute(a["name"], tuple(a["values"])) for a in obj["attributes"]]
        rows = [tuple(r) for r in obj["rows"]]
        relation = obj["relation"]
    except (KeyError, TypeError) as e:
        raise ArffError(f"malformed dataset JSON: {e}")
    for row_no, row in enumerate(rows, start=1):
        if len(row) != len(attributes):
            raise ArityMismatch(row_no, len(attributes))
        for attr, value in zip(attributes, row):
            if value is not None and value not in attr.values:
                raise UnknownNominalValue(row_no, attr.name, value)
    return Dataset(relation, attributes, rows)


def label_values(ds: Dataset, class_name: str = "Class") -> Optional[tuple]:
    """Nominal values of the class attribute, or None if the dataset has none."""
    try:
        return ds.attributes[ds.attribute_index(class_name)].values
    except KeyError:
        return None
