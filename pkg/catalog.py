# catalog.py — SuSI source/sink taxonomy and API-signature catalog
#
# The taxonomy keeps the 17 source and 19 sink category names verbatim,
# including a misspelling
# (LOCATTON_INFORMATION) and the repeated sink rows (PHONE_CONNECTION,
# SYNCHRONIZATION_DATA). Validation is keyed on these raw names;
# NORMALIZED_NAMES maps each raw name to its intended spelling for display.
#
# Catalog file format (TSV, UTF-8, '#' comments):
#
#   android.telephony.TelephonyManager.getDeviceId<TAB>SOURCE<TAB>UNIQUE_IDENTIFIER
#
# Public API:
#   load_catalog(path)          — read and validate a catalog file
#   parse_catalog(text)         — same, from a string
#   emit_catalog(catalog)       — canonical TSV text
#   classify(catalog, sig)      — Classification(source, sink)
#   default_catalog()           — the bundled data/susi_catalog.tsv

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import config

SOURCE_CATEGORIES = (
    "LOCATION_INFORMATION",
    "NETWORK_INFORMATION",
    "FILE_INFORMATION",
    "BLUETOOTH_INFORMATION",
    "EMAIL",
    "UNIQUE_IDENTIFIER",
    "ACCOUNT_INFORMATION",
    "SYNCHRONIZATION_DATA",
    "SMS_MMS",
    "SYSTEM_SETTING",
    "CONTACT_INFORMATION",
    "CALENDAR_INFORMATION",
    "IMAGE",
    "BROWSER_INFORMATION",
    "NFC",
    "DATABASE_INFORMATION",
    "NO_CATEGORY",
)

SINK_CATEGORIES = (
    "PHONE_CONNECTION",
    "PHONE_CONNECTION",
    "EMAIL",
    "BLUETOOTH",
    "AUDIO",
    "LOCATTON_INFORMATION",
    "PHONE_STATE",
    "SYNCHRONIZATION_DATA",
    "NETWORK",
    "SMS_MMS",
    "FILE",
    "LOG",
    "CONTACT_INFORMATION",
    "CALENDAR_INFORMATION",
    "SYSTEM_SETTING",
    "SYNCHRONIZATION_DATA",
    "NFC",
    "BROWSER_INFORMATION",
    "NO_CATEGORY",
)

NORMALIZED_NAMES = {"LOCATTON_INFORMATION": "LOCATION_INFORMATION"}


def normalized(category: str) -> str:
    return NORMALIZED_NAMES.get(category, category)


def source_index(category: str) -> int:
    return SOURCE_CATEGORIES.index(category)


def sink_index(category: str) -> int:
    """Column of a sink category; a repeated table row maps to its first occurrence."""
    return SINK_CATEGORIES.index(category)


class Role(Enum):
    SOURCE = "SOURCE"
    SINK = "SINK"


_VALID = {
    Role.SOURCE: frozenset(SOURCE_CATEGORIES),
    Role.SINK:   frozenset(SINK_CATEGORIES),
}


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class CatalogError(Exception):
    """Base class for catalog load failures."""


class MalformedLine(CatalogError):
    def __init__(self, line_no: int, text: str = ""):
        self.line_no = line_no
        super().__init__(f"line {line_no}: expected signature<TAB>SOURCE|SINK<TAB>CATEGORY, got {text!r}")


class UnknownCategory(CatalogError):
    def __init__(self, name: str, role: Role, line_no: int = 0):
        self.name = name
        self.role = role
        self.line_no = line_no
        super().__init__(f"line {line_no}: {name} is not a {role.value.lower()} category")


class DuplicateEntry(CatalogError):
    def __init__(self, signature: str, role: Role, line_no: int = 0):
        self.signature = signature
        self.role = role
        self.line_no = line_no
        super().__init__(f"line {line_no}: {signature} already listed as {role.value}")


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CatalogEntry:
    api_signature: str
    role: Role
    category: str


@dataclass(frozen=True)
class Classification:
    source: Optional[str] = None
    sink: Optional[str] = None

    @property
    def is_source(self) -> bool:
        return self.source is not None

    @property
    def is_sink(self) -> bool:
        return self.sink is not None


class SourceSinkCatalog:
    """API signature → at most one SOURCE and at most one SINK entry."""

    def __init__(self, entries=()):
        self._entries = {}
        for entry in entries:
            self.add(entry)

    def add(self, entry: CatalogEntry, line_no: int = 0) -> None:
        if entry.category not in _VALID[entry.role]:
            raise UnknownCategory(entry.category, entry.role, line_no)
        roles = self._entries.setdefault(entry.api_signature, {})
        if entry.role in roles:
            raise DuplicateEntry(entry.api_signature, entry.role, line_no)
        roles[entry.role] = entry

    def classify(self, api_signature: str) -> Classification:
        roles = self._entries.get(api_signature, {})
        source = roles.get(Role.SOURCE)
        sink   = roles.get(Role.SINK)
        return Classification(
            source.category if source else None,
            sink.category if sink else None,
        )

    def entries(self) -> list:
        """All entries, sorted by signature then role (SOURCE first)."""
        out = []
        for sig in sorted(self._entries):
            roles = self._entries[sig]
            out.extend(roles[r] for r in (Role.SOURCE, Role.SINK) if r in roles)
        return out

    def __len__(self) -> int:
        return sum(len(roles) for roles in self._entries.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SourceSinkCatalog):
            return NotImplemented
        return self.entries() == other.entries()

    def __repr__(self) -> str:
        return f"SourceSinkCatalog({len(self)} entries)"


def classify(catalog: SourceSinkCatalog, api_signature: str) -> Classification:
    return catalog.classify(api_signature)


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------

def parse_catalog(text: str) -> SourceSinkCatalog:
    catalog = SourceSinkCatalog()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in raw.split("\t")]
        if len(parts) != 3 or not all(parts):
            raise MalformedLine(line_no, raw)
        signature, role_name, category = parts
        try:
            role = Role(role_name)
        except ValueError:
            raise MalformedLine(line_no, raw)
        catalog.add(CatalogEntry(signature, role, category), line_no)
    return catalog


def load_catalog(path) -> SourceSinkCatalog:
    return parse_catalog(Path(path).read_text(encoding="utf-8"))


def emit_catalog(catalog: SourceSinkCatalog) -> str:
    return "".join(
        f"{e.api_signature}\t{e.role.value}\t{e.category}\n" for e in catalog.entries()
    )


def default_catalog() -> SourceSinkCatalog:
    return load_catalog(config.DATA_DIR / "susi_catalog.tsv")
