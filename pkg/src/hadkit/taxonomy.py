"""Hallucination type registry, label parsing, and task-kind compatibility.

The registry is loaded once from a TOML config (a default ships with the
package) and is immutable afterwards, so it is safe to share across threads.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .errors import SchemaError, UnknownTaskKind, UnknownType

TYPE_IDS = ("TTI", "TRI", "CwIC", "BI", "IO", "CwOC", "SI", "FRE", "FIE", "FE", "FA")

# Label texts a detector may emit for the negative class.
NEGATIVE_SYNONYMS = frozenset({"no hallucination", "none", "no hallu"})

NO_HALLUCINATION_NAME = "No Hallucination"
BINARY_HALLUCINATED_NAME = "Hallucination"
INVALID_NAME = "Invalid"


class LabelKind(Enum):
    TYPE = "type"
    NO_HALLUCINATION = "no_hallucination"
    BINARY_HALLUCINATED = "binary_hallucinated"
    INVALID = "invalid"


@dataclass(frozen=True)
class Label:
    """A parsed label: a fine-grained type, the negative class, the binary
    positive class, or an unparseable verdict (which keeps the raw text)."""

    kind: LabelKind
    type_id: str | None = None
    raw: str = ""

    @staticmethod
    def of_type(type_id: str) -> "Label":
        return Label(LabelKind.TYPE, type_id=type_id)

    @staticmethod
    def no_hallucination() -> "Label":
        return Label(LabelKind.NO_HALLUCINATION)

    @staticmethod
    def binary_hallucinated() -> "Label":
        return Label(LabelKind.BINARY_HALLUCINATED)

    @staticmethod
    def invalid(raw: str) -> "Label":
        return Label(LabelKind.INVALID, raw=raw)

    @property
    def is_type(self) -> bool:
        return self.kind is LabelKind.TYPE

    @property
    def is_negative(self) -> bool:
        return self.kind is LabelKind.NO_HALLUCINATION

    @property
    def is_invalid(self) -> bool:
        return self.kind is LabelKind.INVALID


def collapse_binary(label: Label) -> bool:
    """Collapse any label to the binary hallucinated-or-not flag.

    Invalid collapses to True: an unparseable answer still asserted some
    hallucination and must not score as a clean negative.
    """
    return label.kind is not LabelKind.NO_HALLUCINATION


@dataclass(frozen=True)
class TaxonomyEntry:
    type_id: str
    display_name: str
    level1: str
    level2: str
    definition: str
    criteria: tuple[str, ...]  # general criteria first, then type-specific


@dataclass(frozen=True)
class TaskKind:
    kind_id: str
    category: str
    allowed_types: frozenset[str]


def _normalize(text: str) -> str:
    return " ".join(text.split()).lower()


@dataclass
class Taxonomy:
    entries: tuple[TaxonomyEntry, ...]
    task_kinds: tuple[TaskKind, ...]
    general_criteria: tuple[str, ...]
    _by_key: dict[str, TaxonomyEntry] = field(init=False, repr=False)
    _kinds_by_id: dict[str, TaskKind] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        by_key: dict[str, TaxonomyEntry] = {}
        for entry in self.entries:
            by_key[_normalize(entry.type_id)] = entry
            by_key[_normalize(entry.display_name)] = entry
        self._by_key = by_key
        self._kinds_by_id = {k.kind_id: k for k in self.task_kinds}

    # -- lookups --

    def lookup(self, type_id_or_name: str) -> TaxonomyEntry:
        entry = self._by_key.get(_normalize(type_id_or_name))
        if entry is None:
            raise UnknownType(type_id_or_name)
        return entry

    def entry(self, type_id: str) -> TaxonomyEntry:
        return self.lookup(type_id)

    def display_name(self, type_id: str) -> str:
        return self.lookup(type_id).display_name

    def task_kind(self, kind_id: str) -> TaskKind:
        kind = self._kinds_by_id.get(kind_id)
        if kind is None:
            raise UnknownTaskKind(kind_id)
        return kind

    def allowed_types_for(self, kind: str | TaskKind) -> frozenset[str]:
        if isinstance(kind, TaskKind):
            kind = kind.kind_id
        return self.task_kind(kind).allowed_types

    # -- label handling --

    def parse_label(self, raw: str) -> Label:
        """Parse a model-emitted label text.

        Registered type names/ids map to their type; the negative synonym list
        maps to NoHallucination; everything else is Invalid (a value carrying
        the raw text, never an error).
        """
        norm = _normalize(raw)
        if norm in NEGATIVE_SYNONYMS:
            return Label.no_hallucination()
        entry = self._by_key.get(norm)
        if entry is not None:
            return Label.of_type(entry.type_id)
        return Label.invalid(raw)

    def label_to_wire(self, label: Label) -> str:
        """Serialize a label for JSONL files (display name or reserved name)."""
        if label.kind is LabelKind.TYPE:
            return self.lookup(label.type_id or "").display_name
        if label.kind is LabelKind.NO_HALLUCINATION:
            return NO_HALLUCINATION_NAME
        if label.kind is LabelKind.BINARY_HALLUCINATED:
            return BINARY_HALLUCINATED_NAME
        return INVALID_NAME

    def label_from_wire(self, text: str, raw: str = "") -> Label:
        """Inverse of :meth:`label_to_wire`; tolerates type ids as well."""
        norm = _normalize(text)
        if norm in NEGATIVE_SYNONYMS:
            return Label.no_hallucination()
        if norm == _normalize(BINARY_HALLUCINATED_NAME):
            return Label.binary_hallucinated()
        if norm == _normalize(INVALID_NAME):
            return Label.invalid(raw)
        entry = self._by_key.get(norm)
        if entry is None:
            raise UnknownType(text)
        return Label.of_type(entry.type_id)

    def label_key(self, label: Label) -> str:
        """Class key used by metrics and confusion matrices."""
        return self.label_to_wire(label)

    def class_order(self) -> list[str]:
        """Canonical class ordering for reports: the 11 types in registry
        order, then the negative class, binary positive, and Invalid."""
        names = [e.display_name for e in self.entries]
        return names + [NO_HALLUCINATION_NAME, BINARY_HALLUCINATED_NAME, INVALID_NAME]


def _parse_config(data: dict, source: str) -> Taxonomy:
    general = tuple(data.get("general", {}).get("criteria", []))
    entries = []
    for raw in data.get("type", []):
        try:
            entries.append(
                TaxonomyEntry(
                    type_id=raw["id"],
                    display_name=raw["name"],
                    level1=raw["level1"],
                    level2=raw["level2"],
                    definition=raw["definition"],
                    criteria=general + tuple(raw["criteria"]),
                )
            )
        except KeyError as exc:
            raise SchemaError(f"taxonomy config {source}: type entry missing {exc}") from exc
    known = {e.type_id for e in entries}
    kinds = []
    for raw in data.get("task_kind", []):
        try:
            allowed = frozenset(raw["allowed_types"])
            kinds.append(TaskKind(raw["id"], raw["category"], allowed))
        except KeyError as exc:
            raise SchemaError(f"taxonomy config {source}: task kind missing {exc}") from exc
        unknown = allowed - known
        if unknown:
            raise SchemaError(
                f"taxonomy config {source}: task kind {raw['id']} allows "
                f"unregistered types {sorted(unknown)}"
            )
        if not allowed:
            raise SchemaError(f"taxonomy config {source}: task kind {raw['id']} allows no types")
    return Taxonomy(tuple(entries), tuple(kinds), general)


def load_taxonomy(path: str | Path | None = None) -> Taxonomy:
    """Load a taxonomy config; with no path, the packaged default."""
    if path is None:
        blob = (
            importlib.resources.files("hadkit")
            .joinpath("data/taxonomy.toml")
            .read_bytes()
        )
        source = "<default>"
    else:
        blob = Path(path).read_bytes()
        source = str(path)
    return _parse_config(tomllib.loads(blob.decode("utf-8")), source)


_DEFAULT: Taxonomy | None = None


def default_taxonomy() -> Taxonomy:
    """The packaged registry, loaded once per process."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_taxonomy()
    return _DEFAULT
