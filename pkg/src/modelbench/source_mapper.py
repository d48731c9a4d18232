"""Lexical mapping from names to definition spans in the spec text.

Checker-reported locations are always more precise when present; this index
is the fallback that makes graph-edge clicks land on the right definition.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Optional

from .errors import MissingModuleHeader
from .model import SourceLocation
from .runner import MODULE_HEADER_RE

# Top level means zero indentation; LET/IN-nested definitions are indented
# and deliberately not indexed.
_DEF_RE = re.compile(r"^([A-Za-z_]\w*)(\([^)]*\))?\s*==")
_TERMINATOR_RE = re.compile(r"^={4,}\s*$")


@dataclass(frozen=True)
class DefinitionIndex:
    module: str
    entries: Mapping[str, SourceLocation]

    def to_doc(self) -> dict:
        return {
            "module": self.module,
            "entries": {name: loc.to_doc()
                        for name, loc in sorted(self.entries.items())},
        }


def index_definitions(spec_text: str) -> DefinitionIndex:
    header = MODULE_HEADER_RE.search(spec_text)
    if not header:
        raise MissingModuleHeader("spec has no '---- MODULE <name> ----' header")
    module = header.group(1)

    lines = spec_text.split("\n")
    starts: list[tuple[int, str]] = []  # (0-based line, name)
    terminator = len(lines)
    for i, line in enumerate(lines):
        if _TERMINATOR_RE.match(line):
            terminator = i
            break
        m = _DEF_RE.match(line)
        if m:
            starts.append((i, m.group(1)))

    entries: dict[str, SourceLocation] = {}
    for pos, (start, name) in enumerate(starts):
        end = starts[pos + 1][0] - 1 if pos + 1 < len(starts) else terminator - 1
        end_col = max(1, len(lines[end].rstrip()))
        entries[name] = SourceLocation(
            module=module,
            start_line=start + 1,
            start_col=1,
            end_line=end + 1,
            end_col=end_col,
        )
    return DefinitionIndex(module=module, entries=entries)


_NAME_RE = re.compile(r"^\s*([A-Za-z_]\w*)")


def resolve_action(index: DefinitionIndex, action_label: str) -> Optional[SourceLocation]:
    """Exact-name lookup after stripping whatever the checker appended to the
    label: a parameter suffix from the first ``(`` on, or an embedded
    ``line .., col ..`` decoration."""
    name = action_label.split("(", 1)[0]
    name = re.sub(r"\s+line \d+, col \d+.*$", "", name)
    m = _NAME_RE.match(name)
    if not m:
        return None
    return index.entries.get(m.group(1))
