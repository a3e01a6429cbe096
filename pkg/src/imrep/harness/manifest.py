"""Dataset manifests: line-oriented, tab-separated, diff-able.

Format, one entry per line:

    path<TAB>split<TAB>label[,label...]

with split in {train, val, test}. A label may be prefixed "difficult:" to
mark the image as difficult for that class. Blank lines and lines starting
with '#' are ignored. An optional directive line

    classes<TAB>name1,name2,...

fixes the class list (and makes unlisted labels an error); without it the
class list is the sorted union of all labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from imrep.errors import DataError

SPLITS = ("train", "val", "test")
_DIFFICULT = "difficult:"


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    split: str
    labels: frozenset
    difficult: frozenset
    line: int


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple
    classes: tuple

    def split(self, name: str) -> list:
        if name not in SPLITS:
            raise DataError(f"unknown split {name!r}")
        return [e for e in self.entries if e.split == name]

    def __len__(self) -> int:
        return len(self.entries)


def _parse_labels(field: str, line_no: int):
    labels, difficult = set(), set()
    for token in field.split(","):
        token = token.strip()
        if not token:
            raise DataError(f"line {line_no}: empty label")
        if token.startswith(_DIFFICULT):
            name = token[len(_DIFFICULT):]
            labels.add(name)
            difficult.add(name)
        else:
            labels.add(token)
    return frozenset(labels), frozenset(difficult)


def load_manifest(path) -> DatasetManifest:
    """Parse and validate a manifest file; errors carry line numbers."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    declared = None
    entries = []
    seen: dict[str, int] = {}
    for line_no, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if fields[0] == "classes":
            if len(fields) != 2:
                raise DataError(f"line {line_no}: malformed classes directive")
            declared = tuple(t.strip() for t in fields[1].split(",") if t.strip())
            continue
        if len(fields) != 3:
            raise DataError(
                f"line {line_no}: expected path<TAB>split<TAB>labels, got "
                f"{len(fields)} fields"
            )
        entry_path, split, label_field = (f.strip() for f in fields)
        if split not in SPLITS:
            raise DataError(f"line {line_no}: unknown split {split!r}")
        if entry_path in seen:
            raise DataError(
                f"line {line_no}: duplicate path {entry_path!r} "
                f"(first at line {seen[entry_path]})"
            )
        seen[entry_path] = line_no
        labels, difficult = _parse_labels(label_field, line_no)
        entries.append(
            ManifestEntry(entry_path, split, labels, difficult, line_no)
        )

    if not entries:
        raise DataError("no entries")
    used = sorted(set().union(*(e.labels for e in entries)))
    if declared is not None:
        unknown = [l for l in used if l not in declared]
        if unknown:
            lines = [
                e.line for e in entries if any(l in unknown for l in e.labels)
            ]
            raise DataError(
                f"unknown labels {unknown} (declared classes {list(declared)}), "
                f"first at line {lines[0]}"
            )
        classes = declared
    else:
        classes = tuple(used)
    return DatasetManifest(entries=tuple(entries), classes=classes)


def save_manifest(path, entries, classes=None) -> None:
    """Write a manifest; ``entries`` yields (path, split, labels, difficult)."""
    lines = []
    if classes is not None:
        lines.append("classes\t" + ",".join(classes))
    for entry_path, split, labels, difficult in entries:
        tokens = []
        for lab in sorted(labels):
            tokens.append(f"{_DIFFICULT}{lab}" if lab in difficult else lab)
        lines.append(f"{entry_path}\t{split}\t{','.join(tokens)}")
    Path(path).write_text("\n".join(lines) + "\n")
