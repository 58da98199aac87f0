"""Figure specs: what to read, how to group it, where to draw it."""

import json
from dataclasses import dataclass
from pathlib import Path

KINDS = ("mi_vs_snr", "mi_vs_theta", "ber_vs_snr", "ber_vs_range")

# default series keys per kind; ber sweeps vary the detector, mi sweeps
# vary the quantization scheme
DEFAULT_GROUPING = {"mi_vs_snr": ("scheme",),
                    "mi_vs_theta": ("scheme",),
                    "ber_vs_snr": ("detector",),
                    "ber_vs_range": ("detector",)}

IMAGE_SUFFIXES = (".svg", ".png")


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    csv: tuple          # one or more input tables, concatenated
    group_by: tuple     # row keys that define a series
    output: str         # image file name, .svg or .png
    title: str = ""


def _one(obj, base_dir) -> FigureSpec:
    if not isinstance(obj, dict):
        raise SpecError("each figure spec must be a JSON object")
    unknown = set(obj) - {"kind", "csv", "group_by", "output", "title"}
    if unknown:
        raise SpecError(f"unknown spec key '{sorted(unknown)[0]}'")
    for key in ("kind", "csv", "output"):
        if key not in obj:
            raise SpecError(f"spec key '{key}' is required")
    kind = obj["kind"]
    if kind not in KINDS:
        raise SpecError(f"unknown figure kind '{kind}'; expected one of "
                        f"{', '.join(KINDS)}")
    raw_csv = obj["csv"]
    if isinstance(raw_csv, str):
        raw_csv = [raw_csv]
    if not isinstance(raw_csv, list) or not raw_csv \
            or not all(isinstance(p, str) for p in raw_csv):
        raise SpecError("spec key 'csv' must be a path or nonempty "
                        "list of paths")
    # paths in a spec file are relative to the file, not the cwd
    csv_paths = tuple(str((base_dir / p)) if not Path(p).is_absolute()
                      else p for p in raw_csv)
    group_by = obj.get("group_by", DEFAULT_GROUPING[kind])
    if isinstance(group_by, str):
        group_by = [group_by]
    if not isinstance(group_by, list | tuple) or not group_by \
            or not all(isinstance(k, str) for k in group_by):
        raise SpecError("spec key 'group_by' must be a nonempty list "
                        "of column names")
    output = obj["output"]
    if not isinstance(output, str) or not output:
        raise SpecError("spec key 'output' must be a file name")
    if not output.endswith(IMAGE_SUFFIXES):
        raise SpecError(f"output '{output}' must end in one of "
                        f"{', '.join(IMAGE_SUFFIXES)}")
    title = obj.get("title", "")
    if not isinstance(title, str):
        raise SpecError("spec key 'title' must be a string")
    return FigureSpec(kind, csv_paths, tuple(group_by), output, title)


def parse_spec_text(text, base_dir=".") -> list:
    """One spec object or a list of them -> list of FigureSpec."""
    base_dir = Path(base_dir)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(f"line {e.lineno} column {e.colno}: {e.msg}") from e
    items = obj if isinstance(obj, list) else [obj]
    if not items:
        raise SpecError("spec file holds an empty list")
    specs = [_one(item, base_dir) for item in items]
    seen = set()
    for s in specs:
        if s.output in seen:
            raise SpecError(f"duplicate output '{s.output}'")
        seen.add(s.output)
    return specs


def load_spec_file(path) -> list:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SpecError(f"cannot read spec file: {e}") from e
    return parse_spec_text(text, base_dir=path.parent)
