"""Figure rendering for qlos sweep outputs."""

from .render import Series, build_series, render
from .spec import FigureSpec, SpecError, load_spec_file, parse_spec_text
from .tables import SchemaError, Table, read_table

__version__ = "0.1.0"

__all__ = ["FigureSpec", "SchemaError", "Series", "SpecError", "Table",
           "build_series", "load_spec_file", "parse_spec_text",
           "read_table", "render", "__version__"]
