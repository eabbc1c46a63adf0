"""Post-processing figures for nlac harness outputs."""

__version__ = "0.1.0"

from .readers import (FieldDump, SchemaError, read_field_dump, read_jumps,
                      read_rates, read_runlog, rewrite_field_dump)
from .render import FIGURE_KINDS, PlotJob, RenderResult, measure_section_jump, render

__all__ = [
    "FieldDump", "SchemaError", "read_field_dump", "read_jumps", "read_rates",
    "read_runlog", "rewrite_field_dump",
    "FIGURE_KINDS", "PlotJob", "RenderResult", "measure_section_jump", "render",
]
