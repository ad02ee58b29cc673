"""Python bindings for the nystrom_vie solver."""

import json as _json

from ._core import (
    NvieError,
    WeightTable,
    __version__,
    build_id,
    cli,
    compute_weight_table,
    dyadic_green,
    gauss_legendre,
    lagrange_basis,
    load_table,
    save_table,
    scalar_g,
    table_file_name,
)
from ._core import run as _run

__all__ = [
    "NvieError",
    "WeightTable",
    "__version__",
    "build_id",
    "cli",
    "compute_weight_table",
    "dyadic_green",
    "gauss_legendre",
    "lagrange_basis",
    "load_table",
    "run",
    "save_table",
    "scalar_g",
    "table_file_name",
]


def run(name, config=None, tables="", out=".", build_missing=False):
    """Run ``solve`` or an experiment and return the report as a dict.

    ``config`` is a dict with the same keys as the JSON config files.
    """
    text = _json.dumps(config or {})
    return _json.loads(_run(name, text, str(tables), str(out), build_missing))
