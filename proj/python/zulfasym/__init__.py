"""Ultralow-field NMR spin dynamics, magnetometer response and asymmetric-
spectrum analysis."""

import os as _os
from pathlib import Path as _Path

# installed wheels carry the molecule/sensor tables next to this file; an
# explicit ZULFASYM_DATA_DIR always wins
_packaged_data = _Path(__file__).resolve().parent / "data"
if "ZULFASYM_DATA_DIR" not in _os.environ and _packaged_data.is_dir():
    _os.environ["ZULFASYM_DATA_DIR"] = str(_packaged_data)

from ._core import *  # noqa: F401,F403
from ._core import __doc__ as _core_doc

__doc__ = _core_doc
__version__ = "0.1.0"
