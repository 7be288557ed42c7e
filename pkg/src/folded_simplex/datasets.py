"""Bundled reference data.

The Arctic lake sediment compositions (sand, silt, clay percentages at
39 depths, from Aitchison's classic compositional-data collection) ship
with the package as a fixture for the documented analyses.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

__all__ = [
    "arctic_lake_path",
    "load_arctic_lake",
    "ARCTIC_LAKE_INFLUENTIAL_ROWS",
]

# The two off-band observations (0-based rows; depths 18.0 m and 32.5 m)
# whose removal noticeably shifts the fitted transform parameter. Both
# carry unusually high silt for their position along the depth gradient.
ARCTIC_LAKE_INFLUENTIAL_ROWS = (6, 13)


def arctic_lake_path() -> str:
    """Filesystem path of the bundled Arctic lake CSV."""
    return str(resources.files("folded_simplex").joinpath("data/arctic_lake.csv"))


def load_arctic_lake() -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Load the Arctic lake compositions.

    Returns
    -------
    (parts, depth, names)
        ``parts`` is a (39, 3) array of unit-sum compositions in the
        order sand, silt, clay; ``depth`` the sampling depth in meters.
    """
    raw = np.genfromtxt(arctic_lake_path(), delimiter=",", names=True)
    names = ["sand", "silt", "clay"]
    parts = np.column_stack([raw[c] for c in names])
    parts = parts / parts.sum(axis=1, keepdims=True)
    return parts, np.asarray(raw["depth"]), names
