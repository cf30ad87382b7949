"""Numerical checks of the slicing, translation, seminorm and strip estimates on grids."""

from .fd import (LabError, apply_operator_fd, mollify, slice_tv, total_variation, translation_defect,
                 translation_probe, verify_slicing)
from .grid import DiscreteMeasure, GridDomain, GridField, load_field, save_field
from .seminorm import moment_seminorm, poincare_probe
from .strip import boundary_strip_estimate

__all__ = [
    "DiscreteMeasure", "GridDomain", "GridField", "LabError", "apply_operator_fd", "boundary_strip_estimate",
    "load_field", "moment_seminorm", "mollify", "poincare_probe", "save_field", "slice_tv", "total_variation",
    "translation_defect", "translation_probe", "verify_slicing",
]
