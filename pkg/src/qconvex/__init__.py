"""Numerical checks for quasi-convex subsets of spaces with curvature bounded below."""

__version__ = "0.1.0"

from .nets import Net, SubsetNet, build_net, make_subset  # noqa: E402
from .qc_check import (  # noqa: E402
    CheckReport,
    check_extremal,
    check_local_quasi_convex,
    check_locally_convex,
    check_quasi_convex,
    classify,
)
from .spaces import Space, build_space  # noqa: E402

__all__ = [
    "CheckReport",
    "Net",
    "Space",
    "SubsetNet",
    "build_net",
    "build_space",
    "check_extremal",
    "check_local_quasi_convex",
    "check_locally_convex",
    "check_quasi_convex",
    "classify",
    "make_subset",
]
