"""Left-ventricle contour analysis, narrative generation and explanation scoring."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
