"""stabrender: deterministic figures from stablab CSV artifacts."""

from .render import SpecError, build_figure, render

__version__ = "0.1.0"
