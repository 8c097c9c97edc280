"""Figure rendering for pdeit experiment outputs."""

from .render import DEFAULT_STYLE, FIGURE_KINDS, RenderError, render

__version__ = "0.1.0"

__all__ = ["DEFAULT_STYLE", "FIGURE_KINDS", "RenderError", "render"]
