"""Figures for sinai-ppp experiment outputs (CSV in, vector graphics out)."""

from .plots import FigureSpec, render

__all__ = ["FigureSpec", "render"]
