"""Smooth-stress EDM objective, trust-region search and Kantorovich certificates."""

from ._edmstress import *  # noqa: F401,F403
from ._edmstress import __version__
