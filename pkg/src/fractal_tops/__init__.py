"""Fractal tops, blowups and top tilings of iterated function systems."""
from .addresses import Cmp, InfiniteAddress, PriorityOrder, TileAddress, Word, lex_compare, reverse_prefix
from .attractor import Raster, Viewport, attractor_raster, chaos_game, cylinder_raster, hausdorff_estimate
from .catalog import builtin, builtin_names, resolve_ifs
from .errors import *  # noqa: F401,F403
from .ifs_core import AffineMap, Ifs, apply, compose_word, fixed_point, ifs_1d, invert, load_ifs, uniform_ratio
from .tops import TopField, TopWordSet, compute_top_field, top_words, top_words_1d_exact

__version__ = "0.1.0"
