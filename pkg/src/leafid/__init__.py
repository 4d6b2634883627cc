"""Leaf species identification from shape, colour, texture and vein features."""

from .errors import LeafIdError
from .features import PRESETS, TABLE2, ExtractionSettings, FeatureConfig, assemble_features, extract_groups
from .imaging import LeafImage, centroid, load_leaf, load_leaf_image, max_radius, segment_leaf, trace_contour
from .pnn import PnnModel, classify, load_model, save_model, train

__version__ = "0.1.0"
