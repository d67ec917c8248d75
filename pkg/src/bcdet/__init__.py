"""Circle-heatmap binuclear cell detection toolkit.

Target encoding/decoding, loss evaluators, circle geometry and NMS,
attention and normalisation forward ops, colour-layer segmentation,
slide tiling, evaluation metrics and a synthetic slide generator.
"""

__version__ = "0.1.0"
