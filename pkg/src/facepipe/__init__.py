"""Face detection from still images and frame sequences.

Skin-color pixel rule, connected components and a golden-ratio shape test
find faces; three-class intensity clustering locates eyes, nose and mouth;
geometric measurements plus DCT coefficients feed a Gaussian RBF network or
a recursive basin-partition tree.
"""

from .imaging import load_ppm, save_ppm, to_gray
from .pipeline import Detection, PipelineConfig, detect_still, detect_video

__version__ = "0.1.0"

__all__ = [
    "Detection", "PipelineConfig", "detect_still", "detect_video",
    "load_ppm", "save_ppm", "to_gray",
]
