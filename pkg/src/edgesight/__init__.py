"""edgesight: human-object detection at desk scale.

Three detector families over a shared image core -- Haar-like rectangle
features boosted into a cascade, HOG descriptors scored by a linear SVM,
and a lightweight separable-convolution CNN with a single-shot multi-box
head -- plus a convolution complexity analyzer and an FPS/CPU/memory
benchmark and evaluation harness.
"""

from .errors import (BoundsError, ChannelError, ConfigError, FormatError,
                     InputError, ShapeError, ToolkitError)
from .geometry import BoundingBox, Detection, clamp_box, iou, merge_biggest_box, nms
from .image import Image, load_image, resize_nearest, save_image, to_grayscale
from .integral import IntegralImage, integral, rect_sum
from .pyramid import PyramidLevel, build_pyramid

__version__ = "0.1.0"

__all__ = [
    "BoundsError", "ChannelError", "ConfigError", "FormatError", "InputError",
    "ShapeError", "ToolkitError", "BoundingBox", "Detection", "clamp_box",
    "iou", "merge_biggest_box", "nms", "Image", "load_image", "resize_nearest",
    "save_image", "to_grayscale", "IntegralImage", "integral", "rect_sum",
    "PyramidLevel", "build_pyramid", "__version__",
]
