"""hsmask: region-of-interest masking and masked analytics for
hyperspectral cubes."""

__version__ = "0.1.0"

from .envi import EnviHeader, HyperCube, Interleave, parse_header, read_cube, write_cube
from .masks import BBox, BinaryMask, mask_difference, mask_union, mask_xor, tight_bbox
from .proposals import Detection, PipelineConfig, Prompt, SegmentProposal

__all__ = [
    "__version__",
    "EnviHeader", "HyperCube", "Interleave", "parse_header", "read_cube", "write_cube",
    "BBox", "BinaryMask", "mask_difference", "mask_union", "mask_xor", "tight_bbox",
    "Detection", "PipelineConfig", "Prompt", "SegmentProposal",
]
