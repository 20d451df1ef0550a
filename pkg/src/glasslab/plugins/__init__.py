from .ports import Detection, MockSegmenter, MockVerifier, PluginError, PortPair
from .process import PluginProcessPort

__all__ = [
    "Detection",
    "MockSegmenter",
    "MockVerifier",
    "PluginError",
    "PluginProcessPort",
    "PortPair",
]
