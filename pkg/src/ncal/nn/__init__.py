"""Dense-tensor reverse-mode autodiff and the point-based calibration network."""

from .autodiff import Tensor, concat, constant, parameter
from .model import PtModel, PtModelConfig

__all__ = ["Tensor", "concat", "constant", "parameter", "PtModel", "PtModelConfig"]
