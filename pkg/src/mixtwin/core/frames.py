"""Coordinate frames and the scale/offset transforms into the unified frame.

Every environment (miniature physical table, game-engine world, simulator
world) carries its own frame. The unified frame is full-scale real-world
meters; all hub-side aggregation happens there.
"""

import enum
import math
from dataclasses import dataclass

from ..errors import FrameMismatch


class Frame(str, enum.Enum):
    PHYSICAL = "Physical"
    VIRTUAL = "Virtual"
    INNO_LIKE = "InnoLike"
    UNIFIED = "Unified"


# Miniature table is 1:14 with respect to the full-scale environment.
DEFAULT_PHYSICAL_SCALE = 14.0


def normalize_heading(heading: float) -> float:
    """Wrap a heading into (-pi, pi]."""
    if -math.pi < heading <= math.pi:
        return heading
    return math.pi - ((math.pi - heading) % (2.0 * math.pi))


@dataclass(frozen=True)
class FrameTransform:
    """Mapping from one environment frame into the unified frame.

    unified = local * scale_to_unified + offset (positions);
    speeds and accelerations scale, angles and times do not.
    """

    frame: Frame
    scale_to_unified: float
    offset_x: float = 0.0  # meters, unified frame
    offset_y: float = 0.0  # meters, unified frame

    def __post_init__(self):
        if self.scale_to_unified <= 0:
            raise ValueError("scale_to_unified must be > 0")
        if self.frame == Frame.UNIFIED and self.scale_to_unified != 1.0:
            raise ValueError("unified frame must have scale 1.0")

    def require(self, frame: Frame):
        if frame != self.frame:
            raise FrameMismatch(f"transform is for {self.frame.value}, data is in {frame.value}")


def default_transforms(physical_scale: float = DEFAULT_PHYSICAL_SCALE) -> dict[Frame, FrameTransform]:
    """Transform set used unless a hub config overrides it."""
    if physical_scale <= 0:
        raise ValueError("physical_scale must be > 0")
    return {
        Frame.PHYSICAL: FrameTransform(Frame.PHYSICAL, physical_scale),
        Frame.VIRTUAL: FrameTransform(Frame.VIRTUAL, 1.0),
        Frame.INNO_LIKE: FrameTransform(Frame.INNO_LIKE, 1.0),
        Frame.UNIFIED: FrameTransform(Frame.UNIFIED, 1.0),
    }
