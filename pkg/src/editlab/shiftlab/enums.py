from enum import Enum


class CorruptionFamily(str, Enum):
    GAUSSIAN_NOISE = "gaussian_noise"
    IMPULSE_NOISE = "impulse_noise"
    GAUSSIAN_BLUR = "gaussian_blur"
    CONTRAST = "contrast"
    BRIGHTNESS = "brightness"
    PIXELATE = "pixelate"


class RegionKind(str, Enum):
    OBJECT = "object"
    BACKGROUND = "background"
    TOP_HALF = "top_half"
    BOTTOM_HALF = "bottom_half"
    BOX = "box"


class StyleKind(str, Enum):
    CHECKER = "checker"
    DOTS = "dots"
    WAVES = "waves"
    GRAVEL = "gravel"
    SNOW = "snow"


class ShapeKind(str, Enum):
    DISK = "disk"
    SQUARE = "square"
    TRIANGLE = "triangle"
    DIAMOND = "diamond"
    RING = "ring"
