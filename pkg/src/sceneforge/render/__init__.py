from .camera import CameraModel, primary_rays, panoramic_pixel_of_direction
from .bvh import Bvh, build_bvh, linear_closest_hit
from .scenegeo import RenderScene, build_render_scene
from .framesio import load_channel, save_frameset, CHANNEL_FILES
from .render import FrameSet, RenderConfig, render

__all__ = [
    "Bvh",
    "CameraModel",
    "CHANNEL_FILES",
    "FrameSet",
    "RenderConfig",
    "RenderScene",
    "build_bvh",
    "build_render_scene",
    "linear_closest_hit",
    "load_channel",
    "panoramic_pixel_of_direction",
    "primary_rays",
    "render",
    "save_frameset",
]
