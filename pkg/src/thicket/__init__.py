"""Seeing moving targets through clutter with a stationary camera.

A target that is mostly hidden behind foliage in every single frame becomes
visible once frames are registered along its motion and averaged: occluder
streaks blur into the background while the target adds up coherently. This
package simulates such scenes, builds the registered averages, suppresses
the residual occluder streaks in the projection domain, finds the motion
parameters by global search on an image-sharpness objective, and tracks the
recovered target. The `thicket` command line and a small HTTP service wrap
the same pipeline.
"""

from .direct import DirectResult, maximize_on_box
from .errors import ThicketError
from .estimate import (
    EstimationResult,
    SearchBounds,
    estimate_constant,
    estimate_stepwise,
    glv,
)
from .frames import (
    Frame,
    FrameSequence,
    Geometry,
    MotionParams,
    MotionTrack,
    TrackSegment,
    ground_sample_distance,
    load_sequence,
    save_sequence,
)
from .integrate import IntegralImage, integrate
from .occlusion import (
    OcclusionModel,
    integral_variance,
    monte_carlo_variance,
    report_grid,
)
from .radon import Sinogram, band_stop, fbp, radon, radon_filter_image
from .simulate import (
    BackgroundSpec,
    GroundTruth,
    OccluderSpec,
    SceneConfig,
    TargetSpec,
    load_config,
    save_scene,
    simulate,
)
from .track import TrackerConfig, TrackingMetrics, track_sequence

__version__ = "0.1.0"

__all__ = [
    "BackgroundSpec",
    "DirectResult",
    "EstimationResult",
    "Frame",
    "FrameSequence",
    "Geometry",
    "GroundTruth",
    "IntegralImage",
    "MotionParams",
    "MotionTrack",
    "OccluderSpec",
    "OcclusionModel",
    "SceneConfig",
    "SearchBounds",
    "Sinogram",
    "TargetSpec",
    "ThicketError",
    "TrackSegment",
    "TrackerConfig",
    "TrackingMetrics",
    "band_stop",
    "estimate_constant",
    "estimate_stepwise",
    "fbp",
    "glv",
    "ground_sample_distance",
    "integral_variance",
    "integrate",
    "load_config",
    "load_sequence",
    "maximize_on_box",
    "monte_carlo_variance",
    "radon",
    "radon_filter_image",
    "report_grid",
    "save_scene",
    "save_sequence",
    "simulate",
    "track_sequence",
    "__version__",
]
