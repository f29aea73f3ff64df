"""scene4d: multi-view RGB-D fusion, point-splat novel view rendering, and
occlusion-aware evaluation for dynamic scenes."""

__version__ = "0.1.0"

from .camera import (  # noqa: F401
    Extrinsics,
    Intrinsics,
    PoseDescription,
    RelativeTransform,
    interpolate_pose,
    intrinsics_from_fov,
    motion_bucket,
    pose_to_extrinsics,
    project,
    relative_extrinsics,
    relative_transform,
    unproject_pixel,
)
from .fusion import (  # noqa: F401
    DepthFrame,
    FusedPointCloud,
    ViewFrame,
    fuse_frame,
    unproject_view,
)
from .metrics import (  # noqa: F401
    IoUAccumulator,
    MetricsReport,
    evaluate_sequence,
    miou,
    psnr,
    ssim,
)
from .occlusion import OcclusionMask, Visibility, compute_occlusion_mask  # noqa: F401
from .splat import (  # noqa: F401
    RenderedFrame,
    RenderSettings,
    render_points,
    render_trajectory,
    reproject_baseline,
)
from .trajectory import (  # noqa: F401
    MAX90,
    MAX180,
    CameraTrajectory,
    ClipSpec,
    SamplingBounds,
    TrajectorySpec,
    bounds_preset,
    build_direct,
    build_gradual,
    build_sine_eased,
    sample_clip,
    sample_pose_pair,
)
