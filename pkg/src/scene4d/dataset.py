"""On-disk dataset contract.

Layout per scene::

    scene_dir/
      scene.json                  # manifest: cameras, calibration, modalities
      categories.json             # label id -> name
      trajectories.json           # fixed evaluation trajectory specs
      cam_<id>/rgb/frame_%04d.png
      cam_<id>/depth/frame_%04d.pfm
      cam_<id>/semantic/frame_%04d.png
      fused/frame_%04d.bin(.json) # optional point records

RGB is 8-bit PNG, depth is little-endian PFM (scale -1.0), semantics are
8-bit single-channel PNG, occlusion masks 2-bit PNG (values 0..3). All
writes land on temp paths renamed atomically into place, and every format
round-trips byte-identically.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__, pfm
from .camera import Extrinsics, Intrinsics
from .fusion import DepthFrame, ViewFrame
from .occlusion import OcclusionMask
from .splat import RenderedFrame

FRAME_FMT = "frame_{:04d}"

_MASK_PALETTE = [0, 0, 0, 85, 85, 85, 170, 170, 170, 255, 255, 255]


def _atomic_replace(path: Path, write_fn) -> None:
    tmp = path.with_name(path.name + ".tmp")
    write_fn(tmp)
    os.replace(tmp, path)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def provenance(seed: int, config: dict) -> dict:
    return {"seed": seed, "config_sha256": config_hash(config), "version": __version__}


def write_json(path, obj) -> None:
    path = Path(path)
    _atomic_replace(
        path, lambda p: p.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    )


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


# ---------------------------------------------------------------------------
# Image formats


def write_rgb_png(path, image: np.ndarray) -> None:
    """Quantize a float [0, 1] HxWx3 image to 8-bit PNG."""
    data = np.round(np.clip(np.asarray(image), 0.0, 1.0) * 255.0).astype(np.uint8)
    _atomic_replace(Path(path), lambda p: Image.fromarray(data, mode="RGB").save(p, format="PNG"))


def read_rgb_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0


def write_semantic_png(path, labels: np.ndarray) -> None:
    data = np.asarray(labels)
    if data.max(initial=0) > 255:
        raise ValueError("semantic PNG supports label ids up to 255")
    data = data.astype(np.uint8)
    _atomic_replace(Path(path), lambda p: Image.fromarray(data, mode="L").save(p, format="PNG"))


def read_semantic_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im, dtype=np.uint16)


def write_depth_pfm(path, depth: DepthFrame) -> None:
    _atomic_replace(Path(path), lambda p: pfm.write_pfm(p, depth.values))


def read_depth_pfm(path) -> DepthFrame:
    return DepthFrame(pfm.read_pfm(path))


def write_coverage_png(path, coverage: np.ndarray) -> None:
    data = np.asarray(coverage, dtype=bool)
    _atomic_replace(Path(path), lambda p: Image.fromarray(data).save(p, format="PNG"))


def read_coverage_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im, dtype=bool)


def write_mask_png(path, mask: OcclusionMask) -> None:
    """Store visibility labels (values 0..3) as a 2-bit palettized PNG."""
    im = Image.fromarray(mask.labels, mode="P")
    im.putpalette(_MASK_PALETTE)
    _atomic_replace(Path(path), lambda p: im.save(p, format="PNG", bits=2))


def read_mask_png(path) -> OcclusionMask:
    with Image.open(path) as im:
        return OcclusionMask(np.asarray(im, dtype=np.uint8))


# ---------------------------------------------------------------------------
# Scene manifest


@dataclass(frozen=True)
class CameraRecord:
    camera_id: int
    intrinsics: Intrinsics
    extrinsics: tuple[Extrinsics, ...]  # one per frame

    def to_dict(self) -> dict:
        return {
            "camera_id": self.camera_id,
            "intrinsics": self.intrinsics.to_dict(),
            "extrinsics": [e.matrix.ravel().tolist() for e in self.extrinsics],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraRecord":
        return cls(
            camera_id=int(d["camera_id"]),
            intrinsics=Intrinsics.from_dict(d["intrinsics"]),
            extrinsics=tuple(
                Extrinsics(np.asarray(m, dtype=np.float64).reshape(4, 4))
                for m in d["extrinsics"]
            ),
        )


@dataclass(frozen=True)
class SceneManifest:
    scene_id: str
    frame_count: int
    base_fps: float
    cameras: tuple[CameraRecord, ...]
    modalities: tuple[str, ...]
    far_plane: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for cam in self.cameras:
            if len(cam.extrinsics) != self.frame_count:
                raise ValueError(
                    f"camera {cam.camera_id} has {len(cam.extrinsics)} extrinsics, "
                    f"expected {self.frame_count}"
                )

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "frame_count": self.frame_count,
            "base_fps": self.base_fps,
            "cameras": [c.to_dict() for c in self.cameras],
            "modalities": list(self.modalities),
            "far_plane": self.far_plane,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneManifest":
        return cls(
            scene_id=str(d["scene_id"]),
            frame_count=int(d["frame_count"]),
            base_fps=float(d["base_fps"]),
            cameras=tuple(CameraRecord.from_dict(c) for c in d["cameras"]),
            modalities=tuple(d["modalities"]),
            far_plane=float(d["far_plane"]),
            provenance=d.get("provenance", {}),
        )

    def save(self, scene_dir) -> None:
        write_json(Path(scene_dir) / "scene.json", self.to_dict())

    @classmethod
    def load(cls, scene_dir) -> "SceneManifest":
        path = Path(scene_dir) / "scene.json"
        if not path.exists():
            raise FileNotFoundError(f"no scene manifest at {path}")
        return cls.from_dict(read_json(path))

    def validate_files(self, scene_dir) -> None:
        """Check that every referenced frame file exists."""
        scene_dir = Path(scene_dir)
        for cam in self.cameras:
            for modality in self.modalities:
                ext = "pfm" if modality == "depth" else "png"
                for t in range(self.frame_count):
                    path = frame_path(scene_dir, cam.camera_id, modality, t, ext)
                    if not path.exists():
                        raise FileNotFoundError(f"manifest references missing {path}")


def camera_dir(scene_dir, camera_id: int) -> Path:
    return Path(scene_dir) / f"cam_{camera_id:02d}"


def frame_path(scene_dir, camera_id: int, modality: str, t: int, ext: str) -> Path:
    return camera_dir(scene_dir, camera_id) / modality / (FRAME_FMT.format(t) + "." + ext)


def fused_path(scene_dir, t: int) -> Path:
    return Path(scene_dir) / "fused" / (FRAME_FMT.format(t) + ".bin")


def save_view_frame(scene_dir, camera_id: int, view: ViewFrame) -> None:
    cam = camera_dir(scene_dir, camera_id)
    (cam / "rgb").mkdir(parents=True, exist_ok=True)
    (cam / "depth").mkdir(parents=True, exist_ok=True)
    write_rgb_png(frame_path(scene_dir, camera_id, "rgb", view.timestamp, "png"), view.rgb)
    write_depth_pfm(
        frame_path(scene_dir, camera_id, "depth", view.timestamp, "pfm"), view.depth
    )
    if view.semantic is not None:
        (cam / "semantic").mkdir(parents=True, exist_ok=True)
        write_semantic_png(
            frame_path(scene_dir, camera_id, "semantic", view.timestamp, "png"),
            view.semantic,
        )


def load_view_frame(
    scene_dir, manifest: SceneManifest, camera_index: int, t: int
) -> ViewFrame:
    cam = manifest.cameras[camera_index]
    if not 0 <= t < manifest.frame_count:
        raise ValueError(f"frame {t} outside [0, {manifest.frame_count})")
    rgb = read_rgb_png(frame_path(scene_dir, cam.camera_id, "rgb", t, "png"))
    depth = read_depth_pfm(frame_path(scene_dir, cam.camera_id, "depth", t, "pfm"))
    semantic = None
    if "semantic" in manifest.modalities:
        semantic = read_semantic_png(
            frame_path(scene_dir, cam.camera_id, "semantic", t, "png")
        )
    return ViewFrame(
        rgb=rgb,
        depth=depth,
        intrinsics=cam.intrinsics,
        extrinsics=cam.extrinsics[t],
        timestamp=t,
        semantic=semantic,
    )


# ---------------------------------------------------------------------------
# Rendered output frames


def save_rendered_frame(out_dir, t: int, frame: RenderedFrame) -> None:
    out = Path(out_dir)
    name = FRAME_FMT.format(t)
    if frame.is_semantic:
        (out / "semantic").mkdir(parents=True, exist_ok=True)
        write_semantic_png(out / "semantic" / (name + ".png"), frame.image)
    else:
        (out / "rgb").mkdir(parents=True, exist_ok=True)
        write_rgb_png(out / "rgb" / (name + ".png"), frame.image)
    (out / "depth").mkdir(parents=True, exist_ok=True)
    write_depth_pfm(out / "depth" / (name + ".pfm"), frame.depth)
    (out / "coverage").mkdir(parents=True, exist_ok=True)
    write_coverage_png(out / "coverage" / (name + ".png"), frame.coverage)


def load_rendered_images(pred_dir, frame_count: int, modality: str) -> list[np.ndarray]:
    pred_dir = Path(pred_dir)
    sub = "semantic" if modality == "semantic" else "rgb"
    images = []
    for t in range(frame_count):
        path = pred_dir / sub / (FRAME_FMT.format(t) + ".png")
        if not path.exists():
            raise FileNotFoundError(f"missing predicted frame {path}")
        images.append(
            read_semantic_png(path) if modality == "semantic" else read_rgb_png(path)
        )
    return images
