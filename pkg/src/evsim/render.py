"""Procedural ray-cast renderer: axis-aligned textured planes, z-depth output.

The camera frame is x right, y down, z forward (optical axis). Pixel (i, j)
casts the ray through continuous image coordinates exactly (i, j), so
``pinhole_project`` is its inverse. Depth is projective z-depth (distance
along the optical axis), which makes disparity 1/z well-defined; misses
report +inf depth and the scene's ambient intensity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .events.types import DepthFrame, IntensityFrame

_RAY_EPS = 1e-9


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


@dataclass(frozen=True)
class Pose:
    """Rigid pose: position in meters plus a unit world-from-body quaternion."""

    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float]  # (w, x, y, z)

    def __post_init__(self) -> None:
        q = np.asarray(self.orientation, np.float64)
        if abs(float(np.linalg.norm(q)) - 1.0) > 1e-6:
            raise ValueError(f"orientation quaternion is not unit: |q|={np.linalg.norm(q)}")

    def rotation_matrix(self) -> np.ndarray:
        w, x, y, z = self.orientation
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ])


@dataclass(frozen=True)
class Checkerboard:
    cell: float
    intensity_a: float
    intensity_b: float

    def __post_init__(self) -> None:
        if self.cell <= 0:
            raise ValueError("checker cell size must be positive")
        for v in (self.intensity_a, self.intensity_b):
            if not (0.0 <= v <= 1.0):
                raise ValueError("checker intensities must lie in [0, 1]")

    def sample(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        parity = (np.floor(a / self.cell) + np.floor(b / self.cell)).astype(np.int64) & 1
        return np.where(parity == 0, self.intensity_a, self.intensity_b)


@dataclass(frozen=True)
class ValueNoise:
    """Bilinear value noise on a lattice of ``scale``-sized cells."""

    scale: float
    seed: int
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValueError("noise scale must be positive")
        if not (0.0 <= self.lo <= self.hi <= 1.0):
            raise ValueError("noise intensity range must satisfy 0 <= lo <= hi <= 1")

    def sample(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        qa = a / self.scale
        qb = b / self.scale
        ia = np.floor(qa)
        ib = np.floor(qb)
        fa = qa - ia
        fb = qb - ib
        ia = ia.astype(np.int64)
        ib = ib.astype(np.int64)
        v00 = _hash01(ia, ib, self.seed)
        v10 = _hash01(ia + 1, ib, self.seed)
        v01 = _hash01(ia, ib + 1, self.seed)
        v11 = _hash01(ia + 1, ib + 1, self.seed)
        top = v00 + (v10 - v00) * fa
        bot = v01 + (v11 - v01) * fa
        val = top + (bot - top) * fb
        return self.lo + (self.hi - self.lo) * val


def _hash01(ix: np.ndarray, iy: np.ndarray, seed: int) -> np.ndarray:
    """Deterministic lattice hash to [0, 1)."""
    seed_mix = ((seed & 0xFFFFFFFFFFFFFFFF) * 0xD6E8FEB86659FD93) & 0xFFFFFFFFFFFFFFFF
    h = (ix.astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15)
         ^ iy.astype(np.uint64) * np.uint64(0xC2B2AE3D27D4EB4F)
         ^ np.uint64(seed_mix))
    h ^= h >> np.uint64(33)
    h *= np.uint64(0xFF51AFD7ED558CCD)
    h ^= h >> np.uint64(33)
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


Texture = Union[Checkerboard, ValueNoise]

_OTHER_AXES = {0: (1, 2), 1: (0, 2), 2: (0, 1)}


@dataclass(frozen=True)
class AxisPlane:
    """Textured rectangle with its normal along a coordinate axis.

    ``bounds`` are (amin, amax, bmin, bmax) over the two remaining axes in
    ascending index order; texture coordinates are those world coordinates.
    """

    axis: int
    offset: float
    bounds: tuple[float, float, float, float]
    texture: Texture

    def __post_init__(self) -> None:
        if self.axis not in (0, 1, 2):
            raise ValueError("plane axis must be 0, 1, or 2")
        amin, amax, bmin, bmax = self.bounds
        if not (amax > amin and bmax > bmin):
            raise ValueError("plane extents must be positive")


@dataclass(frozen=True)
class SceneSpec:
    planes: tuple[AxisPlane, ...]
    ambient: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.ambient <= 1.0):
            raise ValueError("ambient intensity must lie in [0, 1]")


def pinhole_project(point, K: CameraIntrinsics):
    """Project a camera-frame point; None marks points behind the camera."""
    x, y, z = float(point[0]), float(point[1]), float(point[2])
    if z <= 0:
        return None
    return (K.fx * x / z + K.cx, K.fy * y / z + K.cy)


def _camera_rays(pose: Pose, K: CameraIntrinsics) -> np.ndarray:
    """World-frame ray directions, unnormalized with camera-z component 1.

    With this scaling the ray parameter of a hit equals its z-depth.
    """
    u = (np.arange(K.width, dtype=np.float64) - K.cx) / K.fx
    v = (np.arange(K.height, dtype=np.float64) - K.cy) / K.fy
    uu, vv = np.meshgrid(u, v)
    dirs_cam = np.stack([uu, vv, np.ones_like(uu)], axis=-1)
    return dirs_cam @ pose.rotation_matrix().T


def render_pair(scene: SceneSpec, pose: Pose, K: CameraIntrinsics,
                t: int = 0) -> tuple[IntensityFrame, DepthFrame]:
    """Trace every pixel once; returns pixel-aligned intensity and depth."""
    dirs = _camera_rays(pose, K)
    origin = np.asarray(pose.position, np.float64)
    depth = np.full((K.height, K.width), np.inf)
    intensity = np.full((K.height, K.width), scene.ambient)
    for plane in scene.planes:
        k = plane.axis
        a1, a2 = _OTHER_AXES[k]
        dk = dirs[..., k]
        with np.errstate(divide="ignore", invalid="ignore"):
            tt = (plane.offset - origin[k]) / dk
            pa = origin[a1] + tt * dirs[..., a1]
            pb = origin[a2] + tt * dirs[..., a2]
            amin, amax, bmin, bmax = plane.bounds
            hit = (
                np.isfinite(tt) & (tt > _RAY_EPS) & (tt < depth)
                & (pa >= amin) & (pa <= amax) & (pb >= bmin) & (pb <= bmax)
            )
        if not hit.any():
            continue
        tex = plane.texture.sample(pa[hit], pb[hit])
        depth[hit] = tt[hit]
        intensity[hit] = tex
    np.clip(intensity, 0.0, 1.0, out=intensity)
    return (
        IntensityFrame(width=K.width, height=K.height, t=t, values=intensity.astype(np.float32)),
        DepthFrame(width=K.width, height=K.height, t=t, values=depth.astype(np.float32)),
    )


def render_intensity(scene: SceneSpec, pose: Pose, K: CameraIntrinsics,
                     t: int = 0) -> IntensityFrame:
    return render_pair(scene, pose, K, t)[0]


def render_depth(scene: SceneSpec, pose: Pose, K: CameraIntrinsics,
                 t: int = 0) -> DepthFrame:
    return render_pair(scene, pose, K, t)[1]


def _texture_from_dict(d: dict) -> Texture:
    kind = d.get("type")
    if kind == "checker":
        return Checkerboard(cell=float(d["cell"]),
                            intensity_a=float(d["intensity_a"]),
                            intensity_b=float(d["intensity_b"]))
    if kind == "noise":
        return ValueNoise(scale=float(d["scale"]), seed=int(d.get("seed", 0)),
                          lo=float(d.get("lo", 0.0)), hi=float(d.get("hi", 1.0)))
    raise ValueError(f"unknown texture type {kind!r} (use 'checker' or 'noise')")


_AXIS_NAMES = {"x": 0, "y": 1, "z": 2, 0: 0, 1: 1, 2: 2}


def scene_from_dict(d: dict) -> SceneSpec:
    """Build a scene from its configuration-file form."""
    planes = []
    for p in d.get("planes", []):
        planes.append(AxisPlane(
            axis=_AXIS_NAMES[p["axis"]],
            offset=float(p["offset"]),
            bounds=tuple(float(b) for b in p["bounds"]),
            texture=_texture_from_dict(p["texture"]),
        ))
    return SceneSpec(planes=tuple(planes), ambient=float(d.get("ambient", 0.0)))
