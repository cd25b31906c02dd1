"""Pool of 15 image augmentation operations sharing one strength scale.

Every operation maps an RGB uint8 image of shape (H, W, 3) and a strength
gamma in [0, 1] to a new image of the same shape and dtype.  gamma = 0 is the
bit-exact identity for every operation.  The first eleven operations are
signed: a direction in {+1, -1} flips their effect, and callers draw it
uniformly at random.  The remaining four are unsigned and ignore the sign.

Conventions pinned here and relied on by the tests:
  - rounding is always half away from zero, then clipping to [0, 255]
  - geometric operations inverse-map with bilinear interpolation about the
    image centre ((W-1)/2, (H-1)/2) and fill out-of-bounds samples with 0
  - translations move by a whole number of pixels (the continuous shift is
    rounded), so a translated image contains only original pixel values
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class OperationKind(str, enum.Enum):
    TRANSLATE_X = "translate_x"
    TRANSLATE_Y = "translate_y"
    SHEAR_X = "shear_x"
    SHEAR_Y = "shear_y"
    SCALE = "scale"
    ROTATE = "rotate"
    HUE = "hue"
    BRIGHTNESS = "brightness"
    SHARPNESS = "sharpness"
    CONTRAST = "contrast"
    SATURATION = "saturation"
    SOLARIZE = "solarize"
    POSTERIZE = "posterize"
    AUTOCONTRAST = "autocontrast"
    EQUALIZE = "equalize"


ALL_KINDS: tuple[OperationKind, ...] = tuple(OperationKind)

SIGNED_KINDS: frozenset[OperationKind] = frozenset(ALL_KINDS[:11])

# Rec. 601 luma weights, used as the gray pivot for contrast and saturation
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class PlanStep:
    """One drawn operation: kind, strength in [0, 1], direction in {+1, -1}."""

    kind: OperationKind
    gamma: float
    sign: int = 1


def _round_half_away(x: np.ndarray | float) -> np.ndarray | float:
    return np.trunc(x + np.copysign(0.5, x))


def _to_u8(x: np.ndarray) -> np.ndarray:
    return np.clip(_round_half_away(x), 0.0, 255.0).astype(np.uint8)


def _check_batch(imgs: np.ndarray) -> None:
    if not isinstance(imgs, np.ndarray) or imgs.dtype != np.uint8:
        raise TypeError("images must be a uint8 ndarray")
    if imgs.ndim != 4 or imgs.shape[3] != 3:
        raise ValueError(f"expected batch shape (N, H, W, 3), got {imgs.shape}")
    if imgs.shape[1] == 0 or imgs.shape[2] == 0:
        raise ValueError(f"zero-sized image: shape {imgs.shape}")


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not (0.0 <= gamma <= 1.0):
        raise ValueError(f"strength must be in [0, 1], got {gamma}")
    return gamma


def _check_sign(sign: int) -> int:
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    return int(sign)


# ---------------------------------------------------------------------------
# geometric operations


def _translate(imgs: np.ndarray, dx: int, dy: int) -> np.ndarray:
    n, h, w, _ = imgs.shape
    out = np.zeros_like(imgs)
    if abs(dx) >= w or abs(dy) >= h:
        return out
    xs_dst = slice(max(dx, 0), w + min(dx, 0))
    xs_src = slice(max(-dx, 0), w + min(-dx, 0))
    ys_dst = slice(max(dy, 0), h + min(dy, 0))
    ys_src = slice(max(-dy, 0), h + min(-dy, 0))
    out[:, ys_dst, xs_dst, :] = imgs[:, ys_src, xs_src, :]
    return out


def _affine_sample(imgs: np.ndarray, inv: np.ndarray) -> np.ndarray:
    """Resample a batch through a 2x3 output-to-input affine map, bilinear, fill 0."""
    n, h, w, _ = imgs.shape
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    xi = inv[0, 0] * xs + inv[0, 1] * ys + inv[0, 2]
    yi = inv[1, 0] * xs + inv[1, 1] * ys + inv[1, 2]
    x0 = np.floor(xi)
    y0 = np.floor(yi)
    fx = xi - x0
    fy = yi - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    acc = np.zeros((n, h, w, 3), dtype=np.float64)
    corners = (
        (y0, x0, (1.0 - fx) * (1.0 - fy)),
        (y0, x0 + 1, fx * (1.0 - fy)),
        (y0 + 1, x0, (1.0 - fx) * fy),
        (y0 + 1, x0 + 1, fx * fy),
    )
    for yc, xc, wgt in corners:
        valid = (xc >= 0) & (xc < w) & (yc >= 0) & (yc < h)
        xcl = np.clip(xc, 0, w - 1)
        ycl = np.clip(yc, 0, h - 1)
        vals = imgs[:, ycl, xcl, :].astype(np.float64)
        acc += vals * (wgt * valid)[None, :, :, None]
    return _to_u8(acc)


def _center(h: int, w: int) -> tuple[float, float]:
    return (w - 1) / 2.0, (h - 1) / 2.0


def _inv_shear_x(factor: float, h: int, w: int) -> np.ndarray:
    cx, cy = _center(h, w)
    return np.array([[1.0, -factor, factor * cy], [0.0, 1.0, 0.0]])


def _inv_shear_y(factor: float, h: int, w: int) -> np.ndarray:
    cx, cy = _center(h, w)
    return np.array([[1.0, 0.0, 0.0], [-factor, 1.0, factor * cx]])


def _inv_scale(factor: float, h: int, w: int) -> np.ndarray:
    cx, cy = _center(h, w)
    s = 1.0 / factor
    return np.array([[s, 0.0, cx * (1.0 - s)], [0.0, s, cy * (1.0 - s)]])


def _inv_rotate(radians: float, h: int, w: int) -> np.ndarray:
    cx, cy = _center(h, w)
    c = math.cos(radians)
    s = math.sin(radians)
    # inverse of a rotation by +radians about the centre
    return np.array(
        [
            [c, s, cx - c * cx - s * cy],
            [-s, c, cy + s * cx - c * cy],
        ]
    )


# ---------------------------------------------------------------------------
# colour operations


def _rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Vectorised RGB -> HSV on floats in [0, 1], matching colorsys."""
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = np.max(rgb, axis=-1)
    minc = np.min(rgb, axis=-1)
    v = maxc
    delta = maxc - minc
    s = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1.0), 0.0)
    safe = np.where(delta > 0, delta, 1.0)
    rc = (maxc - r) / safe
    gc = (maxc - g) / safe
    bc = (maxc - b) / safe
    h = np.where(r == maxc, bc - gc, np.where(g == maxc, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(delta > 0, (h / 6.0) % 1.0, 0.0)
    return np.stack([h, s, v], axis=-1)


def _hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    i = i.astype(np.int64) % 6
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


def _hue_shift(imgs: np.ndarray, shift: float) -> np.ndarray:
    hsv = _rgb_to_hsv(imgs.astype(np.float64) / 255.0)
    hsv[..., 0] = (hsv[..., 0] + shift) % 1.0
    return _to_u8(_hsv_to_rgb(hsv) * 255.0)


def _box_blur(imgs: np.ndarray) -> np.ndarray:
    """3x3 box blur with edge replication, float64 output."""
    padded = np.pad(imgs.astype(np.float64), ((0, 0), (1, 1), (1, 1), (0, 0)), mode="edge")
    acc = np.zeros(imgs.shape, dtype=np.float64)
    h, w = imgs.shape[1], imgs.shape[2]
    for dy in range(3):
        for dx in range(3):
            acc += padded[:, dy : dy + h, dx : dx + w, :]
    return acc / 9.0


def _autocontrast_full(imgs: np.ndarray) -> np.ndarray:
    """Per-channel min/max stretch; constant channels pass through unchanged."""
    f = imgs.astype(np.float64)
    lo = f.min(axis=(1, 2), keepdims=True)
    hi = f.max(axis=(1, 2), keepdims=True)
    flat = hi <= lo
    scale = 255.0 / np.where(flat, 1.0, hi - lo)
    stretched = _to_u8((f - lo) * scale)
    return np.where(flat, imgs, stretched)


def _equalize_full(imgs: np.ndarray) -> np.ndarray:
    """Per-channel histogram equalisation via cumulative-distribution remap."""
    n, h, w, _ = imgs.shape
    total = h * w
    out = np.empty_like(imgs)
    for i in range(n):
        for c in range(3):
            chan = imgs[i, :, :, c]
            hist = np.bincount(chan.ravel(), minlength=256)
            cdf = np.cumsum(hist)
            cdf_min = cdf[np.nonzero(hist)[0][0]]
            if cdf_min == total:
                out[i, :, :, c] = chan
                continue
            lut = _to_u8((cdf - cdf_min) * 255.0 / (total - cdf_min))
            out[i, :, :, c] = lut[chan]
    return out


def blend_apply(base: np.ndarray, transformed: np.ndarray, gamma: float) -> np.ndarray:
    """Mix a full-strength transform back toward the original at weight gamma."""
    gamma = _check_gamma(gamma)
    if base.shape != transformed.shape:
        raise ValueError(f"shape mismatch: {base.shape} vs {transformed.shape}")
    if gamma == 0.0:
        return base.copy()
    mixed = (1.0 - gamma) * base.astype(np.float64) + gamma * transformed.astype(np.float64)
    return _to_u8(mixed)


# ---------------------------------------------------------------------------
# dispatch


def apply_operation_batch(
    imgs: np.ndarray, kind: OperationKind, gamma: float, sign: int = 1
) -> np.ndarray:
    """Apply one operation at strength gamma to a batch of shape (N, H, W, 3).

    The sign flips the direction of the first eleven operations and is
    ignored by the rest.  gamma = 0 returns an unmodified copy.
    """
    _check_batch(imgs)
    gamma = _check_gamma(gamma)
    sign = _check_sign(sign)
    kind = OperationKind(kind)
    if gamma == 0.0:
        return imgs.copy()
    n, h, w, _ = imgs.shape

    if kind is OperationKind.TRANSLATE_X:
        dx = int(_round_half_away(sign * gamma / 2.0 * w))
        return _translate(imgs, dx, 0)
    if kind is OperationKind.TRANSLATE_Y:
        dy = int(_round_half_away(sign * gamma / 2.0 * h))
        return _translate(imgs, 0, dy)
    if kind is OperationKind.SHEAR_X:
        factor = math.tan(math.radians(45.0 * gamma)) * sign
        return _affine_sample(imgs, _inv_shear_x(factor, h, w))
    if kind is OperationKind.SHEAR_Y:
        factor = math.tan(math.radians(45.0 * gamma)) * sign
        return _affine_sample(imgs, _inv_shear_y(factor, h, w))
    if kind is OperationKind.SCALE:
        factor = 1.0 + sign * gamma / 2.0
        return _affine_sample(imgs, _inv_scale(factor, h, w))
    if kind is OperationKind.ROTATE:
        radians = math.radians(60.0 * gamma) * sign
        return _affine_sample(imgs, _inv_rotate(radians, h, w))
    if kind is OperationKind.HUE:
        return _hue_shift(imgs, sign * gamma / 2.0)
    if kind is OperationKind.BRIGHTNESS:
        factor = 1.0 + 0.9 * gamma * sign
        return _to_u8(imgs.astype(np.float64) * factor)
    if kind is OperationKind.SHARPNESS:
        factor = 1.0 + 0.9 * gamma * sign
        blur = _box_blur(imgs)
        return _to_u8(blur + factor * (imgs.astype(np.float64) - blur))
    if kind is OperationKind.CONTRAST:
        factor = 1.0 + 0.9 * gamma * sign
        luma = imgs.astype(np.float64) @ _LUMA
        pivot = luma.mean(axis=(1, 2)).reshape(n, 1, 1, 1)
        return _to_u8(pivot + factor * (imgs.astype(np.float64) - pivot))
    if kind is OperationKind.SATURATION:
        factor = 1.0 + 0.9 * gamma * sign
        gray = (imgs.astype(np.float64) @ _LUMA)[..., None]
        return _to_u8(gray + factor * (imgs.astype(np.float64) - gray))
    if kind is OperationKind.SOLARIZE:
        threshold = 255.0 * (1.0 - gamma / 2.0)
        return np.where(imgs.astype(np.float64) < threshold, imgs, 255 - imgs)
    if kind is OperationKind.POSTERIZE:
        bits = int(np.clip(_round_half_away(8.0 * (1.0 - gamma / 2.0)), 1, 8))
        shift = 8 - bits
        mask = np.uint8((0xFF >> shift) << shift)
        return imgs & mask
    if kind is OperationKind.AUTOCONTRAST:
        return blend_apply(imgs, _autocontrast_full(imgs), gamma)
    if kind is OperationKind.EQUALIZE:
        return blend_apply(imgs, _equalize_full(imgs), gamma)
    raise ValueError(f"unknown operation kind: {kind!r}")


def apply_operation(img: np.ndarray, kind: OperationKind, gamma: float, sign: int = 1) -> np.ndarray:
    """Single-image wrapper around apply_operation_batch."""
    if not isinstance(img, np.ndarray) or img.ndim != 3:
        raise ValueError(f"expected image shape (H, W, 3), got {getattr(img, 'shape', None)}")
    return apply_operation_batch(img[None], kind, gamma, sign)[0]


def apply_plan(img: np.ndarray, plan: list[PlanStep] | tuple[PlanStep, ...]) -> np.ndarray:
    """Apply a drawn augmentation plan, one operation after another.

    Plans must not repeat an operation kind.
    """
    kinds = [step.kind for step in plan]
    if len(set(kinds)) != len(kinds):
        raise ValueError(f"plan repeats an operation kind: {[k.value for k in kinds]}")
    out = img
    for step in plan:
        out = apply_operation(out, step.kind, step.gamma, step.sign)
    if not plan:
        out = img.copy()
    return out
