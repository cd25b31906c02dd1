"""Pixel-level oracles for the operation pool.

Each oracle below recomputes the expected output with plain Python loops or
an independent formulation, then demands exact uint8 equality from the
vectorised implementation.
"""

from __future__ import annotations

import colorsys
import math

import numpy as np
import pytest

from ctrlaug.augpool import (
    ALL_KINDS,
    SIGNED_KINDS,
    OperationKind,
    PlanStep,
    apply_operation,
    apply_operation_batch,
    apply_plan,
    blend_apply,
)


def random_images(n, h=32, w=32, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, (n, h, w, 3), dtype=np.uint8)


def round_half_away(v):
    return math.floor(v + 0.5) if v >= 0 else math.ceil(v - 0.5)


def clip8(v):
    return min(max(round_half_away(v), 0), 255)


# ---------------------------------------------------------------------------
# identity and hygiene


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_zero_strength_is_bit_exact_identity(kind):
    for img in random_images(8, seed=3):
        out = apply_operation(img, kind, 0.0)
        assert np.array_equal(out, img)
        assert out.dtype == np.uint8
        assert out is not img


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_output_contract(kind):
    img = random_images(1, seed=11)[0]
    for gamma in (0.25, 0.5, 1.0):
        for sign in (1, -1):
            out = apply_operation(img, kind, gamma, sign)
            assert out.shape == img.shape
            assert out.dtype == np.uint8


def test_rejects_bad_strength_and_sign():
    img = random_images(1)[0]
    with pytest.raises(ValueError):
        apply_operation(img, OperationKind.ROTATE, -0.1)
    with pytest.raises(ValueError):
        apply_operation(img, OperationKind.ROTATE, 1.5)
    with pytest.raises(ValueError):
        apply_operation(img, OperationKind.ROTATE, float("nan"))
    with pytest.raises(ValueError):
        apply_operation(img, OperationKind.ROTATE, 0.5, sign=0)


def test_rejects_zero_sized_and_wrong_dtype():
    with pytest.raises(ValueError):
        apply_operation(np.zeros((0, 32, 3), dtype=np.uint8), OperationKind.HUE, 0.5)
    with pytest.raises(ValueError):
        apply_operation(np.zeros((32, 0, 3), dtype=np.uint8), OperationKind.HUE, 0.5)
    with pytest.raises(TypeError):
        apply_operation(np.zeros((8, 8, 3), dtype=np.float32), OperationKind.HUE, 0.5)
    with pytest.raises(ValueError):
        apply_operation(np.zeros((8, 8, 1), dtype=np.uint8), OperationKind.HUE, 0.5)


def test_batch_matches_single_image_path():
    imgs = random_images(6, seed=21)
    for kind in ALL_KINDS:
        batch = apply_operation_batch(imgs, kind, 0.7, -1 if kind in SIGNED_KINDS else 1)
        for i in range(len(imgs)):
            single = apply_operation(imgs[i], kind, 0.7, -1 if kind in SIGNED_KINDS else 1)
            assert np.array_equal(batch[i], single), kind


# ---------------------------------------------------------------------------
# exact pixel oracles


def test_solarize_oracle():
    for gamma in (0.2, 0.5, 1.0):
        threshold = 255.0 * (1.0 - gamma / 2.0)
        for img in random_images(20, seed=5):
            out = apply_operation(img, OperationKind.SOLARIZE, gamma)
            expect = np.empty_like(img)
            for y in range(img.shape[0]):
                for x in range(img.shape[1]):
                    for c in range(3):
                        v = int(img[y, x, c])
                        expect[y, x, c] = v if v < threshold else 255 - v
            assert np.array_equal(out, expect)


def test_solarize_full_strength_threshold_is_mid_range():
    img = np.arange(256, dtype=np.uint8).reshape(16, 16, 1).repeat(3, axis=2)
    out = apply_operation(img, OperationKind.SOLARIZE, 1.0)
    flat_in = img[..., 0].ravel()
    flat_out = out[..., 0].ravel()
    # threshold 127.5: 0..127 kept, 128..255 inverted
    assert np.array_equal(flat_out[:128], flat_in[:128])
    assert np.array_equal(flat_out[128:], 255 - flat_in[128:])


def test_posterize_oracle():
    for gamma, bits in ((1.0, 4), (0.5, 6), (0.25, 7), (0.75, 5)):
        mask = ((0xFF >> (8 - bits)) << (8 - bits)) & 0xFF
        for img in random_images(20, seed=6):
            out = apply_operation(img, OperationKind.POSTERIZE, gamma)
            expect = np.empty_like(img)
            for y in range(img.shape[0]):
                for x in range(img.shape[1]):
                    for c in range(3):
                        expect[y, x, c] = img[y, x, c] & mask
            assert np.array_equal(out, expect)


def test_translate_x_impulse_oracle():
    h = w = 32
    for gamma in (0.2, 0.5, 1.0):
        for sign in (1, -1):
            img = np.zeros((h, w, 3), dtype=np.uint8)
            img[13, 17, :] = 255
            dx = round_half_away(sign * gamma / 2.0 * w)
            out = apply_operation(img, OperationKind.TRANSLATE_X, gamma, sign)
            expect = np.zeros_like(img)
            if 0 <= 17 + dx < w:
                expect[13, 17 + dx, :] = 255
            assert np.array_equal(out, expect), (gamma, sign)


def test_translate_y_impulse_oracle():
    h = w = 32
    for gamma in (0.3, 1.0):
        for sign in (1, -1):
            img = np.zeros((h, w, 3), dtype=np.uint8)
            img[5, 9, :] = 200
            dy = round_half_away(sign * gamma / 2.0 * h)
            out = apply_operation(img, OperationKind.TRANSLATE_Y, gamma, sign)
            expect = np.zeros_like(img)
            if 0 <= 5 + dy < h:
                expect[5 + dy, 9, :] = 200
            assert np.array_equal(out, expect), (gamma, sign)


def test_translate_moves_whole_pixels_only():
    imgs = random_images(5, seed=7)
    out = apply_operation_batch(imgs, OperationKind.TRANSLATE_X, 0.37, 1)
    dx = round_half_away(0.37 / 2.0 * 32)
    assert np.array_equal(out[:, :, dx:, :], imgs[:, :, : 32 - dx, :])
    assert np.all(out[:, :, :dx, :] == 0)


def test_blend_apply_oracle():
    rng = np.random.default_rng(8)
    for _ in range(20):
        base = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        other = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        gamma = float(rng.uniform(0, 1))
        out = blend_apply(base, other, gamma)
        expect = np.empty_like(base)
        for y in range(16):
            for x in range(16):
                for c in range(3):
                    expect[y, x, c] = clip8((1 - gamma) * base[y, x, c] + gamma * other[y, x, c])
        assert np.array_equal(out, expect)


def test_blend_autocontrast_two_level_example():
    # two-level image {0, 200}: full stretch maps 200 to 255, half blend to 228
    img = np.zeros((8, 8, 3), dtype=np.uint8)
    img[::2] = 200
    out = apply_operation(img, OperationKind.AUTOCONTRAST, 0.5)
    assert set(np.unique(out)) == {0, 228}


def test_brightness_oracle():
    for sign in (1, -1):
        for img in random_images(6, seed=9):
            gamma = 0.6
            f = 1.0 + 0.9 * gamma * sign
            out = apply_operation(img, OperationKind.BRIGHTNESS, gamma, sign)
            expect = np.empty_like(img)
            for y in range(img.shape[0]):
                for x in range(img.shape[1]):
                    for c in range(3):
                        expect[y, x, c] = clip8(img[y, x, c] * f)
            assert np.array_equal(out, expect)


def test_contrast_oracle():
    for sign in (1, -1):
        img = random_images(1, seed=10)[0]
        gamma = 0.8
        f = 1.0 + 0.9 * gamma * sign
        luma = 0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2]
        pivot = luma.astype(np.float64).mean()
        out = apply_operation(img, OperationKind.CONTRAST, gamma, sign)
        expect = np.empty_like(img)
        for y in range(img.shape[0]):
            for x in range(img.shape[1]):
                for c in range(3):
                    expect[y, x, c] = clip8(pivot + f * (img[y, x, c] - pivot))
        assert np.array_equal(out, expect)


def test_saturation_oracle():
    for sign in (1, -1):
        img = random_images(1, seed=12)[0]
        gamma = 1.0
        f = 1.0 + 0.9 * gamma * sign
        out = apply_operation(img, OperationKind.SATURATION, gamma, sign)
        expect = np.empty_like(img)
        for y in range(img.shape[0]):
            for x in range(img.shape[1]):
                g = 0.299 * img[y, x, 0] + 0.587 * img[y, x, 1] + 0.114 * img[y, x, 2]
                for c in range(3):
                    expect[y, x, c] = clip8(g + f * (img[y, x, c] - g))
        assert np.array_equal(out, expect)


def test_sharpness_oracle():
    img = random_images(1, h=12, w=12, seed=13)[0]
    gamma, sign = 0.7, 1
    f = 1.0 + 0.9 * gamma * sign
    h, w = img.shape[:2]
    blur = np.zeros((h, w, 3))
    for y in range(h):
        for x in range(w):
            for c in range(3):
                s = 0.0
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        yy = min(max(y + dy, 0), h - 1)
                        xx = min(max(x + dx, 0), w - 1)
                        s += img[yy, xx, c]
                blur[y, x, c] = s / 9.0
    out = apply_operation(img, OperationKind.SHARPNESS, gamma, sign)
    expect = np.empty_like(img)
    for y in range(h):
        for x in range(w):
            for c in range(3):
                expect[y, x, c] = clip8(blur[y, x, c] + f * (img[y, x, c] - blur[y, x, c]))
    assert np.array_equal(out, expect)


def test_hue_oracle_against_colorsys():
    img = random_images(1, h=8, w=8, seed=14)[0]
    for sign in (1, -1):
        gamma = 0.6
        out = apply_operation(img, OperationKind.HUE, gamma, sign)
        expect = np.empty_like(img)
        for y in range(8):
            for x in range(8):
                r, g, b = (float(v) / 255.0 for v in img[y, x])
                hh, ss, vv = colorsys.rgb_to_hsv(r, g, b)
                hh = (hh + sign * gamma / 2.0) % 1.0
                rr, gg, bb = colorsys.hsv_to_rgb(hh, ss, vv)
                expect[y, x] = [clip8(rr * 255.0), clip8(gg * 255.0), clip8(bb * 255.0)]
        assert np.array_equal(out, expect)


def test_hue_full_strength_signs_agree():
    # a half-turn of the hue circle is the same in both directions
    img = random_images(1, seed=15)[0]
    plus = apply_operation(img, OperationKind.HUE, 1.0, 1)
    minus = apply_operation(img, OperationKind.HUE, 1.0, -1)
    assert np.array_equal(plus, minus)


def test_autocontrast_oracle():
    img = random_images(1, seed=16)[0]
    img[..., 2] = 77  # constant channel must pass through unchanged
    gamma = 1.0
    out = apply_operation(img, OperationKind.AUTOCONTRAST, gamma)
    expect = np.empty_like(img)
    for c in range(3):
        chan = img[..., c].astype(np.float64)
        lo, hi = chan.min(), chan.max()
        if hi <= lo:
            expect[..., c] = img[..., c]
            continue
        for y in range(img.shape[0]):
            for x in range(img.shape[1]):
                expect[y, x, c] = clip8((chan[y, x] - lo) * 255.0 / (hi - lo))
    assert np.array_equal(out, expect)


def test_equalize_oracle():
    img = random_images(1, seed=17)[0]
    gamma = 1.0
    out = apply_operation(img, OperationKind.EQUALIZE, gamma)
    h, w = img.shape[:2]
    total = h * w
    expect = np.empty_like(img)
    for c in range(3):
        hist = [0] * 256
        for y in range(h):
            for x in range(w):
                hist[img[y, x, c]] += 1
        cdf = 0
        cdf_table = []
        for v in range(256):
            cdf += hist[v]
            cdf_table.append(cdf)
        cdf_min = next(cdf_table[v] for v in range(256) if hist[v] > 0)
        for y in range(h):
            for x in range(w):
                v = img[y, x, c]
                if cdf_min == total:
                    expect[y, x, c] = v
                else:
                    expect[y, x, c] = clip8((cdf_table[v] - cdf_min) * 255.0 / (total - cdf_min))
    assert np.array_equal(out, expect)


def test_equalize_constant_image_unchanged():
    img = np.full((16, 16, 3), 93, dtype=np.uint8)
    out = apply_operation(img, OperationKind.EQUALIZE, 1.0)
    assert np.array_equal(out, img)


# ---------------------------------------------------------------------------
# geometric oracle: independent loop-based bilinear resampler


def bilinear_reference(img, inv):
    h, w = img.shape[:2]
    out = np.zeros_like(img)
    for yo in range(h):
        for xo in range(w):
            xi = inv[0][0] * xo + inv[0][1] * yo + inv[0][2]
            yi = inv[1][0] * xo + inv[1][1] * yo + inv[1][2]
            x0, y0 = math.floor(xi), math.floor(yi)
            fx, fy = xi - x0, yi - y0
            for c in range(3):
                acc = 0.0
                for dy, dx, wgt in (
                    (0, 0, (1 - fx) * (1 - fy)),
                    (0, 1, fx * (1 - fy)),
                    (1, 0, (1 - fx) * fy),
                    (1, 1, fx * fy),
                ):
                    yy, xx = y0 + dy, x0 + dx
                    if 0 <= yy < h and 0 <= xx < w:
                        acc += wgt * img[yy, xx, c]
                out[yo, xo, c] = clip8(acc)
    return out


def center(h, w):
    return (w - 1) / 2.0, (h - 1) / 2.0


@pytest.mark.parametrize("sign", [1, -1])
def test_rotate_oracle(sign):
    img = random_images(1, h=16, w=16, seed=18)[0]
    gamma = 0.5
    theta = math.radians(60.0 * gamma) * sign
    cx, cy = center(16, 16)
    c, s = math.cos(theta), math.sin(theta)
    inv = [[c, s, cx - c * cx - s * cy], [-s, c, cy + s * cx - c * cy]]
    out = apply_operation(img, OperationKind.ROTATE, gamma, sign)
    assert np.array_equal(out, bilinear_reference(img, inv))


@pytest.mark.parametrize("sign", [1, -1])
def test_shear_x_oracle(sign):
    img = random_images(1, h=16, w=16, seed=19)[0]
    gamma = 0.8
    f = math.tan(math.radians(45.0 * gamma)) * sign
    cx, cy = center(16, 16)
    inv = [[1.0, -f, f * cy], [0.0, 1.0, 0.0]]
    out = apply_operation(img, OperationKind.SHEAR_X, gamma, sign)
    assert np.array_equal(out, bilinear_reference(img, inv))


@pytest.mark.parametrize("sign", [1, -1])
def test_shear_y_oracle(sign):
    img = random_images(1, h=16, w=16, seed=20)[0]
    gamma = 1.0
    f = math.tan(math.radians(45.0 * gamma)) * sign
    cx, cy = center(16, 16)
    inv = [[1.0, 0.0, 0.0], [-f, 1.0, f * cx]]
    out = apply_operation(img, OperationKind.SHEAR_Y, gamma, sign)
    assert np.array_equal(out, bilinear_reference(img, inv))


@pytest.mark.parametrize("sign,factor", [(1, 1.5), (-1, 0.5)])
def test_scale_oracle(sign, factor):
    img = random_images(1, h=16, w=16, seed=22)[0]
    gamma = 1.0
    cx, cy = center(16, 16)
    s = 1.0 / factor
    inv = [[s, 0.0, cx * (1.0 - s)], [0.0, s, cy * (1.0 - s)]]
    out = apply_operation(img, OperationKind.SCALE, gamma, sign)
    assert np.array_equal(out, bilinear_reference(img, inv))


def test_scale_preserves_center_pixel():
    img = random_images(1, h=17, w=17, seed=23)[0]
    out = apply_operation(img, OperationKind.SCALE, 1.0, 1)
    assert np.array_equal(out[8, 8], img[8, 8])


def test_rotate_small_angle_keeps_center():
    img = random_images(1, h=17, w=17, seed=24)[0]
    out = apply_operation(img, OperationKind.ROTATE, 0.3, 1)
    assert np.array_equal(out[8, 8], img[8, 8])


# ---------------------------------------------------------------------------
# plans


def test_apply_plan_order_matters():
    img = random_images(1, seed=25)[0]
    a = PlanStep(OperationKind.SOLARIZE, 1.0)
    b = PlanStep(OperationKind.BRIGHTNESS, 1.0, 1)
    ab = apply_plan(img, [a, b])
    ba = apply_plan(img, [b, a])
    assert not np.array_equal(ab, ba)


def test_apply_plan_rejects_duplicate_kinds():
    img = random_images(1, seed=26)[0]
    plan = [PlanStep(OperationKind.HUE, 0.5), PlanStep(OperationKind.HUE, 0.2)]
    with pytest.raises(ValueError):
        apply_plan(img, plan)


def test_apply_plan_empty_is_copy():
    img = random_images(1, seed=27)[0]
    out = apply_plan(img, [])
    assert np.array_equal(out, img)
    assert out is not img


def test_apply_plan_composes():
    img = random_images(1, seed=28)[0]
    plan = [
        PlanStep(OperationKind.ROTATE, 0.4, -1),
        PlanStep(OperationKind.SOLARIZE, 0.6),
    ]
    manual = apply_operation(
        apply_operation(img, OperationKind.ROTATE, 0.4, -1), OperationKind.SOLARIZE, 0.6
    )
    assert np.array_equal(apply_plan(img, plan), manual)
