"""
Image quality metrics.
PSNR with peak 1 (capped for identical images) and SSIM over uniform windows.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from app.config import PSNR_CAP, SSIM_C1, SSIM_C2, SSIM_WINDOW
from app.core.image import as_image, check_same_shape


def mse(x, ref):
    x, ref = as_image(x), as_image(ref, "reference")
    check_same_shape(x, ref)
    return float(np.mean((x - ref) ** 2))


def psnr(x, ref):
    """10*log10(1/MSE); returns PSNR_CAP when the images are identical."""
    err = mse(x, ref)
    if err == 0.0:
        return PSNR_CAP
    return float(min(PSNR_CAP, 10.0 * np.log10(1.0 / err)))


def ssim(x, ref, window=SSIM_WINDOW):
    x, ref = as_image(x), as_image(ref, "reference")
    check_same_shape(x, ref)
    win = min(window, *x.shape)

    wx = sliding_window_view(x, (win, win))
    wy = sliding_window_view(ref, (win, win))
    axes = (-2, -1)
    mu_x = wx.mean(axis=axes)
    mu_y = wy.mean(axis=axes)
    var_x = (wx * wx).mean(axis=axes) - mu_x * mu_x
    var_y = (wy * wy).mean(axis=axes) - mu_y * mu_y
    cov = (wx * wy).mean(axis=axes) - mu_x * mu_y

    num = (2 * mu_x * mu_y + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float(np.clip(np.mean(num / den), -1.0, 1.0))
