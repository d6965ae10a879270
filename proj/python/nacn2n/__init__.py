# SPDX-License-Identifier: Apache-2.0
"""Noise2Noise denoising with parameter-shared module chains."""

from ._core import (
    Chain,
    NoiseSpec,
    corrupt,
    load_chain,
    phantom,
    psnr,
    run_cli,
    ssim,
)

__all__ = ["Chain", "NoiseSpec", "corrupt", "load_chain", "phantom", "psnr", "run_cli", "ssim"]
