"""Shared helpers: random band-limited fields and brute-force oracles."""

import numpy as np
import pytest

from lmhd import spectral as sp
from lmhd.spectral import SpectralField, VectorField


def random_real_field(grid, seed, band=None):
    """Random real field; optionally truncated to |k| <= band, zero mean."""
    rng = np.random.default_rng(seed)
    f = sp.forward_transform(rng.standard_normal(grid.shape), grid)
    keep = grid.kmag > 0.0
    if band is not None:
        keep &= grid.kmag <= band
    return SpectralField(grid, f.coeffs * keep)


def random_component_banded(grid, rng, band_per_axis):
    """Random real field with |k_j| <= band_per_axis on every axis."""
    f = sp.forward_transform(rng.standard_normal(grid.shape), grid)
    keep = np.ones(grid.shape, dtype=bool)
    for j in range(grid.dim):
        keep &= np.abs(grid.kmesh[j]) <= band_per_axis
    keep &= grid.kmag > 0.0
    return SpectralField(grid, f.coeffs * keep)


def random_solenoidal(grid, seed, band_per_axis=None):
    rng = np.random.default_rng(seed)
    band = band_per_axis if band_per_axis is not None else grid.points // 3 - 1
    comps = tuple(random_component_banded(grid, rng, band) for _ in range(grid.dim))
    return sp.leray_project(VectorField(comps))


def random_annulus_field(grid, j, seed):
    """Random real field supported in the open annulus 2^(j-1) < |k| < 2^(j+1)."""
    from lmhd.lpaley import annulus_mask

    rng = np.random.default_rng(seed)
    f = sp.forward_transform(rng.standard_normal(grid.shape), grid)
    return SpectralField(grid, f.coeffs * annulus_mask(grid, j))


def dft_oracle(samples):
    """Direct discrete Fourier sum, O(n^2) over mode/sample pairs."""
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.shape[0]
    dim = samples.ndim
    k1d = np.fft.fftfreq(n, d=1.0 / n)
    coeffs = np.zeros(samples.shape, dtype=np.complex128)
    x1d = 2.0 * np.pi * np.arange(n) / n
    for kidx in np.ndindex(*samples.shape):
        k = np.array([k1d[i] for i in kidx])
        phase = np.zeros(samples.shape)
        for d in range(dim):
            shape = [1] * dim
            shape[d] = n
            phase = phase + k[d] * x1d.reshape(shape)
        coeffs[kidx] = np.sum(samples * np.exp(-1j * phase)) / samples.size
    return coeffs


def convolution_oracle(f_coeffs, g_coeffs, grid):
    """Exact spectral coefficients of the pointwise product f*g.

    Sums f_hat(p) g_hat(q) over every grid pair with p + q = k as integer
    vectors (no aliasing), for k in the grid's representable range.
    """
    n = grid.points
    k1d = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    out = np.zeros(grid.shape, dtype=np.complex128)
    index_of = {int(k): i for i, k in enumerate(k1d)}
    nonzero_f = np.argwhere(np.abs(f_coeffs) > 0)
    nonzero_g = np.argwhere(np.abs(g_coeffs) > 0)
    for pidx in nonzero_f:
        p = np.array([k1d[i] for i in pidx])
        fp = f_coeffs[tuple(pidx)]
        for qidx in nonzero_g:
            q = np.array([k1d[i] for i in qidx])
            k = p + q
            if any(int(kj) not in index_of for kj in k):
                continue
            kidx = tuple(index_of[int(kj)] for kj in k)
            out[kidx] += fp * g_coeffs[tuple(qidx)]
    return out


@pytest.fixture
def grid16():
    return sp.make_grid(2, 16)


@pytest.fixture
def grid32():
    return sp.make_grid(2, 32)
