"""Discrete Fourier transform over finite abelian groups.

Characters of Z/n1 x ... x Z/nk factor through the per-axis roots of unity,
so the transform is a multidimensional FFT over the reshaped value array.
The forward transform carries the expectation normalization

    fhat(xi) = (1/N) sum_x f(x) e(-xi.x),

and inversion is a plain sum, f(x) = sum_xi fhat(xi) e(xi.x).  Each axis is
handled by a mixed-radix FFT with a Bluestein fallback for large prime
lengths, so the cost is O(N log N) for any factor orders.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpecMismatch
from .groups import GroupFunction, GroupSpec


@dataclass
class DualFunction:
    """Dense complex function on the dual group, row-major over dual indices."""

    owner: GroupSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.owner.order,):
            raise ValueError("dual value vector has wrong length")


def _as_grid(spec: GroupSpec, flat: np.ndarray) -> np.ndarray:
    return flat.reshape(spec.orders)


def dft(f: GroupFunction) -> DualFunction:
    """Fourier coefficients fhat(xi) = E_x f(x) e(-xi.x)."""
    spec = f.owner
    grid = _as_grid(spec, f.values)
    out = np.fft.fftn(grid) / spec.order
    return DualFunction(spec, out.reshape(-1))


def idft(F: DualFunction) -> GroupFunction:
    """Fourier inversion f(x) = sum_xi F(xi) e(xi.x)."""
    spec = F.owner
    grid = _as_grid(spec, F.values)
    out = np.fft.ifftn(grid) * spec.order
    return GroupFunction(spec, out.reshape(-1))


def dft_values(spec: GroupSpec, values: np.ndarray) -> np.ndarray:
    """Transform a raw value vector (or a batch with trailing group axis)."""
    values = np.asarray(values, dtype=np.complex128)
    batch = values.shape[:-1]
    grid = values.reshape(batch + spec.orders)
    axes = tuple(range(len(batch), len(batch) + spec.rank))
    out = np.fft.fftn(grid, axes=axes) / spec.order
    return out.reshape(batch + (spec.order,))


def convolve(f: GroupFunction, g: GroupFunction) -> GroupFunction:
    """Normalized convolution f*g(x) = E_y f(y) g(x-y).

    Computed through the transform, using that the transform of f*g is the
    pointwise product of the transforms.
    """
    if f.owner.orders != g.owner.orders:
        raise SpecMismatch("convolve: group mismatch")
    spec = f.owner
    fh = np.fft.fftn(_as_grid(spec, f.values))
    gh = np.fft.fftn(_as_grid(spec, g.values))
    out = np.fft.ifftn(fh * gh) / spec.order
    return GroupFunction(spec, out.reshape(-1))
