"""Acquisition schemes and the solver initial guess.

Reduced7 keeps the full 5-phase cycle at theta=0 (so their sum still
equals a widefield image) plus the phi=2*pi/5 image at each of the other
two orientations.  Reduced5 keeps only the first three phases at
theta=0, so its initial guess is the sum of three images rather than a
widefield equivalent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SchemeError
from .forward import AcquisitionData, bin_adjoint
from .illumination import (PAPER_THETAS_DEG, PatternSpec, make_pattern_spec,
                           paper_phases)
from .volume import Volume

SCHEME_NAMES = ("full15", "reduced7", "reduced5")


@dataclass(frozen=True)
class AcquisitionScheme:
    name: str
    pairs: tuple[tuple[float, float], ...]   # ordered (theta_deg, phi_rad)
    initial_guess_count: int                 # how many theta=0 images are summed


def scheme_pairs(name: str) -> AcquisitionScheme:
    """Ordered (theta, phi) lists, theta-major and phi-ascending."""
    name = name.lower()
    phases = paper_phases()
    t0, t1, t2 = PAPER_THETAS_DEG
    if name == "full15":
        pairs = tuple((t, p) for t in PAPER_THETAS_DEG for p in phases)
        return AcquisitionScheme(name, pairs, initial_guess_count=5)
    if name == "reduced7":
        pairs = tuple((t0, p) for p in phases) + ((t1, phases[1]), (t2, phases[1]))
        return AcquisitionScheme(name, pairs, initial_guess_count=5)
    if name == "reduced5":
        pairs = tuple((t0, p) for p in phases[:3]) + ((t1, phases[1]), (t2, phases[1]))
        return AcquisitionScheme(name, pairs, initial_guess_count=3)
    raise SchemeError(f"unknown scheme '{name}' (expected one of {SCHEME_NAMES})")


def build_specs(scheme: AcquisitionScheme, optics,
                um_factor: float | None = None,
                wm_over_um: float | None = None) -> list[PatternSpec]:
    kwargs = {}
    if um_factor is not None:
        kwargs["um_factor"] = um_factor
    if wm_over_um is not None:
        kwargs["wm_over_um"] = wm_over_um
    return [make_pattern_spec(optics, t, p, **kwargs) for t, p in scheme.pairs]


def initial_guess(data: AcquisitionData, scheme: AcquisitionScheme,
                  model) -> Volume:
    """Sum of the designated theta=0 images, block-replicated to the
    fine grid, clamped nonnegative, and rescaled by the least-squares
    scalar argmin_b sum_l ||g_l - b*A_l(u)||^2."""
    zero_theta = [i for i, s in enumerate(data.specs) if s.theta_deg == 0.0]
    if len(zero_theta) < scheme.initial_guess_count:
        raise SchemeError(
            f"scheme {scheme.name} needs {scheme.initial_guess_count} images at "
            f"theta=0, acquisition has {len(zero_theta)}")
    picked = zero_theta[:scheme.initial_guess_count]
    coarse_sum = np.zeros(data.images[0].grid.shape)
    for i in picked:
        coarse_sum += data.images[i].values
    fine = bin_adjoint(coarse_sum, data.binning) * float(data.binning ** 3)
    fine = np.maximum(fine, 0.0)

    predictions = model.forward_stack(fine)
    num = 0.0
    den = 0.0
    for meas, pred in zip(data.images, predictions):
        num += float(np.dot(meas.values.ravel(), pred.ravel()))
        den += float(np.dot(pred.ravel(), pred.ravel()))
    if den == 0.0:
        raise SchemeError("initial guess produces zero model prediction")
    return Volume(data.fine_grid, fine * (num / den))
