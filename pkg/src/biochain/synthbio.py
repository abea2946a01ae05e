"""Synthetic biometric channel for the protocol harness.

Real acquisition hardware and feature extraction are out of scope; this
module stands in for them with uniform random templates, an i.i.d.
bit-flip reacquisition channel, and the closed-form error rates the
channel implies, which the harness checks empirical runs against.

A user may enroll several biometrics (face, fingerprint, ...); each one
is a modality, indexed from 1. The modality count is a per-scenario
setting called `modalities` throughout the package.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .bits import as_bits, random_bits
from .ecc import LinearCode


@dataclass(frozen=True)
class NoiseModel:
    """Binary symmetric channel: each bit flips independently with
    probability flip_probability, constrained to [0, 0.5)."""

    flip_probability: float

    def __post_init__(self):
        p = self.flip_probability
        if not (0.0 <= p < 0.5):
            raise ValueError(f"flip probability must be in [0, 0.5), got {p}")


@dataclass(frozen=True, eq=False)
class BiometricTemplate:
    """An n-bit reference template for one biometric modality."""

    bits: np.ndarray
    modality_index: int = 1

    def __post_init__(self):
        object.__setattr__(self, "bits", as_bits(self.bits))
        if self.modality_index < 1:
            raise ValueError("modality index starts at 1")

    @property
    def n(self) -> int:
        return self.bits.size


def generate_template(rng: np.random.Generator, n: int,
                      modality_index: int = 1) -> BiometricTemplate:
    """Draw a uniform n-bit template."""
    if n < 1:
        raise ValueError(f"template length must be >= 1, got {n}")
    return BiometricTemplate(bits=random_bits(rng, n), modality_index=modality_index)


def acquire(template: BiometricTemplate, noise: NoiseModel,
            rng: np.random.Generator) -> BiometricTemplate:
    """Reacquire a template through the noisy channel."""
    flips = (rng.random(template.n) < noise.flip_probability).astype(np.uint8)
    return BiometricTemplate(bits=template.bits ^ flips,
                             modality_index=template.modality_index)


def features_extractor(acquisition) -> np.ndarray:
    """Map an acquisition to its feature vector.

    Identity in the synthetic model; kept as a separate hook so a real
    extractor can be plugged into the protocol flows. Accepts either a
    BiometricTemplate or a raw bit vector.
    """
    if isinstance(acquisition, BiometricTemplate):
        return acquisition.bits.copy()
    return as_bits(acquisition).copy()


@dataclass(frozen=True)
class ErrorRates:
    """Analytic rates for a (code, channel) pair.

    far is exactly 2^-k for perfect codes; for non-perfect codes the
    same number is only an upper bound and far_exact is False.
    """

    frr: float
    far: float
    far_exact: bool


def analytic_error_rates(code: LinearCode, noise: NoiseModel) -> ErrorRates:
    """Closed-form FRR/FAR for bounded-distance decoding on the BSC.

    A genuine user is rejected exactly when the channel flips more than
    t of the n bits, giving the binomial tail. A uniform impostor vector
    makes the decoder input uniform, so for a perfect code it lands in
    each witness's decoding region with probability 2^-k.
    """
    p = noise.flip_probability
    n, t = code.n, code.t
    frr = sum(comb(n, j) * p**j * (1.0 - p) ** (n - j) for j in range(t + 1, n + 1))
    far = 2.0 ** -code.k
    return ErrorRates(frr=frr, far=far, far_exact=code.is_perfect)
