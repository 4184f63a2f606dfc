"""Domain-tagged complex baseband signals."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Domain(str, Enum):
    TIME = "time"
    FREQUENCY = "frequency"
    AFFINE = "affine"
    DELAY_DOPPLER = "delay_doppler"


@dataclass(frozen=True)
class ComplexSignal:
    """A 1-D block of complex samples tagged with the domain it lives in.

    Domain transitions happen only through the transform/modulator
    operations; everything else treats the signal as opaque.
    """

    samples: np.ndarray
    domain: Domain

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1:
            raise ValueError(f"expected a 1-D sample vector, got shape {samples.shape}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "domain", Domain(self.domain))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def length(self) -> int:
        return self.samples.shape[0]


def expect(x: ComplexSignal, domain: Domain, length: int | None = None) -> np.ndarray:
    """Validate domain/length of a signal and return its sample array."""
    if not isinstance(x, ComplexSignal):
        raise TypeError(f"expected ComplexSignal, got {type(x).__name__}")
    if x.domain is not domain:
        raise ValueError(f"expected a {domain.value}-domain signal, got {x.domain.value}")
    if length is not None and len(x) != length:
        raise ValueError(f"expected length {length}, got {len(x)}")
    return x.samples
