"""Box-Cox power transform, its inverse, and threshold mapping.

The latent-variable model works on the transformed scale ``v = forward(z)``.
A ``shift`` constant supports data with negative support (the transform is
applied to ``z - shift``); it is a fixed user-supplied constant, never
estimated.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["BoxCox"]

# |kappa| below this is evaluated on the log branch to avoid cancellation
_KAPPA_EPS = 1e-8


@dataclass(frozen=True)
class BoxCox:
    """Power transform ((z - shift)^kappa - 1)/kappa, log(z - shift) at kappa = 0.

    The transformed range is (-1/kappa, inf) for kappa > 0, (-inf, -1/kappa)
    for kappa < 0 and the whole real line for kappa = 0.
    """

    kappa: float
    shift: float = 0.0

    @property
    def is_log(self):
        return abs(self.kappa) < _KAPPA_EPS

    @property
    def range_low(self):
        """Infimum of the transformed range."""
        if self.kappa >= _KAPPA_EPS:
            return -1.0 / self.kappa
        return -np.inf

    @property
    def range_high(self):
        """Supremum of the transformed range."""
        if self.kappa <= -_KAPPA_EPS:
            return -1.0 / self.kappa
        return np.inf

    def forward(self, z):
        """Transform values ``z > shift``.

        Raises
        ------
        ValueError
            If any value is at or below the shift constant.
        """
        z = np.asarray(z, dtype=float)
        if np.any(z <= self.shift):
            raise ValueError(f"values must exceed the shift constant {self.shift}")
        w = z - self.shift
        if self.is_log:
            out = np.log(w)
        else:
            # expm1 form keeps full precision when kappa*log(w) is small
            out = np.expm1(self.kappa * np.log(w)) / self.kappa
        return out if out.ndim else float(out)

    def inverse(self, v):
        """Invert the transform; input must lie strictly inside the range.

        Raises
        ------
        ValueError
            If any value falls outside the transformed range (callers decide
            the policy; the posterior sampler redraws or clamps instead).
        """
        v = np.asarray(v, dtype=float)
        if np.any(v <= self.range_low) or np.any(v >= self.range_high):
            raise ValueError(
                f"value outside transformed range ({self.range_low}, {self.range_high})"
            )
        return self._inverse_unchecked(v)

    def _inverse_unchecked(self, v):
        v = np.asarray(v, dtype=float)
        if self.is_log:
            out = np.exp(v) + self.shift
        else:
            with np.errstate(divide="ignore"):
                out = np.exp(np.log1p(self.kappa * v) / self.kappa) + self.shift
        return out if out.ndim else float(out)

    def transformed_cut(self, c):
        """Map a threshold to the transformed scale, with limit conventions.

        ``c == shift`` (the lower support endpoint, 0 for unshifted data) maps
        to the range infimum; ``c == inf`` maps to the range supremum.
        """
        if np.isinf(c):
            return self.range_high
        if c <= self.shift:
            return self.range_low
        return float(self.forward(c))

    def transformed_cuts(self, thresholds):
        """All G+1 cut points on the transformed scale.

        The bottom entry is the transformed-range infimum (the support
        endpoint: 0 for unshifted data, the shift constant otherwise) and the
        top entry is the range supremum.
        """
        out = np.empty(thresholds.cuts.size + 2)
        out[0] = self.range_low
        out[-1] = self.range_high
        w = thresholds.cuts - self.shift
        if np.any(w <= 0):
            raise ValueError(f"thresholds must exceed the shift constant {self.shift}")
        if self.is_log:
            out[1:-1] = np.log(w)
        else:
            out[1:-1] = np.expm1(self.kappa * np.log(w)) / self.kappa
        return out
