"""Content library, request popularity and cache-hit accounting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["FileLibrary", "zipf_popularity", "hit_probability"]


def zipf_popularity(file_count: int, gamma: float) -> np.ndarray:
    """Zipf request probabilities ``l^-gamma / sum_p p^-gamma``.

    ``gamma = 0`` degenerates to the uniform distribution.  The returned
    vector sums to one and is nonincreasing in the file index.
    """
    if file_count < 1:
        raise ValueError(f"file_count must be >= 1, got {file_count}")
    if gamma < 0.0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    ranks = np.arange(1, file_count + 1, dtype=float)
    w = ranks**-gamma
    return w / w.sum()


@dataclass(frozen=True)
class FileLibrary:
    """A ranked content library with per-file target rates.

    Attributes:
        file_count: library size F; files are ranked by popularity.
        gamma: Zipf skew of the request distribution.
        rates: target rate per file (bits/s/Hz), one entry per file.
    """

    file_count: int
    gamma: float
    rates: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.file_count < 1:
            raise ValueError(f"file_count must be >= 1, got {self.file_count}")
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        if len(self.rates) != self.file_count:
            raise ValueError(
                f"need one rate per file: got {len(self.rates)} rates for "
                f"{self.file_count} files"
            )
        if any(r <= 0.0 for r in self.rates):
            raise ValueError("target rates must be positive")
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))

    @classmethod
    def with_equal_rates(cls, file_count: int, gamma: float, rate: float = 1.0) -> "FileLibrary":
        """Library whose files all share one target rate."""
        return cls(file_count=file_count, gamma=gamma, rates=(rate,) * file_count)

    @property
    def popularity(self) -> np.ndarray:
        """Zipf request probabilities, most popular first."""
        return zipf_popularity(self.file_count, self.gamma)

    @property
    def eps(self) -> np.ndarray:
        """Per-file SINR decoding thresholds ``2^rate - 1``."""
        return np.exp2(np.asarray(self.rates)) - 1.0

    def popularity_head(self, count: int) -> np.ndarray:
        """Request probabilities of the ``count`` most popular files."""
        if not 0 <= count <= self.file_count:
            raise ValueError(f"count must lie in [0, {self.file_count}], got {count}")
        return self.popularity[:count]


def hit_probability(popularity, decode_failure) -> float:
    """Cache hit probability ``sum_i popularity[i] (1 - decode_failure[i])``.

    ``popularity`` holds the request probabilities of the pushed files (a
    prefix of the library; it need not sum to one) and ``decode_failure``
    the matching per-file failure probabilities.  Lengths must agree; the
    single-message baseline is the one-element case.
    """
    pop = np.asarray(popularity, dtype=float)
    fail = np.asarray(decode_failure, dtype=float)
    if pop.shape != fail.shape or pop.ndim != 1:
        raise ValueError(f"shape mismatch: popularity {pop.shape}, decode_failure {fail.shape}")
    if np.any(pop < 0.0) or pop.sum() > 1.0 + 1e-9:
        raise ValueError("popularity entries must be nonnegative and sum to at most 1")
    if np.any(fail < 0.0) or np.any(fail > 1.0):
        raise ValueError("decode_failure entries must be probabilities")
    return float(np.dot(pop, 1.0 - fail))
