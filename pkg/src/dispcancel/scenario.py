"""The physical set-up shared by the analytic and Monte Carlo paths."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .filters import Detector, FilterPair
from .spectra import JointGaussianSource, SpectralGrid


@dataclass(frozen=True)
class Scenario:
    source: JointGaussianSource
    filters: FilterPair = field(default_factory=FilterPair)
    detector: Detector = field(default_factory=Detector)
    grid: Optional[SpectralGrid] = None

    def resolved_grid(self) -> SpectralGrid:
        """The configured grid, or the smallest adequate one."""
        if self.grid is not None:
            return self.grid
        from .analytic import default_grid

        return default_grid(self.source, self.detector)

    def with_betas(self, beta_s: float, beta_r: float) -> "Scenario":
        return replace(self, filters=self.filters.with_betas(beta_s, beta_r))
