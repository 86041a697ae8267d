"""Exception hierarchy shared by all engine modules."""

from __future__ import annotations


class FinslerError(Exception):
    """Base class for all engine-specific errors."""


class ZeroVelocity(FinslerError):
    """A tangent vector fell below the minimum-speed floor."""


class ChartDomain(FinslerError):
    """A point left the valid region of the metric's coordinate chart."""


class NotPositiveDefinite(FinslerError):
    """The fundamental tensor failed the definiteness test."""


class GridTooCoarse(FinslerError):
    """A curve segment has too few nodes for the requested stencil."""


class NoConvergence(FinslerError):
    """Iterative solver exhausted its budget.

    Carries the best iterate and a diagnostics dict so callers can inspect
    how far the solve got.
    """

    def __init__(self, message, best=None, diagnostics=None):
        super().__init__(message)
        self.best = best
        self.diagnostics = diagnostics or {}


class NotAGeodesic(FinslerError):
    """An operation requiring a verified geodesic was given something else."""


class BadRegime(FinslerError):
    """A p-exponent outside the regime an operation is defined for."""


class ConfigError(FinslerError):
    """Malformed experiment configuration."""
