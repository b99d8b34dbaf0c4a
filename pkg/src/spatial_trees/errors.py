"""Exception types raised across the package."""


class SpatialTreeError(ValueError):
    """Base class for all errors raised by spatial_trees."""


class EmptyCell(SpatialTreeError):
    """An operation needed at least one point and got none."""


class InvalidMatrix(SpatialTreeError):
    """Matrix is not square, not symmetric, or not finite."""


class DegenerateCell(SpatialTreeError):
    """Cell has zero spread, so no direction or ratio is defined."""


class DegenerateData(SpatialTreeError):
    """Whole data set is degenerate (e.g. every point identical)."""


class InvalidPartition(SpatialTreeError):
    """Cells do not form a partition (overlap, gaps, or bad weights)."""


class InvalidParam(SpatialTreeError):
    """A parameter is outside its allowed range."""
