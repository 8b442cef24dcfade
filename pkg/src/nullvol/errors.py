"""Exception hierarchy. Every numerical failure aborts instead of returning garbage."""


class GeometryError(Exception):
    """Base class for all errors raised by nullvol."""


class DomainExitError(GeometryError):
    """A point or geodesic left the chart's coordinate box."""


class SingularMetricError(GeometryError):
    """Metric matrix is singular or has the wrong signature."""


class NotSpacelikeError(GeometryError):
    """Induced metric of an immersion is not positive definite."""


class RankDeficiencyError(GeometryError):
    """The differential of a map lost rank at a sampled node."""


class FrameError(GeometryError):
    """A null normal frame could not be built or fails its normalization."""


class NotMarginallyTrappedError(FrameError):
    """Requested trapped alignment but the mean curvature vector is not null."""


class NotCharacteristicError(GeometryError):
    """A formula restricted to characteristic variations got another kind."""


class FormulaMismatchError(GeometryError):
    """Two routes to the same quantity disagree beyond tolerance."""


class NewtonDivergenceError(GeometryError):
    """Inversion of a parameter map failed; the variation parameter is too large."""
