"""Exception types shared across the package."""


class GeometryError(Exception):
    """Base class for geometric failures."""


class BasePointMismatchError(GeometryError):
    """Two vectors were combined although they live at different base points."""


class OutOfRadiusError(GeometryError):
    """An operation that needs a unique minimal geodesic was asked to work
    beyond the manifold's working radius."""


class DomainExitError(GeometryError):
    """A geodesic left the coordinate domain during integration."""


class ShootingError(GeometryError):
    """The log-map shooting iteration failed to converge."""


class DisconnectedGraphError(ValueError):
    """A geodesic graph came out disconnected; carries component sizes."""

    def __init__(self, components):
        self.components = components
        sizes = sorted((len(c) for c in components), reverse=True)
        super().__init__(
            f"graph is disconnected: {len(components)} components with sizes {sizes}"
        )


class ExtendedRealError(ArithmeticError):
    """Raised for undefined extended-real arithmetic such as (+inf) - (+inf)."""
