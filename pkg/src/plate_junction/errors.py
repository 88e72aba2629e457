class PlateJunctionError(Exception):
    pass


class GeometryError(PlateJunctionError):
    pass


class ElementConstructionError(PlateJunctionError):
    pass


class QuadratureError(PlateJunctionError):
    pass


class InconsistentConstraints(PlateJunctionError):
    pass


class SolveError(PlateJunctionError):
    """Raised when the reduced saddle-point system cannot be solved.

    ``null_vector`` carries an approximate null vector when one was found.
    """

    def __init__(self, message, null_vector=None):
        super().__init__(message)
        self.null_vector = null_vector
