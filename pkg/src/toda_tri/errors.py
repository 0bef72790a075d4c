"""Exception hierarchy.

Every error carries the CLI exit code of its category so the command line
front end can map failures without a lookup table.
"""


class TodaTriError(Exception):
    exit_code = 4


class ParseError(TodaTriError):
    exit_code = 2


class ShapeViolation(TodaTriError):
    exit_code = 3

    def __init__(self, i, j, value):
        super().__init__(f"term w^{i} E^{j} = {value!r} lies outside the Newton polygon")
        self.i, self.j, self.value = i, j, value


# domain errors (exit 4)

class LeadingCoefficientZero(TodaTriError):
    def __init__(self, site):
        super().__init__(f"leading coefficient a_{site}^(1) vanishes")
        self.site = site


class NotCoprime(TodaTriError):
    def __init__(self, n, m):
        super().__init__(f"gcd({n}, {m}) != 1")
        self.n, self.m = n, m


class OrderExceedsPeriod(TodaTriError):
    pass


class InvalidRange(TodaTriError):
    pass


class NonPositiveLeading(TodaTriError):
    pass


class DegenerateRoots(TodaTriError):
    pass


class NotOnCurve(TodaTriError):
    pass


class NonSimpleEigenvalue(TodaTriError):
    pass


class NonSimpleKernel(TodaTriError):
    pass


class DerivativeVanishes(TodaTriError):
    pass


class OrderUnavailable(TodaTriError):
    pass


class UnsupportedK(TodaTriError):
    pass


class ChartMismatch(TodaTriError):
    pass


class InconsistentSystem(TodaTriError):
    pass


class SingularMinor(TodaTriError):
    def __init__(self, site, value=None):
        super().__init__(f"singular minor at site {site} (|det| = {value!r})")
        self.site = site


class InvalidStateError(TodaTriError):
    """Raised when a trajectory leaves the open domain a^(1) != 0."""

    exit_code = 5

    def __init__(self, message, last_time):
        super().__init__(message)
        self.last_time = last_time
