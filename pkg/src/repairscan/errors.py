"""Exception types shared across the package."""


class DataError(Exception):
    """Malformed or contract-violating input data (CLI exit code 2)."""


class EndpointError(Exception):
    """A scanner or repair endpoint failed or answered garbage (CLI exit code 3)."""
