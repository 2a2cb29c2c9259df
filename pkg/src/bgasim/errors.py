class InvalidParameter(ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedGraph(ValueError):
    """The operation is undefined for this graph (e.g. a non-symmetric graph)."""
