"""Exception types shared across the package."""


class InfeasibleError(ValueError):
    """No root-directed spanning tree avoids the forbidden edges.

    Attributes
    ----------
    nodes : tuple of str
        Labels of the nodes that cannot reach any admissible root.
    """

    def __init__(self, message, nodes=()):
        super().__init__(message)
        self.nodes = tuple(nodes)
