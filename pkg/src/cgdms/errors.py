"""Exception hierarchy shared across the package."""


class CgdmsError(Exception):
    """Base class for every error raised by this package."""


class InvalidGraph(CgdmsError):
    pass


class InvalidLength(CgdmsError):
    pass


class InvalidParameter(CgdmsError):
    pass


class InvalidInput(CgdmsError):
    pass


class InvalidDepth(CgdmsError):
    pass


class Inadmissible(CgdmsError):
    """A word violates the incidence matrix in the requested orientation."""


class NotAContraction(CgdmsError):
    def __init__(self, edge, bound):
        super().__init__(f"edge {edge}: derivative bound {bound:.6g} is not < 1")
        self.edge = edge
        self.bound = bound


class SeparationViolated(CgdmsError):
    def __init__(self, pair, distance):
        super().__init__(
            f"first-level cylinders of edges {pair[0]} and {pair[1]} are "
            f"separated by {distance:.6g} (need > 0)"
        )
        self.pair = pair
        self.distance = distance


class DegenerateDerivative(CgdmsError):
    pass


class MissingAssumption(CgdmsError):
    pass


class GraphMismatch(CgdmsError):
    pass


class BudgetExceeded(CgdmsError):
    def __init__(self, depth, count, budget):
        super().__init__(
            f"depth {depth} needs {count} words, over the budget of {budget}"
        )
        self.depth = depth
        self.count = count
        self.budget = budget


class NoRoot(CgdmsError):
    def __init__(self, lo, hi, f_lo, f_hi):
        super().__init__(
            f"no sign change on [{lo}, {hi}]: P({lo})={f_lo:.6g}, P({hi})={f_hi:.6g}"
        )
        self.endpoints = ((lo, f_lo), (hi, f_hi))


class NotIrreducible(CgdmsError):
    pass


class NumericalFailure(CgdmsError):
    pass
