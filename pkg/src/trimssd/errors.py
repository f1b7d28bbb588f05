class TrimSsdError(Exception):
    pass


class ContractViolation(TrimSsdError):
    """A request or state transition broke a documented precondition."""


class CapacityError(TrimSsdError):
    """The device cannot reclaim enough space to accept a write."""


class UnsupportedLayoutError(TrimSsdError):
    """Object size does not evenly divide the pages-per-block count."""


class ModelBreakdownError(TrimSsdError):
    """An analytic model was evaluated outside the region where it is defined."""
