"""Exception types shared across the package."""


class InstantaneousRegime(ValueError):
    """The kernel is not summable, so B_t is the whole lattice for every t > 0.

    Raised whenever an operation needs the total communication rate
    (dispersal simulation, exact displacement sampling, lattice sums).
    """

    def __init__(self, d, alpha, detail=""):
        msg = (
            f"kernel with d={d}, alpha={alpha} is not summable: "
            "instantaneous percolation regime, "
            "P(|B_t| = infinity) = 1 for every t > 0"
        )
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.d = d
        self.alpha = alpha


class UnsupportedDynamics(ValueError):
    """Dispersal dynamics requested for non-exponential weights."""


class AnsatzInfeasible(ValueError):
    """A multi-scale scheme cannot be built for the requested size/box."""


class DivergentSum(ValueError):
    """A lattice sum or integral diverges for the given exponents."""


class FitError(ValueError):
    """Too few or degenerate points for an exponent fit."""
