"""
Error Hierarchy for expmix
Every failure carries the module it came from and the CLI exit code it maps to
"""

from typing import Optional


class ExpmixError(Exception):
    """Base class of every expmix failure"""

    module = 'expmix'
    exit_code = 1

    def __init__(self, message: str, module: Optional[str] = None):
        super().__init__(message)
        if module is not None:
            self.module = module

    def __str__(self) -> str:
        return f"[{self.module}] {super().__str__()}"


# --- Input errors (exit code 2) ---

class InputError(ExpmixError):
    """Bad user input: unknown fixture, malformed config, bad option"""

    module = 'cli_reporting'
    exit_code = 2


class SchemaError(InputError):
    """Config document violates the schema"""

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer or '/'
        super().__init__(f"{self.pointer}: {message}")


class ExpressionError(InputError):
    """Formula cannot be parsed or evaluated"""

    module = 'expressions'

    def __init__(self, formula: str, message: str, position: Optional[int] = None):
        self.formula = formula
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"{message}{where} in formula '{formula}'")


# --- map_model ---

class MapModelError(ExpmixError):
    module = 'map_model'


class BoundaryPoint(MapModelError):
    pass


class OutsideSpace(MapModelError):
    pass


class TruncationInsufficient(MapModelError):
    pass


class EmptyImage(MapModelError):
    pass


# --- hypothesis_suite ---

class HypothesisError(ExpmixError):
    module = 'hypothesis_suite'


class NotExpanding(HypothesisError):
    pass


class UnboundedDistortion(HypothesisError):
    pass


class ComplexityTooLarge(HypothesisError):
    pass


class InsufficientTrials(HypothesisError):
    pass


class VStarTooLarge(HypothesisError):
    pass


class SearchDiverged(HypothesisError):
    pass


class NoZFound(HypothesisError):
    pass


# --- constants_pipeline ---

class ConstantsError(ExpmixError):
    module = 'constants_pipeline'


class InfeasibleEps0(ConstantsError):
    pass


class NeverRecovers(ConstantsError):
    pass


# --- standard_families ---

class FamilyError(ExpmixError):
    module = 'standard_families'


class GridUnderflow(FamilyError):
    pass


class ComparabilityViolated(FamilyError):
    pass


class GrowthViolated(FamilyError):

    def __init__(self, m: int, eps: float, bound: str, lhs: float, rhs: float):
        self.m, self.eps, self.bound = m, eps, bound
        super().__init__(f"{bound} bound violated at m={m}, eps={eps:.3e}: {lhs:.6e} > {rhs:.6e}")


# --- coupling_engine ---

class CouplingError(ExpmixError):
    module = 'coupling_engine'


class DensityTooSmall(CouplingError):
    pass


class OverlapTooSmall(CouplingError):
    pass


class RegularityNotRecovered(CouplingError):
    pass


class PropernessNotRecovered(CouplingError):
    pass


# --- transfer_operator ---

class TransferError(ExpmixError):
    module = 'transfer_operator'


class NoConvergence(TransferError):
    pass


# --- inducing_schemes ---

class InducingError(ExpmixError):
    module = 'inducing_schemes'


class StallDetected(InducingError):
    pass


class GcdSearchFailed(InducingError):
    pass


class InsufficientLevels(InducingError):
    pass
