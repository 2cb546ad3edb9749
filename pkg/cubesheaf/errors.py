"""
Error Hierarchy
Base exception families shared by every module; the command line maps each
family to a fixed exit code.
"""


class CubeSheafError(Exception):
    """Base error for the package"""
    pass


class ManifestError(CubeSheafError):
    """Manifest could not be read or parsed (exit code 2)"""
    pass


class ConstructionError(CubeSheafError):
    """An instance could not be built from valid input (exit code 3)"""
    pass


class BudgetExceeded(CubeSheafError):
    """An enumeration would exceed its budget (exit code 5)

    ``partial`` carries whatever bounds were established before stopping.
    """

    def __init__(self, message: str, needed: int = 0, budget: int = 0, partial=None):
        super().__init__(message)
        self.needed = needed
        self.budget = budget
        self.partial = partial


class LevelOutOfRange(CubeSheafError, IndexError):
    """Requested level is outside the complex"""

    def __init__(self, level: int, low: int, high: int):
        super().__init__(f"level {level} outside [{low}, {high}]")
        self.level = level
        self.low = low
        self.high = high
