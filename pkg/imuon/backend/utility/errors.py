from typing import Any, List, Optional


class ImuonError(Exception):
    """Base class for every library error"""


class InvalidInput(ImuonError, ValueError):
    """Malformed, non-finite or out-of-range input"""


class ConvergenceFailure(ImuonError):
    """An iterative kernel did not reach its tolerance"""

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class RankDeficient(ImuonError):
    """Factor or QR input lost full rank"""


class NotPositiveDefinite(ImuonError):
    """Matrix left the SPD cone"""

    def __init__(self, message: str, min_eigenvalue: float = float("nan")):
        super().__init__(f"{message} (lambda_min={min_eigenvalue:.3e})")
        self.min_eigenvalue = min_eigenvalue


class DivergedError(ImuonError):
    """Objective became non-finite during a run"""

    def __init__(self, message: str, trajectory: Optional[List[Any]] = None, point: Any = None):
        super().__init__(message)
        self.trajectory = trajectory or []
        self.point = point
