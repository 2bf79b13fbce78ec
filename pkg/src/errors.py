from typing import Any, Dict, List, Optional

import numpy as np


class SchemaError(ValueError):
    pass


class ValidationError(ValueError):

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid point")


class DomainError(ValueError):
    pass


class KernelError(ValueError):
    pass


class SingularMatrixError(np.linalg.LinAlgError):

    def __init__(self, message: str, params: Optional[np.ndarray] = None):
        self.params = None if params is None else np.array(params, dtype=float)
        super().__init__(message)


class DegenerateDataError(ValueError):
    pass


class FitError(RuntimeError):

    def __init__(self, message: str, failures: Optional[List[Dict[str, Any]]] = None):
        self.failures = failures or []
        super().__init__(message)


class SummaryError(ValueError):
    pass
