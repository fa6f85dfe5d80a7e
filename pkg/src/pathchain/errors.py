"""Exception hierarchy shared by every pathchain module."""

from __future__ import annotations


class PathchainError(Exception):
    """Base class; `to_dict()` is what the CLI prints on standard error."""

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": str(self)}


class InputError(PathchainError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line

    def to_dict(self) -> dict:
        result = super().to_dict()
        if self.line is not None:
            result["line"] = self.line
        return result


class ParameterError(InputError):
    pass


class DegenerateInputError(InputError):
    def __init__(self, message: str, index: int | None = None, point_id: str | None = None):
        super().__init__(message)
        self.index = index
        self.point_id = point_id

    def to_dict(self) -> dict:
        result = super().to_dict()
        if self.index is not None:
            result["index"] = self.index
        if self.point_id is not None:
            result["point_id"] = self.point_id
        return result


class ConvergenceError(PathchainError):
    def __init__(self, message: str, residual: float, history: list[float] | None = None):
        super().__init__(message)
        self.residual = residual
        self.history = history or []

    def to_dict(self) -> dict:
        result = super().to_dict()
        result["residual"] = self.residual
        result["iterations"] = len(self.history)
        result["history_tail"] = self.history[-10:]
        return result


class NumericalError(PathchainError):
    pass


class ContractError(PathchainError):
    pass
