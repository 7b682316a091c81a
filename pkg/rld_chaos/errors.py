from typing import Optional


class RldError(Exception):
    exit_code = 1


class ConfigError(RldError, ValueError):
    exit_code = 1


class ContractError(RldError, ValueError):
    exit_code = 1


class InsufficientDataError(RldError, ValueError):
    exit_code = 1


class DomainError(RldError, ValueError):
    exit_code = 2


class IntegrationError(RldError, RuntimeError):
    exit_code = 2

    def __init__(self, message: str, time: Optional[float] = None):
        super().__init__(message)
        self.time = time


class DivergenceError(IntegrationError):
    pass


class EventError(IntegrationError):
    pass


class OutputError(RldError, OSError):
    exit_code = 3
