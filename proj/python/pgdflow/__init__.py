"""Python bindings for the pgdflow finite-volume / PGD toolkit."""

from ._core import (
    Archive,
    ConfigError,
    DomainError,
    case_names,
    default_config,
    kovasznay_exact,
    kovasznay_lambda,
    pgd_offline,
    solve_full,
)

__all__ = [
    "Archive",
    "ConfigError",
    "DomainError",
    "case_names",
    "default_config",
    "kovasznay_exact",
    "kovasznay_lambda",
    "pgd_offline",
    "solve_full",
]
