"""Exception types used across the package."""


class ConfigurationError(ValueError):
    """Invalid user-facing configuration (levels, orders, parameter ranges)."""


class MeshError(RuntimeError):
    """Inconsistent mesh connectivity or orientation."""


class QueryError(ValueError):
    """Evaluation request outside the computational domain."""


class AssemblyError(RuntimeError):
    """Incompatible discrete families or dimension mismatch during assembly."""


class SolverError(RuntimeError):
    """Singular factorization or residual above tolerance."""


class OracleError(RuntimeError):
    """Adaptive reference quadrature failed to converge."""
