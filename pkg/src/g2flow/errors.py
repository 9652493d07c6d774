"""Exception types raised across the package."""


class G2FlowError(Exception):
    """Base class for package errors."""


class DimensionMismatch(G2FlowError, ValueError):
    pass


class SlotError(G2FlowError, IndexError):
    pass


class DegenerateForm(G2FlowError):
    """The 3-form (or 4-form) does not define a Riemannian metric."""


class NonPositiveDefinite(G2FlowError):
    pass


class NotCoclosed(G2FlowError):
    def __init__(self, residual: float, tol: float):
        super().__init__(f"d(psi) has max-norm {residual:.3e} > {tol:.1e}")
        self.residual = residual
        self.tol = tol


class NotASoliton(G2FlowError):
    def __init__(self, residual: float, tol: float):
        super().__init__(f"soliton residual {residual:.3e} > {tol:.1e}")
        self.residual = residual
        self.tol = tol


class HorizonExceeded(G2FlowError):
    def __init__(self, t_end: float, horizon: float):
        super().__init__(f"t_end={t_end} is past the finite-time horizon {horizon}")
        self.t_end = t_end
        self.horizon = horizon


class BlowUp(G2FlowError):
    """Flow aborted; carries the time, the monitor value and the partial series."""

    def __init__(self, t: float, lam: float, series=None, reason: str = ""):
        msg = f"flow aborted at t={t:.6g} with lambda_max={lam:.6g}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)
        self.t = t
        self.lam = lam
        self.series = series


class ConfigError(G2FlowError):
    pass


class UnknownKey(ConfigError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class ConfigTypeError(ConfigError, TypeError):
    pass


class RangeError(ConfigError, ValueError):
    pass


class SnapshotError(G2FlowError):
    pass


class BadMagic(SnapshotError):
    pass


class VersionMismatch(SnapshotError):
    pass


class TruncatedFile(SnapshotError):
    pass
