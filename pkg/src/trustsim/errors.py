"""Exception types raised across the simulator."""


class TrustSimError(Exception):
    pass


class InvalidModel(TrustSimError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid trust model: " + "; ".join(self.violations))


class UnknownState(TrustSimError):
    pass


class ClarifyingRewardNotApplicable(TrustSimError):
    pass


class EmptyPool(TrustSimError):
    pass


class DisputeError(TrustSimError):
    pass


class DuplicateDispute(DisputeError):
    pass


class WindowClosed(DisputeError):
    pass


class DuplicateClarifier(DisputeError):
    pass


class ConflictOfInterest(DisputeError):
    pass


class AlreadyResolved(DisputeError):
    pass


class InvalidConfig(TrustSimError):
    """Config failed validation. ``problems`` holds (key path, message) pairs."""

    def __init__(self, problems):
        self.problems = list(problems)
        msg = "; ".join(f"{path}: {why}" if path else why for path, why in self.problems)
        super().__init__(msg)


class ConfigSyntaxError(TrustSimError):
    """Malformed JSON or unknown keys in a config file."""


class UnknownVehicleInScript(InvalidConfig):
    pass


class NoConvergence(TrustSimError):
    pass


class MismatchedConfigs(TrustSimError):
    pass
