"""Exception hierarchy.

ConfigError covers anything wrong before a run starts (arguments, manifests,
backend selection): the CLI maps it to exit code 2.  SamplerError covers
failures during a run (exit code 1), the important one being
ThinningViolationError: the true bounce rate exceeded its envelope, which
for a valid potential oracle is impossible, so the declared curvature bound
L is too small and every sample from such a run would be from the wrong law.
"""


class ConfigError(ValueError):
    """Bad constructor arguments, manifests, or sampler configuration."""


class SamplerError(RuntimeError):
    """Runtime failure inside a sampling run."""


class ThinningViolationError(SamplerError):
    """True bounce rate exceeded its envelope: declared L is too small."""

    def __init__(self, coordinate, rate, envelope, time):
        self.coordinate = int(coordinate)
        self.rate = float(rate)
        self.envelope = float(envelope)
        self.time = float(time)
        super().__init__(
            f"thinning violation at t={self.time:.6g}: coordinate {self.coordinate} "
            f"has rate {self.rate:.6g} above envelope {self.envelope:.6g}; "
            "the potential's declared curvature bound L is too small")


class MaxEventsExceededError(SamplerError):
    def __init__(self, max_events, time):
        self.max_events = int(max_events)
        self.time = float(time)
        super().__init__(
            f"event cap {self.max_events} exhausted at t={self.time:.6g} "
            "before the terminal time; raise max_events or shorten the run")


class DegenerateVelocityError(SamplerError):
    def __init__(self, time):
        self.time = float(time)
        super().__init__(
            f"no finite clock at t={self.time:.6g}: velocity is identically zero "
            "and refreshment is disabled")


class InfiniteDivergenceError(ValueError):
    """Chi-square divergence between the given Gaussians is infinite.

    For centred isotropic Gaussians the divergence integral converges only
    when the initial variance is below twice the target variance.
    """

    def __init__(self, var_init, var_target):
        self.var_init = float(var_init)
        self.var_target = float(var_target)
        super().__init__(
            f"chi-square divergence is infinite: initial variance {self.var_init:.6g} "
            f">= 2 * target variance ({2.0 * self.var_target:.6g})")
