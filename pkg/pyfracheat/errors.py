""" Exceptions raised by the kernel laboratory. """


class LabError(Exception):
    pass


class RejectedInput(LabError, ValueError):
    """ Violated precondition (dimension mismatch, non-positive time, ...). """
    pass


class UnsupportedDomain(LabError):
    pass


class TruncationError(LabError):
    """ A series could not reach its tolerance within the allowed truncation. """
    def __init__(self, message, tail=None):
        super(TruncationError, self).__init__(message)
        self.tail = tail


class QuadratureError(LabError):
    def __init__(self, message, residual=None):
        super(QuadratureError, self).__init__(message)
        self.residual = residual


class ExtrapolationError(LabError):
    pass


class NonContractiveDriftError(LabError):
    def __init__(self, message, estimates=None):
        super(NonContractiveDriftError, self).__init__(message)
        self.estimates = estimates or []


class PositivityError(LabError):
    """ The lattice lower bound r^D - sum |r_k| of the perturbed kernel is not positive. """
    def __init__(self, message, margin=None):
        super(PositivityError, self).__init__(message)
        self.margin = margin


class InsufficientSampleError(LabError):
    def __init__(self, message, survivors=0):
        super(InsufficientSampleError, self).__init__(message)
        self.survivors = survivors


class ConfigError(LabError):
    def __init__(self, message, key=None):
        if key:
            message = "%s: %s" % (key, message)
        super(ConfigError, self).__init__(message)
        self.key = key


class TruncationWarning(UserWarning):
    """ Series summed to its term limit without meeting the tolerance. """
    pass
