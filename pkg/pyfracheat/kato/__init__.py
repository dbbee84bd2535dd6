from . import drift
from . import functional
