from . import comparison
from . import gaussian
from . import spectral
