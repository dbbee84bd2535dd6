from . import model
from . import eigen
from . import grid
from . import quadrature
