from . import testfunctions
from . import smallness
from . import engine
