import sys

from . import pyfracheat

sys.exit(pyfracheat.main())
