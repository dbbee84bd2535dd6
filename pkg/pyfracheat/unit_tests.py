from .test.test_domain         import *
from .test.test_comparison     import *
from .test.test_gaussian       import *
from .test.test_subordinator   import *
from .test.test_spectral       import *
from .test.test_kato           import *
from .test.test_testfunctions  import *
from .test.test_engine         import *
from .test.test_montecarlo     import *
from .test.test_config         import *
from .test.test_report         import *
from .test.test_verify         import *
from .test.test_cli            import *
import unittest

if __name__ == '__main__':
    unittest.main()
