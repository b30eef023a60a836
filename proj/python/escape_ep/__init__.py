from ._escape_ep import *  # noqa: F401,F403
from ._escape_ep import __doc__  # noqa: F401
