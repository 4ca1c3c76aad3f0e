from ._triage import *  # noqa: F401,F403
from ._triage import __doc__  # noqa: F401
