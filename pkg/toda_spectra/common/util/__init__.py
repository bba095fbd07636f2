from . import debug
from . import log
