from .core import exceptions  # noqa: F401
from .toda_model import *  # noqa: F401, F403
from .jacobi_spectral import *  # noqa: F401, F403
from .toda_actions import *  # noqa: F401, F403
from .abelian_differentials import *  # noqa: F401, F403
from .hill_kdv import *  # noqa: F401, F403
from .harness import *  # noqa: F401, F403
from .core.settings import SpectraSettings  # noqa: F401
