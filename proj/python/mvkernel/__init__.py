"""Multi-view Mahalanobis kernels and diffusion maps."""

from ._core import *  # noqa: F401,F403
from ._core import MvkError, __version__  # noqa: F401
