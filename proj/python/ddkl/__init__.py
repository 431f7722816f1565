"""Distributed deep Koopman learning workbench (python bindings)."""

try:
    from ddkl._core import *  # noqa: F401,F403
    from ddkl._core import __doc__  # noqa: F401
except ImportError:  # in-tree build: module sits next to this package
    from _core import *  # noqa: F401,F403
