from ._geoxray import *  # noqa: F401,F403
