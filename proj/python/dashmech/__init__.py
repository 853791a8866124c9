"""Dashboard mechanisms for sequential marketplaces.

The heavy lifting lives in the compiled extension; this package re-exports
its surface: monotone allocation rules, bid strategies and inversion,
dashboards, payment rebalancing, isotonic fits, instrumented draws, and the
experiment runner.
"""

from dashmech._core import *  # noqa: F401,F403
from dashmech._core import __doc__  # noqa: F401
