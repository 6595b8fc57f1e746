"""kdvcrit: desk-scale numerics for KdV boundary control at critical lengths.

Subpackages map one-to-one onto the analytic layers: integer enumeration of
critical lengths (`numbertheory`), characteristic roots and entire quotients
(`spectral`), the unreachable directions and their constants (`unreachable`),
the quadratic-interaction kernel and its expansions (`kernel`), the
discretized control system (`pde`), and the bump-based control synthesis
(`synthesis`).  `cli` exposes everything as subcommands.
"""

from . import errors

__version__ = "0.1.0"

__all__ = ["errors", "__version__"]
