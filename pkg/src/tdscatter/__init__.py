"""1D quantum scattering off time-modulated potential barriers.

Three mutually cross-checking computational routes:

* ``coeffdyn``   exact coefficient dynamics in the static-barrier eigenbasis
* ``perturb1``   closed-form first-order perturbation theory (delta barrier)
* ``tdse``       direct Crank-Nicolson wave-packet propagation

supported by ``model`` (parameters, grids, packets, barriers) and
``eigenbasis`` (scattering states and projections).  The ``cli`` module
exposes everything as reproducible command-line scenarios.
"""

from . import cli, coeffdyn, eigenbasis, errors, model, perturb1, tdse

__all__ = ["cli", "coeffdyn", "eigenbasis", "errors", "model", "perturb1", "tdse"]
__version__ = "0.1.0"
