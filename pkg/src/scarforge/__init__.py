"""scarforge: logarithmic-width quasimodes scarred on a hyperbolic fixed point.

Number-basis quantization of normal-form Hamiltonians, Gaussian wavepacket
propagation and time averaging up to the Ehrenfest horizon, cutoff and
spectral-interval optimization, and a pendulum-grid oracle with the full
spectral-projection experiment behind the ``scarforge`` CLI.
"""

__version__ = "0.1.0"

from . import analytic, fock, grid1d, krylov, qnf, quasimode, scarscan  # noqa: F401
