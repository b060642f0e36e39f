"""Physics-informed Kolmogorov-Arnold networks with residual-gated blocks.

Importing the package switches JAX to 64-bit floats; every numerical routine
here assumes double precision.
"""

import jax

jax.config.update("jax_enable_x64", True)

__version__ = "0.1.0"
