from .ascent import gradient_ascent_image, perturb_clean  # noqa: F401
from .cppn import CPPNGenome, evolve_cppn, render_cppn  # noqa: F401
from .direct import (  # noqa: F401
    DirectGenome,
    EvolutionConfig,
    FitnessRecord,
    evolve_direct,
    mutation_rate_at,
    polynomial_mutate,
)
