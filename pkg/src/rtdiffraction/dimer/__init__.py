"""Domino and lozenge dimer models: couplings, spectra, samplers and torus oracles."""

from .coupling import (
    LOZENGE_SYMMETRIES,
    CouplingTable,
    check_triangle,
    coupling_domino,
    coupling_lozenge,
    domino_coupling_grid,
    domino_coupling_table,
    lozenge_coupling_table,
    lozenge_phi0,
    lozenge_single_integral,
)
from .domino import (
    DominoDiffuseDensity,
    DominoModel,
    domino_activities_for_density,
    domino_densities,
    domino_diffuse_density,
    domino_joint_occupation,
    domino_pp,
)
from .lozenge import (
    CELL_AREA,
    DUAL_BASIS,
    GAMMA_BASIS,
    TILE_OFFSETS,
    LozengeDiffuseDensity,
    LozengeModel,
    lozenge_activities_for_density,
    lozenge_densities,
    lozenge_diffuse_density,
    lozenge_joint_occupation,
    lozenge_pp,
)
from .mcmc import (
    DimerConfiguration,
    default_burn_in,
    empirical_joint_occupation,
    sample_domino_mcmc,
    sample_lozenge_mcmc,
)
from .torus import (
    MAX_TORUS,
    TorusData,
    domino_torus,
    enumerate_domino_matchings,
    ledermann_check,
    lozenge_torus,
)

__all__ = [
    "LOZENGE_SYMMETRIES", "CouplingTable", "check_triangle", "coupling_domino", "coupling_lozenge",
    "domino_coupling_grid", "domino_coupling_table", "lozenge_coupling_table", "lozenge_phi0",
    "lozenge_single_integral",
    "DominoDiffuseDensity", "DominoModel", "domino_activities_for_density", "domino_densities",
    "domino_diffuse_density", "domino_joint_occupation", "domino_pp",
    "CELL_AREA", "DUAL_BASIS", "GAMMA_BASIS", "TILE_OFFSETS", "LozengeDiffuseDensity", "LozengeModel",
    "lozenge_activities_for_density", "lozenge_densities", "lozenge_diffuse_density",
    "lozenge_joint_occupation", "lozenge_pp",
    "DimerConfiguration", "default_burn_in", "empirical_joint_occupation", "sample_domino_mcmc",
    "sample_lozenge_mcmc",
    "MAX_TORUS", "TorusData", "domino_torus", "enumerate_domino_matchings", "ledermann_check",
    "lozenge_torus",
]
