"""Bethe-ansatz machinery for two excitations of the coupled Bose-Hubbard chain."""

from .components import (
    ChoyHaldaneComponent,
    ConvergenceFailure,
    InconsistentWeights,
    NoNontrivialSolution,
    RootCountMismatch,
    SingularDenominator,
    bethe_u_tilde,
    choy_haldane_matrix,
    scattering_factor,
)
from .doublons import (
    BranchNotFound,
    DoublonBranch,
    DoublonLevel,
    doublon_branches,
    doublon_energy,
    doublon_levels,
    large_u_levels,
    write_branches_csv,
)
from .finite import AnalyticEigenstate, SectorSolution, analytic_sector, analytic_spectrum, sector_dimension
from .kernel import PoleEncountered, continua, gaps, kernel_determinant, kernel_sum, momentum_kernel
from .regions import RegionState, classify_region, region_counts, region_enumerate_infU, write_regions_csv
from .roots import EnergyRoots, NoRoots, QuasiMomentumSet, energy_roots, solve_single_species
from .weights import WeightSolution, assemble_eigenstate, kappa, weight_system

__all__ = [name for name in dir() if not name.startswith("_")]
