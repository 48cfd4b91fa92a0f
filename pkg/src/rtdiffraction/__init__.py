"""Exact and simulated diffraction spectra of stochastic point sets.

Modules
-------
spectral
    Combs, periodograms, volume-scaling peak classification, comparisons.
chains
    Bernoulli and reversible Markov weighted combs on the integers.
tiling1d
    One-dimensional random tilings with several tile lengths.
product
    Stochastic product tilings and their spectral bookkeeping.
dimer
    Domino and lozenge random tilings.
ising
    Two-dimensional Ising lattice gas.
experiments, config, cli
    Configured predict / simulate / compare runs behind the command line.
"""

from . import chains, dimer, ising, product, spectral, tiling1d
from ._validation import ValidationError
from .chains import (
    MarkovChainModel,
    analyze_chain,
    bernoulli_chain,
    bernoulli_diffraction,
    markov_ac_density,
    markov_autocorrelation,
    markov_diffraction,
    sample_chain,
)
from .dimer import (
    DominoModel,
    LozengeModel,
    coupling_domino,
    coupling_lozenge,
    domino_pp,
    lozenge_pp,
    sample_domino_mcmc,
    sample_lozenge_mcmc,
)
from .ising import IsingModel, IsingParams, ising_pp, magnetization, sample_ising_mcmc
from .product import ProductSpec, ProductTilingModel, product_autocorr, product_sample, product_spectrum
from .spectral import (
    AcDensity,
    IntensityGrid,
    KGrid,
    PeakClassifier,
    PeriodogramEstimator,
    PurePointSpectrum,
    WeightedDiracComb,
    classify_peaks,
    compare_density,
    empirical_autocorrelation,
    periodogram,
)
from .tiling1d import (
    RandomTilingModel,
    RandomTilingSpec1D,
    mean_bridge_identity,
    rt_ac_density,
    rt_autocorr_coeff,
    rt_density,
    rt_pp_part,
    sample_rt,
)

__version__ = "0.1.0"

__all__ = [
    "chains", "dimer", "ising", "product", "spectral", "tiling1d", "ValidationError",
    "MarkovChainModel", "analyze_chain", "bernoulli_chain", "bernoulli_diffraction",
    "markov_ac_density", "markov_autocorrelation", "markov_diffraction", "sample_chain",
    "DominoModel", "LozengeModel", "coupling_domino", "coupling_lozenge", "domino_pp", "lozenge_pp",
    "sample_domino_mcmc", "sample_lozenge_mcmc",
    "IsingModel", "IsingParams", "ising_pp", "magnetization", "sample_ising_mcmc",
    "ProductSpec", "ProductTilingModel", "product_autocorr", "product_sample", "product_spectrum",
    "AcDensity", "IntensityGrid", "KGrid", "PeakClassifier", "PeriodogramEstimator",
    "PurePointSpectrum", "WeightedDiracComb", "classify_peaks", "compare_density",
    "empirical_autocorrelation", "periodogram",
    "RandomTilingModel", "RandomTilingSpec1D", "mean_bridge_identity", "rt_ac_density",
    "rt_autocorr_coeff", "rt_density", "rt_pp_part", "sample_rt",
]
