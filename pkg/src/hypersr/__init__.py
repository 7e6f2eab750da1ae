"""hypersr: hyperspectral single-image super-resolution via unmixing.

The pipeline unmixes a low-resolution cube into endmembers and abundance
maps, trains a small residual network purely on synthetic dead-leaves
abundance pairs, super-resolves the real abundances, and mixes them back
into a full-resolution cube.
"""

from .core import (
    AbundanceMap,
    DataFormatError,
    EndmemberMatrix,
    NumericalError,
    SpectralCube,
    pseudo_inverse,
    reconstruct,
)
from .deadleaves import (
    GeneratorConfig,
    Leaf,
    generate_abundance,
    generate_dataset,
    generate_pair,
    make_value_source,
    sample_leaf,
    value_sampler_dirichlet,
    value_sampler_empirical,
)
from .degrade import (
    DegradationSpec,
    Degrader,
    bicubic_resample,
    blur,
    degrade,
    gaussian_kernel,
    upsample,
)
from .io import (
    load_abundance,
    load_cube,
    load_endmembers,
    save_abundance,
    save_cube,
    save_endmembers,
)
from .metrics import MetricReport, ergas, evaluate, psnr, sam, sam_with_exclusions
from .noise import (
    NoiseConfig,
    abundance_noise,
    build_input_stack,
    prepare_training_sample,
    sample_sigma,
)
from .phantom import Phantom, make_phantom, synthetic_spectra
from .srnet import (
    AdamState,
    ResidualSRNet,
    TrainConfig,
    adam_step,
    load_checkpoint,
    save_checkpoint,
    super_resolve,
    train_network,
)
from .unmixing import (
    MinVolUnmixer,
    PCAUnmixer,
    decompose_pca,
    estimate_abundances_ls,
    extract_endmembers_minvol,
    reconstruct_pca,
)

__version__ = "0.1.0"

__all__ = [
    "AbundanceMap",
    "AdamState",
    "DataFormatError",
    "DegradationSpec",
    "Degrader",
    "EndmemberMatrix",
    "GeneratorConfig",
    "Leaf",
    "MetricReport",
    "MinVolUnmixer",
    "NoiseConfig",
    "NumericalError",
    "PCAUnmixer",
    "Phantom",
    "ResidualSRNet",
    "SpectralCube",
    "TrainConfig",
    "abundance_noise",
    "adam_step",
    "bicubic_resample",
    "blur",
    "build_input_stack",
    "decompose_pca",
    "degrade",
    "ergas",
    "estimate_abundances_ls",
    "evaluate",
    "extract_endmembers_minvol",
    "gaussian_kernel",
    "generate_abundance",
    "generate_dataset",
    "generate_pair",
    "load_abundance",
    "load_checkpoint",
    "load_cube",
    "load_endmembers",
    "make_phantom",
    "make_value_source",
    "prepare_training_sample",
    "pseudo_inverse",
    "psnr",
    "reconstruct",
    "reconstruct_pca",
    "sam",
    "sam_with_exclusions",
    "sample_leaf",
    "sample_sigma",
    "save_abundance",
    "save_checkpoint",
    "save_cube",
    "save_endmembers",
    "super_resolve",
    "synthetic_spectra",
    "train_network",
    "upsample",
    "value_sampler_dirichlet",
    "value_sampler_empirical",
]
