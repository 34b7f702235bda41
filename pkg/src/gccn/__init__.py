"""Combinatorial complexes, neighborhood expansions, and generalized
higher-order message passing with a self-contained training stack."""

from .complexes import (
    Cell,
    CellPermutation,
    CombinatorialComplex,
    build_complex,
    cells_of_rank,
    load_complex,
    permute_cells,
    save_complex,
)
from .neighborhoods import (
    PRESETS,
    NeighborhoodMatrix,
    NeighborhoodSpec,
    neighborhood_matrix,
    parse_spec,
    parse_specs,
    union_neighborhood,
)
from .hasse import (
    DirectedCellGraph,
    HasseEnsemble,
    augmented_hasse,
    expand_ensemble,
    strict_hasse,
)
from .autodiff import Parameters, Tape, Tensor2, backward, gradient_check
from .models import (
    CcnnReference,
    FlopEstimate,
    GccnLayerConfig,
    GccnModel,
    ModelConfig,
    OmegaConfig,
    ccnn_layer,
    estimate_layer_flops,
    gccn_layer,
    omega_forward,
    readout,
)
from .wl import (
    ColorHistogram,
    Coloring,
    ccwl,
    distinguishable,
    kccwl,
    kset_neighbors,
    wl_refine,
)
from .data import (
    Dataset,
    GraphRecord,
    canonical_complex,
    clique_lift,
    cycle_lift,
    lift_features,
    parse_tudataset,
    synth_dataset,
)
from .train import Adam, Metrics, TrainConfig, evaluate, train

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
