from .boundary import BoundarySpec, bc_embed, dirichlet_factor, dirichlet_shape
from .layers import (cheby_layer, effective_weight_matrix, gate_mix, rga_block, rwf_dense,
                     rwf_weight, sine_layer)
from .networks import (Cpikan, CpikanSpec, PirateNet, PirateNetSpec, RgaKan, RgaKanSpec,
                       build_model, count_params)
from .store import load_params, save_params

__all__ = [
    "BoundarySpec", "bc_embed", "dirichlet_factor", "dirichlet_shape",
    "cheby_layer", "effective_weight_matrix", "gate_mix", "rga_block", "rwf_dense", "rwf_weight",
    "sine_layer", "Cpikan", "CpikanSpec", "PirateNet", "PirateNetSpec", "RgaKan", "RgaKanSpec",
    "build_model", "count_params", "load_params", "save_params",
]
