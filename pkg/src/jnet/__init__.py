"""
Flat U-Net, U-Net+PS and J-Net super-resolution networks.
"""

from .spec import NetworkSpec, count_params, block_param_count, VARIANTS, BLOCK_TYPES, DOWNSAMPLE_OPS
from .network import (
    SRNetwork, NetworkParams, build_network, initialize_parameters,
    network_params, enumerate_params, forward
)
from .inference import super_resolve, pad_to_multiple

__all__ = [
    'NetworkSpec', 'count_params', 'block_param_count', 'VARIANTS', 'BLOCK_TYPES',
    'DOWNSAMPLE_OPS', 'SRNetwork', 'NetworkParams', 'build_network',
    'initialize_parameters', 'network_params', 'enumerate_params', 'forward',
    'super_resolve', 'pad_to_multiple',
]
