"""Codebook based hybrid RF-baseband precoding toolkit for multiuser mmWave downlinks."""

from .channel import (
    ArrayGeometry,
    ChannelParams,
    ChannelRealization,
    gen_channel,
    sample_laplacian_angle,
    ula_response,
    upa_response,
)
from .codebook import (
    Codebook,
    array_factor,
    dft_codebook,
    ieee802153c_codebook,
    quantized_beam_codebook,
)
from .sweep import EffectiveChannel, effective_channels, sparsify_feedback
from .power import PowerModel, digital_ee, dynamic_power, sum_rate, system_ee

__all__ = [
    "ArrayGeometry",
    "ChannelParams",
    "ChannelRealization",
    "gen_channel",
    "sample_laplacian_angle",
    "ula_response",
    "upa_response",
    "Codebook",
    "array_factor",
    "dft_codebook",
    "ieee802153c_codebook",
    "quantized_beam_codebook",
    "EffectiveChannel",
    "effective_channels",
    "sparsify_feedback",
    "PowerModel",
    "dynamic_power",
    "system_ee",
    "digital_ee",
    "sum_rate",
]

__version__ = "0.1.0"
