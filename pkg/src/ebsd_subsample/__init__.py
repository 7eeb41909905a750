"""Probe-subsampled EBSD map acquisition simulation and BPFA inpainting."""

__version__ = "0.1.0"

from .bpfa import BpfaHyperParams, BpfaState, gibbs_sweep, init_state, inpaint
from .maps_io import MapImage, MapKind, MetricsRecord, load_map, save_map
from .patches import PatchGeometry, PatchSet, extract_patches, reassemble
from .phantom import PhantomSpec, generate_phantom
from .quality import SsimParams, psnr, ssim
from .sampling import (
    MaskedMap,
    SamplingSet,
    acquisition_time_estimate,
    apply_acquisition,
    generate_uniform_mask,
)

__all__ = [
    "BpfaHyperParams",
    "BpfaState",
    "MapImage",
    "MapKind",
    "MaskedMap",
    "MetricsRecord",
    "PatchGeometry",
    "PatchSet",
    "PhantomSpec",
    "SamplingSet",
    "SsimParams",
    "acquisition_time_estimate",
    "apply_acquisition",
    "extract_patches",
    "generate_phantom",
    "generate_uniform_mask",
    "gibbs_sweep",
    "init_state",
    "inpaint",
    "load_map",
    "psnr",
    "reassemble",
    "save_map",
    "ssim",
]
