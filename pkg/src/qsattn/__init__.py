"""Quantum self-attention classifier: exact simulation and training."""

from .channels import amplitude_damping, bit_flip, depolarizing, make_channel
from .network import classify, forward, forward_monolithic
from .params import ParamId, ParamStore
from .topology import Sample, build_topology, complexity_report, init_param_store
from .training import TrainConfig, train

__all__ = [
    "ParamId",
    "ParamStore",
    "Sample",
    "TrainConfig",
    "amplitude_damping",
    "bit_flip",
    "build_topology",
    "classify",
    "complexity_report",
    "depolarizing",
    "forward",
    "forward_monolithic",
    "init_param_store",
    "make_channel",
    "train",
]
