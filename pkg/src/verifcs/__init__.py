"""Verification decoding of sparse signals from sparse binary measurements,
with incremental direct sampling when the decoder stalls."""

__version__ = "0.1.0"

from verifcs.decoder import DecodeReport, DecoderState, Outcome, extract_signal, run_to_convergence
from verifcs.graph import MeasurementGraph, build_regular, girth_at_least_six, load_alist, save_alist
from verifcs.incremental import ArrayOracle, IncrementalConfig, IncrementalReport, run_incremental
from verifcs.signal import SparseSignal, generate_gaussian_sparse, measure

__all__ = [
    "ArrayOracle",
    "DecodeReport",
    "DecoderState",
    "IncrementalConfig",
    "IncrementalReport",
    "MeasurementGraph",
    "Outcome",
    "SparseSignal",
    "build_regular",
    "extract_signal",
    "generate_gaussian_sparse",
    "girth_at_least_six",
    "load_alist",
    "measure",
    "run_incremental",
    "run_to_convergence",
    "save_alist",
]
