"""
Analysis
Distances, expansion, the double complex of local views, cycle filling and
decoding on top of a built sheaf complex.
"""

from .decoder import (
    DecodeResult, DecodeStatus, SmallSetFlipDecoder, decoder_checks, simulate_decoding, small_set_flip_decode
)
from .distances import (
    CodistanceBound, DistanceEntry, DistanceReport, LocalCoMinimality, brute_mu, cocycle_expansion_lower_bound,
    codistance_bound, cycle_data, d_coloc, distance_checks, distance_relation_check, distance_report,
    distance_to_kernel, dual_checks, dual_complex, expansion, greedy_cocycle_ratio, kappa_table,
    monotonicity_check, soundness_lower_bound, verify_distance_witness, verify_expansion_witness
)
from .double import (
    DoubleComplex, InconsistentViews, LocalViewCochain, LocalViewSpace, NotACocycle, NotACycle, ShapeMismatch,
    cube_coboundary, cube_faces, double_complex_checks
)
from .filling import FillResult, Obstruction, encoding_matrix, fill_bound, fill_checks, fill_cycle

__all__ = [
    'DecodeResult', 'DecodeStatus', 'SmallSetFlipDecoder', 'decoder_checks', 'simulate_decoding',
    'small_set_flip_decode',
    'CodistanceBound', 'DistanceEntry', 'DistanceReport', 'LocalCoMinimality', 'brute_mu',
    'cocycle_expansion_lower_bound', 'codistance_bound', 'cycle_data', 'd_coloc', 'distance_checks',
    'distance_relation_check', 'distance_report', 'distance_to_kernel', 'dual_checks', 'dual_complex',
    'expansion', 'greedy_cocycle_ratio', 'kappa_table', 'monotonicity_check', 'soundness_lower_bound',
    'verify_distance_witness', 'verify_expansion_witness',
    'DoubleComplex', 'InconsistentViews', 'LocalViewCochain', 'LocalViewSpace', 'NotACocycle', 'NotACycle',
    'ShapeMismatch', 'cube_coboundary', 'cube_faces', 'double_complex_checks',
    'FillResult', 'Obstruction', 'encoding_matrix', 'fill_bound', 'fill_checks', 'fill_cycle',
]
