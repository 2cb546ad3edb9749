"""
cubesheaf
Sheaf chain complexes on cubical incidence posets over GF(2^e), their local
product structure, high-order walks, distances and expansion, small-set flip
decoding and the CSS codes they define.
"""

from .errors import BudgetExceeded, ConstructionError, CubeSheafError, LevelOutOfRange, ManifestError
from .ff2e import Field, FieldMatrix, field_make
from .geometry import ComplexGeometry, Face, PermutationSet, build_complex
from .manifest import Instance, Manifest, build_instance, load_manifest
from .sheaf import LocalCodes, SheafComplex

__version__ = "0.1.0"

__all__ = [
    'BudgetExceeded', 'ConstructionError', 'CubeSheafError', 'LevelOutOfRange', 'ManifestError',
    'Field', 'FieldMatrix', 'field_make',
    'ComplexGeometry', 'Face', 'PermutationSet', 'build_complex',
    'Instance', 'Manifest', 'build_instance', 'load_manifest',
    'LocalCodes', 'SheafComplex',
]
