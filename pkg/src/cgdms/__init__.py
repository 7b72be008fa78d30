"""Conformal graph directed Markov systems: words, cylinders, scaling functions,
pressure and dimension."""
from .errors import *  # noqa: F401,F403
from .symbolic import (DualWord, EdgeGraph, Word, build_graph, check_finite_primitivity,
                       common_prefix_length, connector_length, count_words, enumerate_words,
                       word_metric)
from .maps import Affine1D, Ball, Conjugated1D, Interval, Perturbed1D, Similarity, StateSpace
from .system import (Cgdms, assemble, estimate_holder_constants, make_system, verify,
                     verify_contraction, verify_exponential_geometry, verify_strong_separation)
from .cylinder import (CylinderSet, code_point, compose, cylinder, cylinder_distance,
                       sup_inf_derivative_norm)
from .scaling import (EquivalenceReport, RatioSequence, ScalingEstimate, distortion_check,
                      geometric_equivalence, holder_diagnostic, ratio_geometry, scaling_function)
from .pressure import PressureCurve, PressureEstimate, partition_pressure, pressure_curve, scaling_pressure
from .dimension import (ConstructionMatrix, DimensionResult, bowen_dimension, consistency_report,
                        moran_dimension, realize_construction_matrix, spectral_dimension)

__version__ = "0.1.0"
