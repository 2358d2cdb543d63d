"""Sliced Wasserstein distance and kernels for persistence diagrams."""

from .datasets import generate_orbit_dataset, linked_twist_orbit, load_dataset, rips_0dim_persistence
from .diagrams import (
    DiagramFormatError,
    DiagramPoint,
    PersistenceDiagram,
    parse_diagram,
    read_diagram,
    serialize_diagram,
    write_diagram,
)
from .kernels import (
    GramMatrix,
    KernelSpec,
    check_psd,
    distance_matrix,
    gram_matrix,
    k_gauss_d1,
    k_pss,
    k_pwg,
    k_sw,
    rkhs_distance,
    sw_sigma_grid,
)
from .metrics import bottleneck, diagram_distance, optimal_matching
from .pipeline import classify_distances, classify_grams
from .sliced import DegeneracyError, sliced_wasserstein, sw_approx, sw_exact
from .svm import LabeledGram, cross_validate, svm_predict, svm_train, svm_train_binary
from .wasserstein import w1_assignment_oracle, w1_sorted

__version__ = "0.1.0"
