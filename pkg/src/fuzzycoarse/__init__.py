"""Coarse geometry of finite fuzzy metric spaces: axiom checks, Property A
certificates, asymptotic-dimension covers, coarse maps and Hilbert space
embeddings."""

from .characterizations import (Kernel, L1Field, L2Field, PropagatedOperator, StepCertificate, kernel_psd_check,
                                kernel_to_operator, l1_to_l2, l2_to_kernel, l2_to_witness, operator_to_l2,
                                orthogonality_window, propagation_compose, roundtrip, witness_to_l1)
from .coarse_maps import (PointMap, check_closeness, check_coarsely_onto, check_effectively_proper,
                          check_uniformly_expansive, find_coarse_inverse, restrict_witness, transport_witness)
from .coarse_structure import (Entourage, bounded_witness, coarse_asdim_verify, compose_witness,
                               crosscheck_asdim, crosscheck_property_a, sako_property_a_verify)
from .covers_asdim import (Cover, DisjointFamilies, ad_x_estimate, are_rt_disjoint, enlarge_family,
                           lebesgue_pair_check, multiplicity, verify_asdim_witness)
from .embedding import EmbeddingConfig, ace_vectors, build_embedding, build_from_cover, distortion_report
from .estimators import CoarseEmbedding
from .exceptions import (CertificateError, ConvergenceError, DomainError, FormatError, FuzzyCoarseError,
                         NotPSDError)
from .fuzzy_space import (FuzzySpace, Window, ball, builtin_space, sampled_space, standard_space,
                          stationary_space, verify_axioms)
from .numerics import SymMatrix, TNorm, Tolerance, op_norm_upper, psd_sqrt, sym_eig
from .property_a import (ParamTuple, WitnessFamily, chain_length, construct_from_cover, ex39_witness,
                         subexp_field, verify_witness)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
