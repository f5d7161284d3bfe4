"""Wrapping of line measures onto the unit circle and the convolutions it intertwines."""
from .class_l import (ClassLDescriptor, branch_index, classl_density, classl_F, count_local_maxima,
                      membership_check, shift, solve_atoms, solve_atoms_detailed)
from .convolutions import (belinschi_nica, boolean_add, boolean_power, free_add, free_power,
                           monotone_compose, mult_boolean, mult_boolean_power, mult_free,
                           mult_free_disk, mult_free_power, subordination_dist)
from .exceptions import *  # noqa: F401,F403
from .levy import (CanonicalPairR, bp_beta, bp_pair_map, build_additive_id, build_mult_id,
                   loewner_residual)
from .measures import (CircleMeasure, FiniteAtomicMeasure, MeasureProfile, RealAtomicMeasure,
                       total_variation)
from .transforms import (TransformHandle, invert_transform, phi_eval, recover_circle, recover_line,
                         sigma_eval)
from .wrapping import (BooleanIDDescriptor, atom_correspondence, eta_handle, unwrap_descriptor,
                       unwrap_handle, wrap_descriptor, wrap_direct, wrap_handle)

__version__ = "0.1.0"
