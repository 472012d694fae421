"""Coprime factorizations over disk-type algebras, the nu-gap metric and
robust stability certificates."""

from .config import PROFILES, Tolerances, get_profile
from .errors import (CertificateViolation, FactorizationError, GridError, NearCircleDegeneracy,
                     NonInteger, NonLattice, NotEquivalent, NotInvertible, NumetricError,
                     PlantSyntaxError, RefinementExhausted, RiccatiDivergence, SingularLoop,
                     Unresolved, ValidationError)
from .factorization import CoprimeFactors, factors, ncf, stabilizing_controller, unitary_equivalence
from .freqdomain import AP, CD, DISK, FrequencyGrid, MatrixFunction, grid_for, polydisk
from .index import IndexValue, index_of, is_invertible_in_S
from .metric import (AxiomReport, MarginResult, NuResult, RobustCertificate, certify_robust,
                     closed_loop, metric_axiom_suite, nu_distance, stability_margin, stabilizes)
from .plants import PlantModel, load_plant, parse_plant, random_plant, serialize_plant

__version__ = "0.1.0"
