"""Bar-length spectra of filtered complexes over Novikov fields."""

from .scalars import (
    INF,
    GroundField,
    NovikovScalar,
    ParseError,
    ReductionError,
    format_scalar,
    parse_field,
    parse_scalar,
    reduce_mod_p,
    val,
)
from .complex import (
    ORTHONORMAL,
    RAW,
    BasisElement,
    ChainMap,
    ComplexError,
    FilteredComplex,
    SizeCapError,
    direct_sum,
    elementary_pair,
    make_complex,
    reduce_complex_mod_p,
    tensor_power,
)
from .barcode import (
    AdaptedBasis,
    BarSpectrum,
    adapted_basis,
    beta_max,
    beta_total,
    minors_oracle,
    partial_sums,
    spectrum,
)
from .metrics import (
    Barcode,
    QuasiEquivalenceCertificate,
    barcode_from_spectrum,
    bottleneck,
    compose_certificates,
    shift_quotient_distance,
    spectra_close,
    verify_certificate,
)
from .equivariant import build_tate, tau, verify_quasi_frobenius
from .perturb import (
    HypothesisError,
    SplitDifferential,
    check_cone_bound,
    check_majorization,
    cone,
    perturb,
    scaling_pipeline,
)

__version__ = "0.1.0"
