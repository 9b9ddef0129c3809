"""Certificates of nondegenerate multistationarity for fully open reaction networks."""

from .engine import (
    Certificate,
    CertificateRejected,
    Diagnostics,
    HypothesisWitness,
    Inconclusive,
    MethodConfig,
    MethodError,
    build_certificate,
    run_method,
    verify_certificate,
)
from .model import (
    Complex,
    Network,
    NetworkError,
    NotFullyOpenError,
    Reaction,
    ReactionKind,
    build_sequestration,
    fully_open_extension,
    is_nondegenerate,
    jacobian,
    ode_rhs,
)
from .parser import ParseError, parse_network, serialize_network

__version__ = "0.1.0"
