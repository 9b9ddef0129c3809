"""JSON certificate documents.

Floats are written with Python's shortest round-trip repr, so a reloaded
certificate is bit-identical to the one written.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .engine import Certificate, Diagnostics
from .parser import parse_network, serialize_network

FORMAT = "detopt-certificate/1"
_DIAG_KEYS = {
    "residualStar": "residual_star",
    "residualSharp": "residual_sharp",
    "detStar": "det_star",
    "detSharp": "det_sharp",
    "nondegenerateStar": "nondegenerate_star",
    "nondegenerateSharp": "nondegenerate_sharp",
    "scaling": "scaling",
}


class CertificateFormatError(ValueError):
    pass


def certificate_to_dict(cert: Certificate) -> dict:
    doc = {
        "format": FORMAT,
        "network": serialize_network(cert.network),
        "rates": [float(v) for v in cert.rates],
        "xStar": [float(v) for v in cert.x_star],
        "xSharp": [float(v) for v in cert.x_sharp],
        "delta": [float(v) for v in cert.delta],
        "etaZero": [float(v) for v in cert.eta_zero],
    }
    if cert.diagnostics is not None:
        doc["diagnostics"] = {key: _plain(getattr(cert.diagnostics, attr))
                              for key, attr in _DIAG_KEYS.items()}
    return doc


def _plain(value):
    return bool(value) if isinstance(value, (bool, np.bool_)) else float(value)


def certificate_from_dict(doc: dict) -> Certificate:
    try:
        net, _ = parse_network(doc["network"])
        vec = lambda key: np.array(doc[key], dtype=float)
        cert = Certificate(net, vec("rates"), vec("xStar"), vec("xSharp"),
                           vec("delta"), vec("etaZero"))
        diag = doc.get("diagnostics")
    except (KeyError, TypeError, ValueError) as exc:
        raise CertificateFormatError(f"malformed certificate: {exc}") from exc
    if cert.rates.shape != (net.reaction_count,):
        raise CertificateFormatError("rates length does not match the network")
    for key in ("x_star", "x_sharp", "delta"):
        if getattr(cert, key).shape != (net.species_count,):
            raise CertificateFormatError(f"{key} length does not match the species count")
    if diag:
        try:
            stored = Diagnostics(**{attr: diag[key] for key, attr in _DIAG_KEYS.items() if key in diag})
        except TypeError as exc:
            raise CertificateFormatError(f"malformed diagnostics: {exc}") from exc
        cert = Certificate(net, cert.rates, cert.x_star, cert.x_sharp, cert.delta,
                           cert.eta_zero, stored)
    return cert


def dumps(cert: Certificate) -> str:
    return json.dumps(certificate_to_dict(cert), indent=2) + "\n"


def loads(text: str) -> Certificate:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CertificateFormatError(f"not JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CertificateFormatError("certificate must be a JSON object")
    return certificate_from_dict(doc)


def save(cert: Certificate, path) -> None:
    Path(path).write_text(dumps(cert), encoding="utf-8")


def load(path) -> Certificate:
    return loads(Path(path).read_text(encoding="utf-8"))
