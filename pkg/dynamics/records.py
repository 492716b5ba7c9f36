from typing import Dict, List, Optional, Union

from typing_extensions import TypedDict


class ReportRecord(TypedDict):
    """Shape of report.json written by `tsde solve`."""
    kind: str
    domain: str
    iterations: int
    converged: bool
    gamma_hat: float
    residual_history: List[float]
    sup_residual_history: List[float]
    final_residual: Optional[float]
    tol: float
    max_iter: int
    lam: float


class WorstOffenderRecord(TypedDict):
    x: float
    y: Optional[float]
    z: Optional[float]
    bound: float
    observed: float


class CertificateRecord(TypedDict):
    """One line of certificate.jsonl."""
    kind: str
    verdict: str
    passed: bool
    margin: Optional[float]
    slack: float
    constants: Dict[str, Union[float, int, str, bool, None]]
    notes: List[str]
    worst: Optional[WorstOffenderRecord]


class SelftestRow(TypedDict):
    family: str
    passed: bool
    checks: int
    detail: str
