import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Union

import numpy as np

from .grid import GridFunction, ProductDomain
from .records import CertificateRecord, ReportRecord, WorstOffenderRecord

CSV_HEADER = ["x", "y", "z", "value"]


def format_value(value: float) -> str:
    """17 significant digits, enough to read every double back exactly."""
    return f"{float(value):.17g}"


def to_csv_rows(g: GridFunction) -> List[List[str]]:
    """
    Convert a grid function to CSV rows in x-major, then y, then z order.

    Args:
        g: GridFunction to flatten

    Returns:
        Rows of formatted strings, header first
    """
    d = g.domain
    rows = [list(CSV_HEADER)]
    for i, x in enumerate(d.t1.points):
        for j, y in enumerate(d.t2.points):
            for k, z in enumerate(d.zscale.points):
                rows.append([format_value(x), format_value(y), format_value(z), format_value(g.values[i, j, k])])
    return rows


def write_csv(g: GridFunction, path: Union[str, Path]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as handle:
        csv.writer(handle).writerows(to_csv_rows(g))
    return path


def read_csv(path: Union[str, Path], domain: ProductDomain) -> GridFunction:
    """
    Read a surface written by write_csv back onto its domain.

    Raises:
        ValueError: If the header is wrong, a coordinate is not on the domain,
                    or some grid point has no row
    """
    values = np.full(domain.shape, np.nan)
    with Path(path).open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
        for line, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise ValueError(f"{path}:{line}: expected 4 columns, got {len(row)}")
            x, y, z, value = (float(cell) for cell in row)
            values[domain.locate(x, y, z)] = value
    if np.isnan(values).any():
        raise ValueError(f"{path}: {int(np.isnan(values).sum())} grid points have no row")
    return GridFunction(domain=domain, values=values)


def report_record(report) -> ReportRecord:
    """Convert a SolveReport into the report.json record."""
    spec = report.spec
    return ReportRecord(
        kind=spec.kind.value,
        domain=spec.domain.describe(),
        iterations=report.iterations,
        converged=report.converged,
        gamma_hat=report.gamma_hat,
        residual_history=list(report.residual_history),
        sup_residual_history=list(report.sup_residual_history),
        final_residual=report.final_residual,
        tol=spec.tol,
        max_iter=spec.max_iter,
        lam=spec.lam,
    )


def certificate_record(certificate) -> CertificateRecord:
    """Convert a Certificate into its JSON-lines record."""
    worst = None
    if certificate.worst is not None:
        w = certificate.worst
        worst = WorstOffenderRecord(x=w.x, y=w.y, z=w.z, bound=w.bound, observed=w.observed)
    return CertificateRecord(
        kind=certificate.kind.value,
        verdict=certificate.verdict.value,
        passed=certificate.passed,
        margin=certificate.margin,
        slack=certificate.slack,
        constants=dict(certificate.metadata),
        notes=list(certificate.notes),
        worst=worst,
    )


def write_json(record: Dict[str, Any], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(json.dumps(record, indent=2, allow_nan=False) + "\n")
    return path


def write_jsonl(records: Iterable[Dict[str, Any]], path: Union[str, Path]) -> Path:
    path = Path(path)
    with path.open("w") as handle:
        for record in records:
            handle.write(json.dumps(record, allow_nan=False) + "\n")
    return path
