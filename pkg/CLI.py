"""
tsde: solve and certify partial dynamic integrodifferential equations on time scales.

    tsde solve <file> -o <dir>
    tsde certify <file> --which gronwall|bound|depend|unique|constants -o <dir> [--uniform-z]
    tsde selftest [--seed N]

Exit codes: 0 success or pass, 1 certificate failed, 2 not converged or
inconclusive, 3 input error, 4 internal error.
"""

import argparse
import logging
import sys
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from colorama import Fore, Style, deinit, init

from config import Settings
from dynamics import (
    Certificate,
    CertificateKind,
    ProblemEvaluationError,
    ProblemSpec,
    SolutionTriple,
    SolveReport,
    Verdict,
    boundedness_certificate,
    check_compatibility,
    contraction_certificate,
    dependence_certificate,
    solve_picard,
    uniqueness_check,
    verify_gronwall,
)
from dynamics.certificates import condition_surface
from dynamics.serializer import certificate_record, report_record, write_csv, write_json, write_jsonl
from problem_parser import ProblemFile, ProblemFileError, ProblemParser, ProblemValidator
from selftest import run_selftest

logger = logging.getLogger("tsde")

CERTIFICATES = ("gronwall", "bound", "depend", "unique", "constants")


class ExitCode(IntEnum):
    OK = 0
    CERTIFICATE_FAILED = 1
    NOT_CONVERGED = 2
    INPUT_ERROR = 3
    INTERNAL_ERROR = 4


VERDICT_EXIT = {
    Verdict.PASS: ExitCode.OK,
    Verdict.FAIL: ExitCode.CERTIFICATE_FAILED,
    Verdict.PREMISE_FAILED: ExitCode.CERTIFICATE_FAILED,
    Verdict.INCONCLUSIVE: ExitCode.NOT_CONVERGED,
    Verdict.REFUSED: ExitCode.INPUT_ERROR,
}


@dataclass
class RunResult:
    exit_code: ExitCode
    artifacts: List[Path] = field(default_factory=list)


class LevelColorFormatter(logging.Formatter):
    """Colour log lines by level."""

    COLORS = {
        logging.DEBUG: Style.DIM,
        logging.INFO: Fore.CYAN,
        logging.WARNING: Fore.YELLOW,
        logging.ERROR: Fore.RED,
        logging.CRITICAL: Fore.RED + Style.BRIGHT,
    }

    def format(self, record: logging.LogRecord) -> str:
        color = self.COLORS.get(record.levelno, "")
        return f"{color}{super().format(record)}{Style.RESET_ALL}"


def configure_logging(level: Union[int, str]) -> logging.Handler:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(LevelColorFormatter("%(levelname)s %(name)s: %(message)s"))
    logging.basicConfig(level=level, handlers=[handler], force=True)
    return handler


def print_header(text: str):
    """Print a formatted header"""
    print(f"\n{Fore.CYAN}{'=' * 60}")
    print(f"{Fore.CYAN}{text.center(60)}")
    print(f"{Fore.CYAN}{'=' * 60}{Style.RESET_ALL}")


def print_step(action: str, details: str = ""):
    print(f"{Fore.YELLOW}{action}{Style.RESET_ALL}")
    if details:
        print(f"  {Fore.WHITE}{details}{Style.RESET_ALL}")


def print_result(label: str, value, ok: Optional[bool] = None):
    """Print one result line; green or red when ok is given."""
    color = Fore.MAGENTA if ok is None else (Fore.GREEN if ok else Fore.RED)
    print(f"  {color}{label}: {value}{Style.RESET_ALL}")


def print_error(error: str):
    print(f"{Fore.RED}error: {error}{Style.RESET_ALL}", file=sys.stderr)


def load_problem(path: Union[str, Path], command: str, which: Optional[str] = None) -> Optional[ProblemFile]:
    """Parse and validate a problem file; diagnostics go to standard error and None comes back."""
    parser = ProblemParser()
    try:
        problem = parser.parse_file(path)
    except ProblemFileError as exc:
        print_error(str(exc))
        return None
    ok, errors = ProblemValidator(parser).validate(problem, command, which)
    for message in errors:
        print_error(message)
    return problem if ok else None


def _solve(spec: ProblemSpec, seed: Optional[SolutionTriple] = None) -> SolveReport:
    compatibility = check_compatibility(spec)
    if not compatibility.passed:
        logger.warning(
            "alpha(x0, z) and beta(y0, z) differ by up to %.3g at z in %s; u takes alpha + beta - alpha(x0, z)",
            compatibility.max_gap, list(compatibility.offending_z),
        )
    return solve_picard(spec, seed)


def _report_summary(report: SolveReport):
    print_result("iterations", report.iterations)
    print_result("final S-norm step", f"{report.final_residual:.3e}")
    print_result("final sup-norm step", f"{report.sup_residual_history[-1]:.3e}")
    print_result("gamma_hat", f"{report.gamma_hat:.4f}")
    print_result("converged", report.converged, report.converged)


def cmd_solve(path: Union[str, Path], out_dir: Union[str, Path]) -> RunResult:
    """Solve a problem; write u.csv, u_d1.csv, u_d2.csv and report.json."""
    problem = load_problem(path, "solve")
    if problem is None:
        return RunResult(ExitCode.INPUT_ERROR)
    try:
        spec = ProblemParser().build_spec(problem)
        print_header(f"SOLVE {spec.name or path}")
        print_step("domain", spec.domain.describe())
        report = _solve(spec)
    except (ProblemFileError, ProblemEvaluationError) as exc:
        print_error(str(exc))
        return RunResult(ExitCode.INPUT_ERROR)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    s = report.solution
    artifacts = [
        write_csv(s.u, out / "u.csv"),
        write_csv(s.u_d1, out / "u_d1.csv"),
        write_csv(s.u_d2, out / "u_d2.csv"),
        write_json(dict(report_record(report)), out / "report.json"),
    ]
    _report_summary(report)
    return RunResult(ExitCode.OK if report.converged else ExitCode.NOT_CONVERGED, artifacts)


def _inconclusive(kind: CertificateKind, note: str) -> Certificate:
    return Certificate(kind=kind, verdict=Verdict.INCONCLUSIVE, notes=(note,))


def _certificate(problem: ProblemFile, which: str, uniform_z: bool) -> Certificate:
    parser = ProblemParser()
    spec = parser.build_spec(problem)

    if which == "constants":
        M, K = parser.build_moduli(problem)
        return contraction_certificate(spec, M, K)

    if which == "unique":
        kernels = parser.build_kernels(problem) if problem.has("kernels", "p") and problem.has("kernels", "r") else None
        seeds = (SolutionTriple.zero(spec.domain), SolutionTriple.constant(spec.domain, 1.0))
        return uniqueness_check(spec, seeds, kernels)

    kernels = parser.build_kernels(problem)
    if which == "depend":
        second = parser.build_spec(problem, domain=spec.domain, second=True)
        return dependence_certificate(spec, second, kernels, (_solve(spec), _solve(second)))

    report = _solve(spec)
    if which == "bound":
        return boundedness_certificate(report, kernels)
    if not report.converged:
        return _inconclusive(CertificateKind.GRONWALL, "the solve did not converge")
    c = float(np.max(np.abs(condition_surface(spec))))
    return verify_gronwall(abs(report.solution.u), kernels, c, uniform_in_z=uniform_z)


def cmd_certify(path: Union[str, Path], which: str, out_dir: Union[str, Path], uniform_z: bool = False) -> RunResult:
    """Run one certificate; write certificate.jsonl and, when a bound is asserted, bound.csv and observed.csv."""
    problem = load_problem(path, "certify", which)
    if problem is None:
        return RunResult(ExitCode.INPUT_ERROR)
    print_header(f"CERTIFY {which.upper()}")
    try:
        cert = _certificate(problem, which, uniform_z)
    except (ProblemFileError, ProblemEvaluationError) as exc:
        print_error(str(exc))
        return RunResult(ExitCode.INPUT_ERROR)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = [write_jsonl([dict(certificate_record(cert))], out / "certificate.jsonl")]
    if cert.bound is not None:
        artifacts.append(write_csv(cert.bound, out / "bound.csv"))
    if cert.observed is not None:
        artifacts.append(write_csv(cert.observed, out / "observed.csv"))

    print_result("verdict", cert.verdict.value, cert.passed)
    if cert.margin is not None:
        print_result("margin", f"{cert.margin:.6g}")
    for name, value in cert.metadata.items():
        print_result(name, value)
    for note in cert.notes:
        print_step("note", note)
    if cert.worst is not None:
        w = cert.worst
        print_step("worst point", f"(x={w.x!r}, y={w.y!r}, z={w.z!r}) bound {w.bound:.6g}, observed {w.observed:.6g}")
    return RunResult(VERDICT_EXIT[cert.verdict], artifacts)


def cmd_selftest(seed: int, instances: int = 200) -> RunResult:
    """Run the oracle suite and print its table; exit 0 iff every family passes."""
    print_header(f"SELFTEST (seed {seed})")
    rows = run_selftest(seed, instances)
    width = max(len(row["family"]) for row in rows)
    for row in rows:
        status = f"{Fore.GREEN}PASS" if row["passed"] else f"{Fore.RED}FAIL"
        print(f"  {row['family']:<{width}}  {status}{Style.RESET_ALL}  {row['checks']:>5}  {row['detail']}")
    passed = all(row["passed"] for row in rows)
    print_result("families", f"{sum(row['passed'] for row in rows)}/{len(rows)} passed", passed)
    return RunResult(ExitCode.OK if passed else ExitCode.CERTIFICATE_FAILED)


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsde", description=__doc__.strip().splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logging")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="solve a problem by Picard iteration")
    solve.add_argument("file", help="problem file")
    solve.add_argument("-o", "--out", default=".", help="output directory")

    certify = commands.add_parser("certify", help="check one of the bounds on a problem")
    certify.add_argument("file", help="problem file")
    certify.add_argument("--which", required=True, choices=CERTIFICATES)
    certify.add_argument("-o", "--out", default=".", help="output directory")
    certify.add_argument("--uniform-z", action="store_true",
                         help="gronwall: use the surface that is uniform in z")

    selftest = commands.add_parser("selftest", help="run the built-in oracle suite")
    selftest.add_argument("--seed", type=int, default=settings.seed)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    init(autoreset=True)
    handler = None
    try:
        try:
            settings = Settings.from_env()
        except ValueError as exc:
            print_error(f"invalid settings: {exc}")
            return int(ExitCode.INPUT_ERROR)
        parser = build_parser(settings)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(ExitCode.OK) if exc.code == 0 else int(ExitCode.INPUT_ERROR)

        level = {0: settings.log_level, 1: "INFO"}.get(args.verbose, "DEBUG")
        handler = configure_logging(level)

        try:
            if args.command == "solve":
                result = cmd_solve(args.file, args.out)
            elif args.command == "certify":
                result = cmd_certify(args.file, args.which, args.out, args.uniform_z)
            else:
                result = cmd_selftest(args.seed, settings.sweep_instances)
        except Exception as exc:
            logger.exception("unexpected failure in %s", args.command)
            print_error(f"internal error: {exc}")
            return int(ExitCode.INTERNAL_ERROR)
        return int(result.exit_code)
    finally:
        if handler is not None:
            logging.getLogger().removeHandler(handler)
        deinit()


if __name__ == "__main__":
    sys.exit(main())
