import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from pydantic import ValidationError

from dynamics import KernelPair, ProblemKind, ProblemSpec, ProductDomain, create_domain
from dynamics.inequalities import P_INPUTS, R_INPUTS
from dynamics.problem import ALPHA_INPUTS, BETA_INPUTS, INPUTS
from expr_parser import ExprError, Expression
from timescales import TimeScale, TimeScaleError, create_scale


class ProblemFileError(ValueError):
    """A problem file could not be read; line is 1-based, None for file-level errors."""

    def __init__(self, message: str, line: Optional[int] = None, path: str = ""):
        self.message = message
        self.line = line
        self.path = path
        super().__init__(self.location() + message)

    def location(self) -> str:
        where = self.path or "<problem>"
        return f"{where}:{self.line}: " if self.line is not None else f"{where}: "


@dataclass
class Entry:
    value: str
    line: int


@dataclass
class ProblemFile:
    path: str = ""
    sections: Dict[str, Dict[str, Entry]] = field(default_factory=dict)
    section_lines: Dict[str, int] = field(default_factory=dict)

    def has(self, section: str, key: Optional[str] = None) -> bool:
        if section not in self.sections:
            return False
        return key is None or key in self.sections[section]

    def get(self, section: str, key: str) -> Optional[Entry]:
        return self.sections.get(section, {}).get(key)

    def error(self, message: str, line: Optional[int] = None) -> ProblemFileError:
        return ProblemFileError(message, line, self.path)


class ProblemParser:
    """Parse the line-oriented problem format into sections and build the library objects from them."""

    SECTION_KEYS = {
        "domain": ("t1", "t2", "zscale"),
        "equation": ("kind", "F", "G", "f", "j"),
        "conditions": ("alpha", "beta"),
        "weights": ("lambda", "tol", "max_iter"),
        "kernels": ("p", "r", "M", "K"),
        "conditions2": ("alpha2", "beta2"),
    }

    SECTION_PATTERN = re.compile(r"^\[\s*([A-Za-z0-9_]+)\s*\]$")
    ENTRY_PATTERN = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")
    SCALE_PATTERN = re.compile(r"^(uniform|integers|qscale|points)\s*\((.*)\)$")
    DECIMAL_PATTERN = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")

    # A reduced problem calls its forcing and kernel f and j.
    EQUATION_KEYS = {ProblemKind.FULL: ("F", "G"), ProblemKind.REDUCED: ("f", "j")}

    def parse_text(self, text: str, path: str = "") -> ProblemFile:
        """Split a problem file into sections of key = value entries."""
        problem = ProblemFile(path=path)
        current = None
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue

            header = self.SECTION_PATTERN.match(line)
            if header:
                current = header.group(1).lower()
                if current not in self.SECTION_KEYS:
                    raise problem.error(f"unknown section [{current}]", number)
                if current in problem.sections:
                    raise problem.error(f"section [{current}] appears twice", number)
                problem.sections[current] = {}
                problem.section_lines[current] = number
                continue

            entry = self.ENTRY_PATTERN.match(line)
            if not entry:
                raise problem.error(f"expected 'key = value' or '[section]', found {line!r}", number)
            if current is None:
                raise problem.error("entry before the first section", number)
            key, value = entry.group(1), entry.group(2).strip()
            if key not in self.SECTION_KEYS[current]:
                allowed = ", ".join(self.SECTION_KEYS[current])
                raise problem.error(f"unknown key {key!r} in [{current}] (expected one of {allowed})", number)
            if key in problem.sections[current]:
                raise problem.error(f"{key} is given twice in [{current}]", number)
            if not value:
                raise problem.error(f"{key} has no value", number)
            problem.sections[current][key] = Entry(value, number)
        return problem

    def parse_file(self, path: Union[str, Path]) -> ProblemFile:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise ProblemFileError(f"cannot read problem file: {exc}", path=str(path)) from None
        return self.parse_text(text, str(path))

    def kind(self, problem: ProblemFile) -> ProblemKind:
        entry = problem.get("equation", "kind")
        if entry is None:
            return ProblemKind.FULL
        try:
            return ProblemKind(entry.value.strip().lower())
        except ValueError:
            raise problem.error(f"kind must be full or reduced, got {entry.value!r}", entry.line) from None

    def number(self, problem: ProblemFile, section: str, key: str) -> Optional[float]:
        """A decimal number entry, or None when absent."""
        entry = problem.get(section, key)
        if entry is None:
            return None
        return self._decimal(problem, entry.value, entry.line, key)

    def _decimal(self, problem: ProblemFile, text: str, line: int, what: str) -> float:
        text = text.strip()
        if not self.DECIMAL_PATTERN.match(text):
            raise problem.error(f"{what}: {text!r} is not a decimal number", line)
        value = float(text)
        if not math.isfinite(value):
            raise problem.error(f"{what}: {text!r} is out of range", line)
        return value

    def scale(self, problem: ProblemFile, key: str) -> TimeScale:
        entry = problem.get("domain", key)
        if entry is None:
            raise problem.error(f"[domain] needs {key}", problem.section_lines.get("domain"))
        match = self.SCALE_PATTERN.match(entry.value)
        if not match:
            raise problem.error(
                f"{key}: expected uniform(start,stop,n), integers(a,b), qscale(t0,q,n) or points(v1,...)",
                entry.line,
            )
        arguments = match.group(2).split(",") if match.group(2).strip() else []
        values = [self._decimal(problem, a, entry.line, key) for a in arguments]
        try:
            return create_scale(match.group(1), *values)
        except (TimeScaleError, ValidationError) as exc:
            raise problem.error(f"{key}: {exc}", entry.line) from None

    def build_domain(self, problem: ProblemFile) -> ProductDomain:
        t1, t2, zscale = (self.scale(problem, key) for key in ("t1", "t2", "zscale"))
        try:
            return create_domain(t1, t2, zscale)
        except ValidationError as exc:
            raise problem.error(f"invalid domain: {_first_message(exc)}", problem.section_lines["domain"]) from None

    def expression(self, problem: ProblemFile, section: str, key: str, label: Optional[str] = None) -> Expression:
        entry = problem.get(section, key)
        if entry is None:
            raise problem.error(f"[{section}] needs {key}", problem.section_lines.get(section))
        try:
            return Expression(entry.value, label or key)
        except ExprError as exc:
            raise problem.error(f"{key}: {exc}", entry.line) from None

    def build_spec(self, problem: ProblemFile, domain: Optional[ProductDomain] = None,
                   second: bool = False) -> ProblemSpec:
        """The problem of [equation], [conditions] (or [conditions2]) and [weights]."""
        domain = domain or self.build_domain(problem)
        kind = self.kind(problem)
        forcing_key, kernel_key = self.EQUATION_KEYS[kind]
        if second:
            alpha = self.expression(problem, "conditions2", "alpha2")
            beta = self.expression(problem, "conditions2", "beta2")
        else:
            alpha = self.expression(problem, "conditions", "alpha")
            beta = self.expression(problem, "conditions", "beta")

        controls = {}
        for key, name in (("lambda", "lam"), ("tol", "tol"), ("max_iter", "max_iter")):
            value = self.number(problem, "weights", key)
            if value is None:
                continue
            if name == "max_iter":
                if value != int(value):
                    raise problem.error("max_iter must be an integer", problem.get("weights", key).line)
                value = int(value)
            controls[name] = value

        try:
            return ProblemSpec(
                domain=domain,
                kind=kind,
                forcing=self.expression(problem, "equation", forcing_key),
                kernel=self.expression(problem, "equation", kernel_key),
                alpha=alpha,
                beta=beta,
                name=Path(problem.path).stem if problem.path else "",
                **controls,
            )
        except ValidationError as exc:
            raise problem.error(f"invalid problem: {_first_message(exc)}", problem.section_lines.get("equation")) from None

    def build_kernels(self, problem: ProblemFile) -> KernelPair:
        return KernelPair(p=self.expression(problem, "kernels", "p"), r=self.expression(problem, "kernels", "r"))

    def build_moduli(self, problem: ProblemFile) -> Tuple[Expression, Expression]:
        return self.expression(problem, "kernels", "M"), self.expression(problem, "kernels", "K")


class ProblemValidator:
    """Check that a parsed file has what a command needs before anything is built."""

    REQUIRED = {
        "solve": (("domain", ()), ("equation", ()), ("conditions", ("alpha", "beta"))),
        "gronwall": (("kernels", ("p", "r")),),
        "bound": (("kernels", ("p", "r")),),
        "depend": (("kernels", ("p", "r")), ("conditions2", ("alpha2", "beta2"))),
        "unique": (),
        "constants": (("kernels", ("M", "K")),),
    }

    ROLE_INPUTS = {
        ("conditions", "alpha"): ALPHA_INPUTS,
        ("conditions", "beta"): BETA_INPUTS,
        ("conditions2", "alpha2"): ALPHA_INPUTS,
        ("conditions2", "beta2"): BETA_INPUTS,
        ("kernels", "p"): P_INPUTS,
        ("kernels", "r"): R_INPUTS,
        ("kernels", "M"): P_INPUTS,
        ("kernels", "K"): R_INPUTS,
    }

    def __init__(self, parser: Optional[ProblemParser] = None):
        self.parser = parser or ProblemParser()

    def check_sections(self, problem: ProblemFile, command: str, which: Optional[str] = None) -> Tuple[bool, List[str]]:
        """Required sections and keys for solve, and additionally for certify --which."""
        errors = []
        needs = list(self.REQUIRED["solve"])
        if command == "certify" and which is not None:
            needs.extend(self.REQUIRED[which])

        for section, keys in needs:
            if not problem.has(section):
                suffix = f" for certify --which {which}" if section not in dict(self.REQUIRED["solve"]) else ""
                errors.append(f"{problem.path or '<problem>'}: missing [{section}] section{suffix}")
                continue
            for key in keys:
                if not problem.has(section, key):
                    line = problem.section_lines[section]
                    errors.append(f"{problem.path or '<problem>'}:{line}: [{section}] needs {key}")

        if problem.has("domain"):
            for key in ProblemParser.SECTION_KEYS["domain"]:
                if not problem.has("domain", key):
                    errors.append(f"{problem.path or '<problem>'}:{problem.section_lines['domain']}: [domain] needs {key}")
        return len(errors) == 0, errors

    def check_expressions(self, problem: ProblemFile) -> Tuple[bool, List[str]]:
        """Every expression parses and reads only the variables of its role."""
        errors = []
        try:
            kind = self.parser.kind(problem)
        except ProblemFileError as exc:
            return False, [str(exc)]

        roles = dict(self.ROLE_INPUTS)
        forcing_key, kernel_key = ProblemParser.EQUATION_KEYS[kind]
        roles[("equation", forcing_key)] = INPUTS[(kind, "forcing")]
        roles[("equation", kernel_key)] = INPUTS[(kind, "kernel")]
        other = ProblemParser.EQUATION_KEYS[ProblemKind.REDUCED if kind == ProblemKind.FULL else ProblemKind.FULL]
        if problem.has("equation"):
            for key in (forcing_key, kernel_key):
                if not problem.has("equation", key):
                    errors.append(str(problem.error(f"[equation] of a {kind.value} problem needs {key}", problem.section_lines["equation"])))

        for section, entries in problem.sections.items():
            for key, entry in entries.items():
                if section == "equation" and key in other:
                    errors.append(str(problem.error(f"{key} belongs to a {'reduced' if kind == ProblemKind.FULL else 'full'} problem", entry.line)))
                    continue
                allowed = roles.get((section, key))
                if allowed is None:
                    continue
                try:
                    Expression(entry.value, key, allowed=allowed)
                except ExprError as exc:
                    errors.append(str(problem.error(f"{key}: {exc}", entry.line)))
        return len(errors) == 0, errors

    def validate(self, problem: ProblemFile, command: str, which: Optional[str] = None) -> Tuple[bool, List[str]]:
        _, section_errors = self.check_sections(problem, command, which)
        _, expression_errors = self.check_expressions(problem)
        errors = section_errors + expression_errors
        return len(errors) == 0, errors


def _first_message(exc: ValidationError) -> str:
    first = exc.errors()[0]
    return first.get("msg", str(exc)).removeprefix("Value error, ")
