"""Pydantic models for CLI jobs and the reports they print."""

from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from arith_kernel import rat_str

Command = Literal["field", "eisenstein", "lvalue", "cmcycle", "verify"]
OutputFormat = Literal["json", "csv", "text"]


def _parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"'{text}' is not a rational number")


class JobConfig(BaseModel):
    """One CLI invocation: field descriptor plus numerical parameters."""

    command: Command
    D: int
    delta: Tuple[str, str]  # delta = a + b*sqrt(D), as exact rationals
    m_max: int = 20
    precision: int = 128
    trace_bound: int = 200
    s: str = "0"
    cache_dir: Optional[str] = None
    format: OutputFormat = "json"
    principal_part: Dict[int, int] = Field(default_factory=lambda: {-1: 1})
    use_cache: bool = True

    @field_validator("delta", mode="before")
    @classmethod
    def split_delta(cls, value):
        if isinstance(value, str):
            parts = value.split(",")
            if len(parts) != 2:
                raise ValueError("delta must be given as 'a,b' for a + b*sqrt(D)")
            value = parts
        a, b = (rat_str(_parse_rational(str(x))) for x in value)
        return (a, b)

    @field_validator("m_max", "trace_bound")
    @classmethod
    def positive(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("bounds must be positive")
        return value

    @field_validator("precision")
    @classmethod
    def enough_bits(cls, value: int) -> int:
        if value < 64:
            raise ValueError("precision must be at least 64 bits")
        return value

    @field_validator("principal_part")
    @classmethod
    def negative_exponents(cls, value: Dict[int, int]) -> Dict[int, int]:
        if any(n >= 0 for n in value):
            raise ValueError("principal part exponents must be negative")
        return {n: c for n, c in sorted(value.items()) if c}

    @property
    def delta_coords(self) -> Tuple[Fraction, Fraction]:
        return Fraction(self.delta[0]), Fraction(self.delta[1])

    def descriptor(self) -> Dict[str, Any]:
        return {"D": self.D, "delta": list(self.delta)}

    def parameters(self) -> Dict[str, Any]:
        """Parameters that change the result of this command."""
        if self.command == "eisenstein":
            return {"m_max": self.m_max}
        if self.command == "lvalue":
            return {"s": self.s, "precision": self.precision}
        if self.command == "cmcycle":
            return {"precision": self.precision}
        if self.command == "verify":
            return {
                "precision": self.precision,
                "trace_bound": self.trace_bound,
                "principal_part": {str(n): c for n, c in self.principal_part.items()},
            }
        return {}


class Report(BaseModel):
    """Base for printable reports."""

    model_config = ConfigDict(populate_by_name=True)

    def as_dict(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True, exclude_none=True)

    def csv_rows(self) -> List[List[str]]:
        data = self.as_dict()
        scalars = [k for k, v in data.items() if not isinstance(v, (dict, list))]
        return [scalars, [str(data[k]) for k in scalars]]

    def text_lines(self) -> List[str]:
        return [f"{k}: {v}" for k, v in self.as_dict().items()]


class FieldReport(Report):
    D: int
    delta: Dict[str, str]
    d_E: int
    D_tilde: int
    rel_disc: Dict[str, Any]
    w_E: int
    delta_index: int
    h_E: int
    h_F: int
    lambda_zero: str
    reflex: Optional[Dict[str, Any]] = None


class BmTableReport(Report):
    field: Dict[str, Any]
    m_max: int
    constant: Dict[str, Any]
    b: Dict[str, Dict[str, Any]]

    def csv_rows(self) -> List[List[str]]:
        rows = [["m", "prime", "coefficient"]]
        for m, value in self.b.items():
            logs = value.get("logs", {})
            if not logs:
                rows.append([m, "", "0"])
            for p, c in logs.items():
                rows.append([m, p, c])
        return rows


class LValueReport(Report):
    field: Dict[str, Any]
    s: str
    value: List[str]
    derivative_at_zero: Optional[List[str]] = None
    exact_at_zero: str
    precision: int


class CMCycleReport(Report):
    field: Dict[str, Any]
    points: List[Dict[str, Any]]
    pairs: List[Dict[str, Any]]
    multiplicity_per_point: str
    class_group_order: int
    degree: str
    c_prime: str

    def csv_rows(self) -> List[List[str]]:
        rows = [["key", "z1_re", "z1_im", "z2_re", "z2_im", "multiplicity"]]
        for p in self.points:
            (a, b), (c, d) = p["z"]
            rows.append([p["key"], a, b, c, d, p["multiplicity"]])
        return rows


class VerifyReport(Report):
    analytic: List[str]
    arithmetic_symbolic: Dict[str, Any]
    arithmetic_numeric: List[str]
    passed: bool = Field(alias="pass")
    trace_bound: int
    c_prime: str
    phi: Dict[str, Any]
    points: List[Dict[str, Any]] = Field(default_factory=list)
    certificate: Optional[Dict[str, Any]] = None
    form: Optional[Dict[str, Any]] = None


class ObstructionReport(Report):
    D: int
    principal_part: Dict[str, int]
    weights_tried: List[int]
    rank: int
    conditions: int
    message: str


class ErrorReport(Report):
    error: str
    message: str
    exit_code: int
    details: Optional[Dict[str, Any]] = None
