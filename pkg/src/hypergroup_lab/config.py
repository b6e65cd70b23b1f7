"""Run configuration and default tolerances."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Tolerances:
    uob: float = 1e-10
    gks: float = 1e-10
    hgp: float = 1e-10
    group: float = 1e-9
    hadamard: float = 1e-9
    gks1: float = 1e-12
    eigen: float = 1e-9
    koornwinder: float = 1e-9
    product: float = 1e-8
    heat: float = 1e-6
    volterra: float = 1e-14

    def override(self, value: float | None) -> "Tolerances":
        """Every tolerance replaced by ``value`` (None keeps the defaults)."""
        if value is None:
            return self
        return Tolerances(**{k: value for k in self.__dataclass_fields__})


@dataclass(frozen=True)
class RunConfig:
    command: str
    action: str
    input: str | None = None
    output: str | None = None
    fmt: str = "json"
    tol: float | None = None
    grid: int | None = None
    order: int | None = None
    K: int | None = None
    t: float | None = None
    seed: int = 0
    options: dict = field(default_factory=dict)

    @property
    def tolerances(self) -> Tolerances:
        return Tolerances().override(self.tol)
