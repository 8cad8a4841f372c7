"""Exception hierarchy for the harness.

Every error raised on purpose derives from KartError so callers (and the CLI)
can map failures onto exit codes: configuration/validation problems exit 1,
I/O and protocol problems exit 2.
"""


class KartError(Exception):
    """Base class for all harness errors."""


class ConfigurationError(KartError):
    """Bad parameters, empty lexicons, impossible settings."""


class ValidationError(KartError):
    """A domain-type invariant does not hold."""


class DataIntegrityError(ValidationError):
    """Cross-referenced data is inconsistent (unknown patient_id, etc.)."""


class ParseError(KartError):
    """Malformed serialized input. Carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TemplateError(ConfigurationError):
    """A document template references an attribute that does not exist."""


class SizeError(ConfigurationError):
    """Requested subset sizes exceed what is available."""


class TrainingError(KartError):
    """Scorer training cannot proceed (e.g. empty corpus)."""


class UnknownTokenError(KartError):
    """A requested candidate token is not in the scorer vocabulary."""


class UnsupportedCapabilityError(KartError):
    """The scorer kind does not implement the requested capability."""


class DegenerateDistributionError(KartError):
    """All candidate probabilities collapsed to zero for a mention."""


class UndefinedMetricError(KartError):
    """A metric was requested over an empty input."""


class ScenarioViolationError(ValidationError):
    """A KART scenario tuple violates the taxonomy rules."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class PlanResourceError(KartError):
    """The world does not supply a resource the attack plan requires."""


class ProvenanceMismatchError(KartError):
    """Model provenance contradicts the scenario (wrong anonymizer, etc.)."""


class ProtocolError(KartError):
    """Wire-protocol handshake or contract failure (not retryable)."""


class TransportError(KartError):
    """Network-level failure talking to an external scorer (retryable)."""
