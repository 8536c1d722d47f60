"""Exception hierarchy.

Everything raised on purpose by the library derives from ``MatchVerifyError``
so callers (and the CLI) can map failures to exit codes by class.
"""


class MatchVerifyError(Exception):
    """Base class for library errors."""


class MalformedInput(MatchVerifyError, ValueError):
    pass


class MalformedDistribution(MalformedInput):
    pass


class UnknownCorrespondence(MatchVerifyError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class CapExceeded(MatchVerifyError):
    pass


class InstanceTooLarge(MatchVerifyError):
    pass


class InconsistentAnswer(MatchVerifyError):
    """An answer has zero probability under every remaining view."""


class DegenerateSchemas(MatchVerifyError):
    pass


class OracleError(MatchVerifyError):
    """Any failure while obtaining a verdict from an oracle."""


class GroundTruthMissing(OracleError):
    pass


class TranscriptMiss(OracleError):
    pass


class HttpFailure(OracleError):
    pass


class ParseFailure(OracleError):
    pass


class MissingSchemaName(MalformedInput):
    pass


class MissingApiKey(OracleError):
    pass
