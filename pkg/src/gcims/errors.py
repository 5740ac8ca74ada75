"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to:
2 for bad data, 3 for invalid configuration, 4 for missing input.
"""


class GcimsError(Exception):
    exit_code = 1


class DataError(GcimsError):
    exit_code = 2


class ConfigError(GcimsError, ValueError):
    exit_code = 3


class MissingInput(GcimsError):
    exit_code = 4


# container / file parsing
class BadMagic(DataError):
    pass


class UnsupportedVersion(DataError):
    pass


class TruncatedPayload(DataError):
    pass


class MalformedHeader(DataError):
    pass


class MalformedMetadata(DataError):
    pass


class NoValidSamples(DataError):
    pass


class UnlabeledSamples(DataError):
    pass


class DimensionMismatch(DataError, ValueError):
    pass


class DegenerateSpectrum(DataError, ValueError):
    pass


class DegenerateData(DataError, ValueError):
    pass


class SingleClassTraining(DataError, ValueError):
    pass


class EmptyNode(GcimsError, ValueError):
    pass


class LengthMismatch(GcimsError, ValueError):
    pass


class MissingMetadataFile(MissingInput, FileNotFoundError):
    pass


# configuration
class ConfigInvalid(ConfigError):
    pass


class WindowTooLarge(ConfigError):
    pass


class KTooLarge(ConfigError):
    pass


class ClassTooSmall(ConfigError):
    pass
