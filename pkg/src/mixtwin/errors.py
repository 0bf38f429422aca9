"""Exception hierarchy shared by all mixtwin modules."""


class MixtwinError(Exception):
    """Base class for all errors raised by this package."""


# -- coordinate frames / geometry ------------------------------------------

class FrameMismatch(MixtwinError):
    """A transform was applied to data expressed in a different frame."""


class NonPositiveDt(MixtwinError):
    """An integration step was requested with dt <= 0 (or above the cap)."""


class EmptyTrack(MixtwinError):
    """A track operation needs at least one segment."""


class UnknownNamedPoint(MixtwinError):
    """A named track point (A..F) is not defined on this track."""


# -- wire protocol -----------------------------------------------------------

class SchemaViolation(MixtwinError):
    """Envelope payload does not match the schema for its message type."""


class MalformedFrame(MixtwinError):
    """Byte stream is not a valid length-prefixed frame."""


class OversizeFrame(MixtwinError):
    """Frame length prefix exceeds the 1 MiB limit."""


# -- hub ---------------------------------------------------------------------

class UnknownVehicle(MixtwinError):
    """Referenced vehicle_id is not registered."""


class UnknownSource(MixtwinError):
    """Referenced source_id is not known to the correspondence table."""


class UnmappedSource(MixtwinError):
    """Instruction arrived from a source with no vehicle mapping."""


class UnknownTarget(MixtwinError):
    """Instruction routed to a vehicle that is not registered."""


class ConflictingSource(MixtwinError):
    """Vehicle already has a source mapped on the requested channel."""


class DuplicateRegistration(MixtwinError):
    """entity_id already registered in this session."""


class RegistrationRefused(MixtwinError):
    """The hub rejected this client's Register handshake."""


class IoFailure(MixtwinError):
    """Log export or import failed at the OS level."""


# -- controllers -------------------------------------------------------------

class MissingPredecessor(MixtwinError):
    """A follower controller was invoked without a predecessor state."""


# -- scenario harness --------------------------------------------------------

class NoPerturbation(MixtwinError):
    """Amplification ratio requested for a run whose trigger never fired."""


class SettlingTimeout(MixtwinError):
    """Platoon failed to reach steady state within the settling budget."""


class AgentLost(MixtwinError):
    """A vehicle agent disconnected during a distributed run."""


class BadLog(MixtwinError):
    """Pool log file is missing columns or is otherwise unreadable."""


class ConfigError(MixtwinError):
    """Configuration or scenario file failed to parse or validate."""
