"""Exception hierarchy shared by every vidnetsim module."""

from typing import Iterable, Optional


class VidNetSimError(Exception):
    """Base class for all domain errors raised by vidnetsim."""


# sim-core
class SchedulingInPast(VidNetSimError):
    """An event (or a run horizon) was placed before the current simulation time."""


class EngineBusy(VidNetSimError):
    """run_until was called while the engine was already running."""


class InvalidSimTime(VidNetSimError, ValueError):
    """A SimTime would be negative."""


class SimTimeOverflow(VidNetSimError, OverflowError):
    """A SimTime exceeded the 63-bit tick range."""


# topology
class OversizedPacket(VidNetSimError):
    def __init__(self, size_bytes: int, mtu_bytes: int):
        super().__init__(f"packet of {size_bytes} bytes exceeds MTU {mtu_bytes}")
        self.size_bytes = size_bytes
        self.mtu_bytes = mtu_bytes


class MemberNotActive(VidNetSimError):
    """The node is not an active member of the shared channel."""


# video
class DimensionMismatch(VidNetSimError):
    """Frames (or planes) with different dimensions were combined."""


class EmptyInput(VidNetSimError):
    """An operation that needs at least one frame got none."""


class ContainerFormatError(VidNetSimError):
    """A VNS1 container or frame payload could not be parsed."""


# transport
class EmptyPayload(VidNetSimError):
    """A frame with no payload bytes cannot be packetized."""


class MtuTooSmall(VidNetSimError):
    """The MTU leaves no room for payload after the header."""


class DuplicateFragment(VidNetSimError):
    """A fragment was received twice; the receiver counts and ignores it."""


class NegativeDelay(VidNetSimError):
    """A segment was received before it was sent (clock bug)."""


# scenario-cli
class ConfigParseError(VidNetSimError):
    def __init__(self, message: str, *, key: Optional[str] = None, line: Optional[int] = None):
        location = []
        if key is not None:
            location.append(f"key '{key}'")
        if line is not None:
            location.append(f"line {line}")
        text = f"{message} ({', '.join(location)})" if location else message
        super().__init__(text)
        self.key = key
        self.line = line


class ConfigValidationError(VidNetSimError):
    def __init__(self, problems: Iterable[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration: " + "; ".join(self.problems))


class ReportError(VidNetSimError):
    """Writing report files failed."""
