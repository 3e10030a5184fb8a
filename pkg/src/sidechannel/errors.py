"""Exception hierarchy shared by every module."""


class SideChannelError(Exception):
    """Base class; the CLI maps subclasses to exit code 3."""


class EmptyStream(SideChannelError):
    pass


class InsufficientData(SideChannelError):
    pass


class BadCorpusLayout(SideChannelError):
    pass


class EmptyClass(SideChannelError):
    pass


class EmptyDataset(SideChannelError):
    pass


class BadAttribute(SideChannelError):
    pass


class BadParameter(SideChannelError):
    pass


class NotBinary(SideChannelError):
    pass


class ShapeError(SideChannelError):
    pass


class ParseError(SideChannelError):
    """Malformed input file. ``location`` is a line number or byte offset."""

    def __init__(self, message: str, location: int | None = None):
        self.location = location
        super().__init__(message)
