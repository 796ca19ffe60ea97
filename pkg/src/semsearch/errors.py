"""Exception hierarchy shared by all semsearch modules."""


class SemSearchError(Exception):
    """Base class for every domain error raised by this package."""


class LexiconLoadError(SemSearchError):
    """A required WordNet database file is missing or unreadable."""


class LexiconParseError(SemSearchError):
    def __init__(self, filename, offset, message):
        self.filename = filename
        self.offset = offset
        super().__init__(f"{filename} @ byte {offset}: {message}")


class LexiconIntegrityError(SemSearchError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("hypernym cycle: " + " -> ".join(str(s) for s in self.cycle))


class SynsetNotFoundError(SemSearchError, KeyError):
    def __str__(self):
        return f"synset not found: {self.args[0]}"


class ConfigError(SemSearchError):
    """Bad strategy name, bad flag combination or unreadable config."""


class IndexBuildError(SemSearchError):
    pass


class IndexFormatError(SemSearchError):
    """Base for persisted-index load failures."""


class TruncatedIndexError(IndexFormatError):
    pass


class IndexVersionError(IndexFormatError):
    pass


class IndexChecksumError(IndexFormatError):
    pass


class TrecParseError(SemSearchError):
    def __init__(self, source, location, message):
        self.source = source
        self.location = location
        super().__init__(f"{source}:{location}: {message}")
