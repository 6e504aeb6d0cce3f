from typing import Optional


class JournalNetError(Exception):
    """Base class for data errors. The CLI maps these to exit code 2."""

    exit_code = 2

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.path = path
        self.line = line

    def located(self) -> str:
        """Render the message prefixed with 'file:line:' when known."""
        where = ""
        if self.path:
            where = f"{self.path}:"
            if self.line is not None:
                where += f"{self.line}:"
            where += " "
        elif self.line is not None:
            where = f"line {self.line}: "
        return where + self.message

    def __repr__(self):
        return f"<{type(self).__name__} {self.located()}>"


class UsageError(JournalNetError):
    exit_code = 1


# bib_ingest
class MissingColumn(JournalNetError):
    pass


class EmptyInput(JournalNetError):
    pass


class AliasCycle(JournalNetError):
    pass


# cocit_graph
class EmptyResult(JournalNetError):
    pass


# centrality
class NoConvergence(JournalNetError):
    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class DegenerateInput(JournalNetError):
    pass


# class_rules
class EmptyProduction(JournalNetError):
    pass


class InvalidDossier(JournalNetError):
    pass


# audit
class EmptyGroup(JournalNetError):
    pass


class UnknownJournal(JournalNetError):
    pass


class MissingMedians(JournalNetError):
    pass


class SnapshotOrder(JournalNetError):
    pass


# formats_io
class MalformedHeader(JournalNetError):
    pass


class DanglingEdge(JournalNetError):
    pass


class DuplicateEdge(JournalNetError):
    pass


class MalformedFile(JournalNetError):
    pass


class IoFailure(JournalNetError):
    pass
