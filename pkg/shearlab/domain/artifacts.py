from __future__ import annotations
from typing import List, Sequence

from . import events


'''
An Artifact is the aggregate every job produces: one CSV file. It is an
entity identified by its name; rows and comments may keep growing (a decay fit
is appended after the series is written) and it is still the same artifact.
Domain events raised while building it ride along in `events` until the unit
of work collects them.
'''
class Artifact:
    def __init__(self, name: str, header: Sequence[str], rows: Sequence[Sequence[str]] = (),
                 comments: Sequence[str] = ()):
        self.name = name
        self.header = tuple(header)
        self.rows = [tuple(row) for row in rows]  # type: List[tuple]
        self.comments = list(comments)  # type: List[str]
        self.events = []  # type: List[events.Event]

    def __repr__(self):
        return f"<Artifact {self.name} rows={len(self.rows)}>"

    def __eq__(self, other):
        if not isinstance(other, Artifact):
            return False
        return other.name == self.name

    def __hash__(self):
        return hash(self.name)

    def add_row(self, *cells: str):
        if len(cells) != len(self.header):
            raise ValueError(f"{self.name}: row {cells} does not match header {self.header}")
        self.rows.append(tuple(cells))

    def add_comment(self, text: str):
        self.comments.append(text)

    def render(self) -> str:
        lines = [",".join(self.header)]
        lines += [",".join(row) for row in self.rows]
        lines += [f"# {comment}" for comment in self.comments]
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, name: str, text: str) -> Artifact:
        lines = text.splitlines()
        body = [line for line in lines[1:] if not line.startswith("#")]
        comments = [line[2:] for line in lines[1:] if line.startswith("# ")]
        return cls(name, lines[0].split(","), [line.split(",") for line in body if line], comments)
