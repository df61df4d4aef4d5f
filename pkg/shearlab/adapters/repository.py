import abc
import logging
from pathlib import Path
from typing import Dict, Optional, Set

from shearlab.domain.artifacts import Artifact

logger = logging.getLogger(__name__)


class AbstractRepository(abc.ABC):
    def __init__(self):
        self.seen = set()  # type: Set[Artifact]

    def add(self, artifact: Artifact):
        self._add(artifact)
        self.seen.add(artifact)

    def get(self, name: str) -> Optional[Artifact]:
        artifact = self._get(name)
        if artifact:
            self.seen.add(artifact)
        return artifact

    @abc.abstractmethod
    def _add(self, artifact: Artifact):
        raise NotImplementedError

    @abc.abstractmethod
    def _get(self, name: str) -> Optional[Artifact]:
        raise NotImplementedError


'''
Artifacts added or fetched during a unit of work are staged in memory;
flush() writes every staged artifact to <directory>/<name>.csv. Reads fall
back to the files on disk, so an event handler running in a later unit of
work sees what the command handler committed.
'''
class FileSystemRepository(AbstractRepository):
    def __init__(self, directory: Path):
        super().__init__()
        self.directory = Path(directory)
        self._staged = {}  # type: Dict[str, Artifact]

    def path(self, name: str) -> Path:
        return self.directory / f"{name}.csv"

    def _add(self, artifact):
        self._staged[artifact.name] = artifact

    def _get(self, name):
        if name in self._staged:
            return self._staged[name]
        path = self.path(name)
        if not path.exists():
            return None
        artifact = Artifact.parse(name, path.read_text())
        self._staged[name] = artifact
        return artifact

    def flush(self):
        self.directory.mkdir(parents=True, exist_ok=True)
        for name, artifact in self._staged.items():
            self.path(name).write_text(artifact.render())
            logger.info("wrote %s (%d rows)", self.path(name), len(artifact.rows))

    def discard(self):
        self._staged.clear()
