# pylint: disable=attribute-defined-outside-init
from __future__ import annotations
import abc
from pathlib import Path
from typing import Optional

from shearlab import config
from shearlab.adapters import repository


class AbstractUnitOfWork(abc.ABC):
    artifacts: repository.AbstractRepository

    # executed when we enter the with block
    def __enter__(self) -> AbstractUnitOfWork:
        return self

    # executed when we exit the with block
    def __exit__(self, *args):
        self.rollback()

    def commit(self):
        self._commit()

    '''
    After committing, we run through every artifact the repository has seen
    and pass its events to the message bus.
    '''
    def collect_new_events(self):
        for artifact in self.artifacts.seen:
            while artifact.events:
                yield artifact.events.pop(0)

    @abc.abstractmethod
    def _commit(self):
        raise NotImplementedError

    '''
    If we don't commit, or if we leave the block by raising, staged artifacts
    are dropped. The rollback has no effect once commit() has run.
    '''
    @abc.abstractmethod
    def rollback(self):
        raise NotImplementedError


class FileSystemUnitOfWork(AbstractUnitOfWork):
    def __init__(self, directory: Optional[Path] = None):
        self.directory = Path(directory or config.get_output_dir())

    def __enter__(self):
        self.artifacts = repository.FileSystemRepository(self.directory)
        return super().__enter__()

    def _commit(self):
        self.artifacts.flush()
        self.artifacts.discard()

    def rollback(self):
        self.artifacts.discard()
