from abc import ABC, abstractmethod
import logging
import sys
from typing import Any

from colorama import Fore, Style

from app.run_record import Attempt


class AttemptObserver(ABC):
    @abstractmethod
    def update(self, attempt: Attempt):
        """Handle a finished solve call"""
        pass # pragma: no cover


class LoggingObserver(AttemptObserver):
    """Observer that logs every attempt"""
    def update(self, attempt: Attempt) -> None:
        if attempt is None:
            raise AttributeError("Attempt cannot be None")
        logging.info(f"Attempt finished: {attempt}")


class ConsoleObserver(AttemptObserver):
    """Observer that prints coloured progress to stderr"""
    COLOURS = {
        'sat': Fore.GREEN,
        'unsat': Fore.YELLOW,
        'unknown': Fore.RED,
    }

    def __init__(self, stream: Any = None):
        self.stream = stream or sys.stderr

    def update(self, attempt: Attempt) -> None:
        if attempt is None:
            raise AttributeError("Attempt cannot be None")
        colour = self.COLOURS.get(attempt.status, Fore.WHITE)
        print(colour + str(attempt) + Style.RESET_ALL, file=self.stream)
