import re
import sys


MYPY = False
if MYPY:
    from typing import IO, Optional


PANEL_NAME = "TodaSpectra"
ANSI_ESCAPE_RE = re.compile(r'\x1B\[[0-?]*[ -/]*[@-~]')


def normalize(string):
    # type: (str) -> str
    return ANSI_ESCAPE_RE.sub('', string.replace('\r\n', '\n').replace('\r', '\n'))


def display_panel(message, stream=None):
    # type: (str, Optional[IO[str]]) -> None
    """Write a titled message block to stderr (or `stream`)."""
    stream = stream or sys.stderr
    append_to_panel(stream, "[{}] ".format(PANEL_NAME))
    append_to_panel(stream, message if message.endswith("\n") else message + "\n")


def append_to_panel(stream, message):
    # type: (IO[str], str) -> None
    stream.write(normalize(message))
    stream.flush()
