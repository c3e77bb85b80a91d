"""Platform flags and console helpers shared by the tasks."""

import platform
from enum import Enum

COV_SCREEN_NAME = "coverage"
COV_BUILD_DIR = "build/htmlcov"
PTY = platform.system() != "Windows"
BOLD = "\033[1m"
ENDC = "\033[0m"


class Color(Enum):
    HEADER = "\033[95m"
    COMMAND = "\033[94m"
    OK = "\033[92m"
    WARNING = "\033[93m"
    ERROR = "\033[91m"


def colorize(message: str, color: Color = Color.OK, bold: bool = False) -> str:
    return f"{color.value}{BOLD if bold else ''}{message}{ENDC}"


def announce(title: str, command: str) -> None:
    """Print a task banner followed by the shell command it runs."""
    print(colorize(f"\n{title}\n", Color.HEADER, bold=True))
    print(f">>> {colorize(command, Color.COMMAND)}\n")
