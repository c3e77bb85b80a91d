import shutil
from pathlib import Path
from typing import Any

from invoke.tasks import task

from .system import PTY, announce


@task
def clean(c_r: Any) -> None:
    """Remove the documentation build folder."""
    shutil.rmtree(Path("site"), ignore_errors=True)


@task
def build(c_r: Any) -> None:
    """Build the Zensical documentation."""
    command = "zensical build --clean"
    announce("Building documentation...", command)
    c_r.run(command, pty=PTY)


@task
def serve(c_r: Any) -> None:
    """Serve the documentation with hot reload."""
    command = "zensical serve"
    announce("Starting documentation server...", command)
    c_r.run(command, pty=PTY)


@task(post=[clean, build], default=True)
def all(c_r: Any) -> None:  # pylint: disable=W0622
    """Clean and build documentation."""
