"""Test tasks."""

from invoke.tasks import task

from .system import COV_BUILD_DIR, COV_SCREEN_NAME, PTY, Color, announce, colorize


@task(
    help={
        "test": "Single test or set of tests in pytest syntax, e.g. tests/test_io.py::TestRecords",
        "pytest_args": "Extra pytest arguments.",
    }
)
def run(c_r, test="", pytest_args="-W ignore::UserWarning"):
    """Run the test suite and the doctests with coverage."""
    command = f"pytest {pytest_args} --cov-report=html:{COV_BUILD_DIR} {test}".strip()
    announce("Running tests...", command)
    c_r.run(command, pty=PTY)


@task
def fast(c_r):
    """Run the tests in parallel without coverage or slow scenarios, stopping at the first failure."""
    command = "pytest -x -n auto --no-cov -p no:cacheprovider -m \"not slow\""
    announce("Running tests in parallel...", command)
    c_r.run(command, pty=PTY)


@task
def doctests(c_r):
    """Run only the docstring examples of the package."""
    command = f"pytest --no-cov {c_r.src_dir}"
    announce("Running doctests...", command)
    c_r.run(command, pty=PTY)


@task
def coverage(c_r):
    """Serve the HTML coverage report in a detached screen session."""
    port = c_r.start_port + 2
    command = (
        f"screen -d -S {COV_SCREEN_NAME} -m python -m http.server --bind localhost --directory {COV_BUILD_DIR} {port}"
    )
    if not PTY:
        print(colorize("Coverage server needs screen; open build/htmlcov/index.html instead.", Color.WARNING))
        return
    announce("Starting coverage server...", command)
    c_r.run(command)
    print(f"--> {colorize(f'http://localhost:{port}')}\n")


@task(default=True)
def all(c_r, test="", pytest_args="-W ignore::UserWarning"):  # pylint: disable=W0622
    """Run all tests and serve the coverage report."""
    run(c_r, test, pytest_args)
    coverage(c_r)
