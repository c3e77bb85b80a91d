"""Reproduce the worked-example bundles and check their manifests."""

from invoke.tasks import task

from .system import PTY, Color, announce, colorize


@task(
    default=True,
    help={
        "which": "Comma-separated example numbers, default from invoke.yaml.",
        "out": "Output directory, default from invoke.yaml.",
        "size": "Override the number of non-empty states S.",
    },
)
def build(c_r, which="", out="", size=0):
    """Generate model, certificate, trajectories, plots, report and manifest of each example."""
    examples = which.replace(",", " ") if which else " ".join(str(w) for w in c_r.bundle_examples)
    command = f"ctmc-bounds examples --which {examples} --out {out or c_r.bundle_dir}"
    if size:
        command += f" --S {size}"
    announce("Building example bundles...", command)
    result = c_r.run(command, pty=PTY, warn=True)
    if result.exited == 1:
        print(colorize("\nA certificate check failed, see report.json.\n", Color.ERROR))


@task(help={"out": "Directory holding the bundles."})
def verify(c_r, out=""):
    """Recompute every checksum listed in the bundle manifests."""
    root = out or c_r.bundle_dir
    command = (
        f"cd {root} && for m in */manifest.json; do d=$(dirname $m); "
        f"jq -r '.files[] | \"\\(.sha256)  \\(.path)\"' $m | (cd $d && sha256sum --quiet -c -); done"
    )
    announce("Verifying bundle checksums...", command)
    c_r.run(command, pty=PTY)
