"""Run manifests: what a command produced, from which configuration.

Each CLI verb writes one JSON manifest listing every file it created
together with its sha256 digest, the configuration hash, the package
version, and (where an autoencoder was involved) the weight
fingerprint, so any result file can be traced back to its inputs.
"""

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .config import config_hash


@dataclass
class RunManifest:
    command: str
    config_hash: str
    version: str = __version__
    created: str = ""
    ae_fingerprint: str = ""
    files: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)

    def add_file(self, path, digest):
        # Keys are stored relative to the run root so manifests stay
        # meaningful when the run directory moves.
        path = Path(path)
        root = getattr(self, "root", None)
        if root is not None:
            try:
                path = path.resolve().relative_to(Path(root).resolve())
            except (ValueError, OSError):
                pass
        self.files[path.as_posix()] = digest

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def new_manifest(command, config):
    man = RunManifest(
        command=command,
        config_hash=config_hash(config),
        created=time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    )
    man.root = Path(config.out_dir)
    return man


def load_manifest(path):
    with open(path) as fh:
        return RunManifest(**json.load(fh))
