from .main import EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK, EXIT_ORDERING, build_parser, main, run
from .manifest import ExperimentManifest, default_manifest_path, derive_seeds, load_manifest

__all__ = [
    "EXIT_CONFIG",
    "EXIT_DIVERGED",
    "EXIT_OK",
    "EXIT_ORDERING",
    "ExperimentManifest",
    "build_parser",
    "default_manifest_path",
    "derive_seeds",
    "load_manifest",
    "main",
    "run",
]
