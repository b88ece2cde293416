"""worldsmith: learned arrangement of game locations, characters, and objects
into playable grid worlds, with interactive suggestion support."""

from importlib.resources import files as _files

__version__ = "0.1.0"

SAMPLE_CORPUS_PATH = _files("worldsmith").joinpath("data/sample_corpus.json")

from . import assembly, corpus, evaluation, generator, ranking, synthetic  # noqa: E402

__all__ = [
    "assembly",
    "corpus",
    "evaluation",
    "generator",
    "ranking",
    "synthetic",
    "SAMPLE_CORPUS_PATH",
    "__version__",
]
