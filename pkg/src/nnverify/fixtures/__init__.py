"""Reference models and queries used by the tests and demos."""

from importlib import resources
from pathlib import Path


def path(name: str) -> Path:
    return Path(str(resources.files(__name__).joinpath(name)))


def model(name: str):
    from ..model_io import load_model

    return load_model(path(name))


def query(name: str, input_dim: int = 2):
    from ..query import load_query

    return load_query(path(name), input_dim)
