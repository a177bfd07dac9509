"""Model-file parsing, archiving, observables and the command-line driver."""

from .archive import deserialize, load, save, serialize
from .dsl import ObservableDef, ParsedModel, RunOptions, parse_model, pretty_print
from .observables import evaluate_observables, mandel_q, occupation_to_kelvin, temperature

__all__ = [
    "deserialize", "load", "save", "serialize",
    "ObservableDef", "ParsedModel", "RunOptions", "parse_model",
    "pretty_print",
    "evaluate_observables", "mandel_q", "occupation_to_kelvin", "temperature",
]
