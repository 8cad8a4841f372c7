from .formats import LoadedModel, ModelFormatError, load_model_dir
from .scoring import Backend, CountBackend, RequestError, TinyMlmBackend, backend_for
from .server import create_app

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "CountBackend",
    "LoadedModel",
    "ModelFormatError",
    "RequestError",
    "TinyMlmBackend",
    "backend_for",
    "create_app",
    "load_model_dir",
]
