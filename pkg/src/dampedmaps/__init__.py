import importlib.metadata as im

from dampedmaps.backends import MetaBackend

try:
    __version__ = im.version(__package__)
except im.PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.1"
