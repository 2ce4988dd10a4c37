"""padextract: produce PADEMB1 embedding files from image directories.

Runs a torchvision Inception-v3 and keeps the 2048-dimensional pool3
feature vector per image, so any PADEMB1 consumer (padbench's ``fid``
module in particular) can compare image sets.
"""

__version__ = "0.1.0"


class ExtractError(Exception):
    exit_code = 2


class EmptyDirectory(ExtractError):
    pass


class ModelLoadFailure(ExtractError):
    pass
