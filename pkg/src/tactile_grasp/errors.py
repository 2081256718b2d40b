"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: OSError -> 2, data and
validation errors -> 3, checkpoint/configuration mismatches -> 4,
anything else -> 1.
"""


class TactileGraspError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(TactileGraspError, ValueError):
    """Operands have incompatible shapes."""

    def __init__(self, op: str, *shapes):
        self.shapes = shapes
        super().__init__(f"{op}: incompatible shapes {' vs '.join(str(s) for s in shapes)}")


class InvalidArgumentError(TactileGraspError, ValueError):
    """An argument is outside its documented domain."""


class EdgeFileError(TactileGraspError, ValueError):
    """An edge-list file failed to parse; carries the offending line number."""

    def __init__(self, path, line_no: int, message: str):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class DegreeProfileError(TactileGraspError, ValueError):
    """A manual edge set violates the required degree profile."""

    def __init__(self, node: int, degree: int, message: str):
        self.node = node
        self.degree = degree
        super().__init__(f"node {node} has degree {degree}: {message}")


class ReadingRangeError(TactileGraspError, ValueError):
    """An electrode reading falls outside the 12-bit sensor range."""

    def __init__(self, finger: str, electrode: int, value):
        self.finger = finger
        self.electrode = electrode
        self.value = value
        super().__init__(
            f"reading {value!r} for finger {finger!r} electrode {electrode} "
            f"outside [0, 4095]"
        )


class CsvSchemaError(TactileGraspError, ValueError):
    """The CSV header is missing required columns."""

    def __init__(self, path, missing):
        self.path = path
        self.missing = tuple(missing)
        super().__init__(f"{path}: missing column(s): {', '.join(self.missing)}")


class CsvRowError(TactileGraspError, ValueError):
    """A CSV data row is malformed; carries the 1-based row number."""

    def __init__(self, path, row_no: int, message: str):
        self.path = path
        self.row_no = row_no
        super().__init__(f"{path}: row {row_no}: {message}")


class CheckpointError(TactileGraspError, ValueError):
    """A model checkpoint is corrupt, truncated, or from an unknown version."""


class EdgeModeMismatchError(TactileGraspError, ValueError):
    """A checkpoint's graph structure disagrees with the requested edges."""


class TrainingDivergedError(TactileGraspError, RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int, batch: int, loss):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}, batch {batch}")
