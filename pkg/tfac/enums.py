from enum import Enum


class Command(str, Enum):
    CONVERGE = "converge"
    MAXBOUND = "maxbound"
    SINGULARITY = "singularity"
    COARSEN = "coarsen"
    ADAPTIVE = "adaptive"
    VERIFY_KERNELS = "verify-kernels"
    VERIFY_SOE = "verify-soe"


class StepperMode(str, Enum):
    DIRECT = "direct"
    FAST = "fast"


class EigenvalueKind(str, Enum):
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"


class SnapshotFormat(str, Enum):
    BIN = "bin"
    CSV = "csv"
