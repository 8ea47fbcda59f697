import regex as re


KERNEL_IDENTITY_TOL = 1e-12
DISSIPATION_TOL = 1e-10

SOE_MIN_ORDER = 8
SOE_ORDER_STEP = 4
SOE_TAIL_HEADROOM = 1.1

SINGULARITY_POINTS = ((0.25, 0.25), (0.5, 0.25), (0.25, 0.75))

MAX_BOUND_SLACK = 1e-10

# Example 4.2 / §4.4 configuration
COARSEN_LENGTH = 6.283185307179586
COARSEN_M1 = 128
COARSEN_EPSILON = 0.05
COARSEN_T0 = 0.01
COARSEN_N0 = 30
COARSEN_GAMMA = 3.0
RANDOM_AMPLITUDE = 1e-3

MANUFACTURED_EPSILON = 0.1
MANUFACTURED_LENGTH = 1.0

SNAPSHOT_HEADER_BYTES = 16

CONFIG_LINE_REGEX = re.compile(r"^\s*(?P<key>[\p{L}_][\p{L}\p{N}_\-]*)\s*=\s*(?P<value>.*?)\s*$")
CONFIG_LIST_SPLIT_REGEX = re.compile(r"[,\s]+")
