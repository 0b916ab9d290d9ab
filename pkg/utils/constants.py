# Общие константы по всему проекту
VERSION = "0.4.0"
TOOL_NAME = "prodstate"

# Допуски инвариантов
HERMITIAN_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-9
STATE_TOL = 1e-9
WITNESS_TOL = 1e-7

# Коды возврата CLI
EXIT_OK = 0
EXIT_UNKNOWN_COMMAND = 1
EXIT_INPUT_ERROR = 2
EXIT_SIZE_LIMIT = 3
EXIT_INTERNAL = 4

SOLVERS = ("exact", "relaxation", "direct")
