# Constants for better maintainability
class Constants:
    LOSS_CLASSIFICATION = "classification"
    LOSS_REGRESSION = "regression"

    ACTIVATION_RELU = "relu"
    ACTIVATION_TANH = "tanh"
    ACTIVATION_IDENTITY = "identity"

    SCHEDULE_DETERMINISTIC = "deterministic"
    SCHEDULE_DIRICHLET = "dirichlet"
    SCHEDULE_FIXED = "fixed"

    MODE_SCRATCH = "scratch"
    MODE_EXPAND = "expand"

    OPTIMIZER_ADAM = "adam"
    OPTIMIZER_SGD = "sgd"

    DATA_SYNTHETIC = "synthetic"
    DATA_MULTIMNIST = "multimnist"

    # Dirichlet concentration floor once annealing drives p(1 - tau) to zero
    DIRICHLET_MIN_CONCENTRATION = 1e-3
    SIMPLEX_TOLERANCE = 1e-9
    DEFAULT_EVAL_GRID_2 = 11
    AUTO_REFERENCE_FACTOR = 1.2

    CHECKPOINT_MAGIC = b"PALORA01"
    CHECKPOINT_VERSION = 1

    IDX_LABELS_MAGIC = 0x00000801
    IDX_IMAGES_MAGIC = 0x00000803

    MNIST_SIDE = 28
    MULTIMNIST_SIDE = 36
    MULTIMNIST_OFFSET = 8

    FILE_CHECKPOINT = "checkpoint.palora"
    FILE_HISTORY = "history.csv"
    FILE_FRONT = "front.csv"
    FILE_FRONTS_BY_EPOCH = "fronts_by_epoch.csv"
    FILE_SUMMARY = "summary.json"
    FILE_PROBE = "probe.csv"
    FILE_ABLATION = "ablation.csv"
    FILE_ABLATION_SUMMARY = "ablation_summary.json"

    EXIT_OK = 0
    EXIT_TRAINING_ABORTED = 1
    EXIT_CONFIG = 2
    EXIT_CHECKPOINT = 3

    # 17 significant digits round-trip any float64
    FLOAT_FORMAT = "%.17g"
