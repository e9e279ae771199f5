from .config import ExperimentConfig, config_from_dict, load_config
from .experiments import compare, generate_instances, run_sweep, write_compare, write_sweep
