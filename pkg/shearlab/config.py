import os


def get_threads():
    return int(os.environ.get("SHEARLAB_THREADS", "0"))


def get_output_dir():
    return os.environ.get("SHEARLAB_OUT", "out")


def get_log_level():
    return os.environ.get("SHEARLAB_LOG_LEVEL", "WARNING").upper()


def get_default_seed():
    return int(os.environ.get("SHEARLAB_SEED", "0"))
