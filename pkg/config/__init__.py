from config.config import get_config, Config

__all__ = [
    "Config",
    "get_config",
]
