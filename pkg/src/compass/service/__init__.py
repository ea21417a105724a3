from .app import AppConfig, create_app, create_app_from_config

__all__ = ["AppConfig", "create_app", "create_app_from_config"]
