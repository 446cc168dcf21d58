from .app import SidecarConfig, create_app

__all__ = ["SidecarConfig", "create_app"]
