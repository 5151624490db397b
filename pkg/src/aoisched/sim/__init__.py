from .engine import SimConfig, SimEstimate, default_backend, device_rate, simulate

__all__ = ["SimConfig", "SimEstimate", "default_backend", "device_rate", "simulate"]
