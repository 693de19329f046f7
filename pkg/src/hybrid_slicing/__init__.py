"""Hybrid dedicated/shared PRB allocation for delay-constrained RAN slices."""

__version__ = "0.1.0"

_EXPORTS = {
    "SampleSet": "hybrid_slicing.samples",
    "Allocation": "hybrid_slicing.scheduler.waterfilling",
    "schedule_slot": "hybrid_slicing.scheduler.waterfilling",
    "schedule_grid": "hybrid_slicing.scheduler.waterfilling",
    "SlaSpec": "hybrid_slicing.queueing.simulator",
    "simulate": "hybrid_slicing.queueing.simulator",
    "FormulationKind": "hybrid_slicing.mip.builder",
    "build": "hybrid_slicing.mip.builder",
    "SearchSpec": "hybrid_slicing.optimizer.search",
    "minimize_allocation": "hybrid_slicing.optimizer.search",
    "compare_strategies": "hybrid_slicing.optimizer.experiments",
    "load_config": "hybrid_slicing.runner.config",
    "run_experiment": "hybrid_slicing.runner.experiment",
}


def __getattr__(name: str):
    """Lazy import of the main entry points."""
    module_name = _EXPORTS.get(name)
    if module_name is None:
        raise AttributeError(f"module '{__name__}' has no attribute '{name}'")
    import importlib

    return getattr(importlib.import_module(module_name), name)


__all__ = sorted(_EXPORTS)
