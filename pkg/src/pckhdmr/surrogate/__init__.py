"""Component surrogates: Kriging, sparse PCE and PC-Kriging."""
from .kriging import (KrigingModel, SingularCorrelation, fit_kriging, predict_kriging,
                      profile_loglik, theta_starts)
from .pce import (PceBasis, fit_pce, legendre_design, predict_pce, to_unit,
                  total_degree_indices)
from .pckriging import PcKrigingModel, fit_pc_kriging, predict_pc_kriging

BACKENDS = ("pc-kriging", "kriging", "pce")

_LOADERS = {
    "kriging": KrigingModel.from_dict,
    "pce": PceBasis.from_dict,
    "pc-kriging": PcKrigingModel.from_dict,
}


def fit_component(backend: str, X, y, space, max_degree: int, mode: str = "SPC"):
    """Fit one component surrogate of the requested backend kind.

    ``kriging`` is ordinary Kriging (constant trend); ``max_degree`` only
    matters for the polynomial backends.
    """
    if backend == "pc-kriging":
        return fit_pc_kriging(X, y, space, mode=mode, max_degree=max_degree)
    if backend == "kriging":
        return fit_kriging(X, y, space)
    if backend == "pce":
        return fit_pce(X, y, space, max_degree)
    raise ValueError(f"unknown surrogate backend {backend!r}")


def load_model(d: dict):
    try:
        return _LOADERS[d["type"]](d)
    except KeyError as exc:
        raise ValueError(f"unknown serialized surrogate type {d.get('type')!r}") from exc


__all__ = [
    "BACKENDS", "KrigingModel", "PceBasis", "PcKrigingModel", "SingularCorrelation",
    "fit_component", "fit_kriging", "fit_pc_kriging", "fit_pce", "legendre_design",
    "load_model", "predict_kriging", "predict_pc_kriging", "predict_pce",
    "profile_loglik", "theta_starts", "to_unit", "total_degree_indices",
]
