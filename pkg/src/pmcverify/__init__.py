"""Region verification for parametric Markov chains via interval abstraction and big-step transformation."""
from .bounds import Interval, bound_box, clamp_unit, ia_eval
from .engine import EngineOptions, Property, Verdict, check_region, verify
from .model import IMC, MC, PMC, instantiate, interval_substitute, mc_reach
from .poly import Polynomial
from .region import Region, SplitStrategy, sample, split

__all__ = ["Interval", "bound_box", "clamp_unit", "ia_eval", "EngineOptions", "Property", "Verdict",
           "check_region", "verify", "IMC", "MC", "PMC", "instantiate", "interval_substitute", "mc_reach",
           "Polynomial", "Region", "SplitStrategy", "sample", "split"]
