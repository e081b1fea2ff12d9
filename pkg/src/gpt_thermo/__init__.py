"""Entropy and work extraction for generalized probabilistic theories."""

from .core import (DirectSumState, Effect, GptSystem, PositiveMap, State, SubState,
                   direct_sum, identity_map, make_classical, make_custom, make_polygon)
from .entropy import (EntropyKind, get_entropy, i_acc, s_acc, s_extended, s_induced,
                      s_infinity, s_meas, s_mix, shannon)
from .errors import GptError
from .kernels import BACKEND
from .measurement import (Measurement, MeasurementProcess, enumerate_fine_grained,
                          is_repeatable, is_strongly_repeatable)
from .spm import (Container, CycleStep, GasConfiguration, Group, WorkLedger, builtin_cycle,
                  check_thm2, discrepancy_bound, lemma1_bound, run_cycle)
from .thermo import Scenario, evaluate_scenario, szilard_scenario

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Container", "CycleStep", "DirectSumState", "Effect", "EntropyKind",
    "GasConfiguration", "GptError", "GptSystem", "Group", "Measurement",
    "MeasurementProcess", "PositiveMap", "Scenario", "State", "SubState", "WorkLedger",
    "builtin_cycle", "check_thm2", "direct_sum", "discrepancy_bound", "enumerate_fine_grained",
    "evaluate_scenario", "get_entropy", "i_acc", "identity_map", "is_repeatable",
    "is_strongly_repeatable", "lemma1_bound", "make_classical", "make_custom", "make_polygon",
    "run_cycle", "s_acc", "s_extended", "s_induced", "s_infinity", "s_meas", "s_mix", "shannon",
    "szilard_scenario",
]
