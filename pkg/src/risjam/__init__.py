"""Simulation toolkit for reciprocity-based key generation under RIS jamming."""
from .attack import AmplitudeMode, AttackMode, Direction, ReflectionSchedule
from .crkg import BitKey, CprConfig, PathReport, Scheme, run_pipeline
from .keyrate import RateCase, RateInputs, rate_case, rate_general
from .probing import ProbeConfig, ProbeSeries, collect_series
from .scene import Scenario, reference_scenario

__version__ = "0.1.0"
