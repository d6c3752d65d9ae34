"""Path-following control for a quadrotor: plant model, curve geometry,
normal-form linearization, state and output feedback, and a fixed-step
closed-loop simulator."""

from .controller import (ControllerGains, ObserverGains, ObserverState, ReferenceSpec,
                         full_state_law, gains_from_poles, output_feedback_law)
from .dynamics import MassGeometryParams, QuadState, allocate_forces, mix_forces, plant_derivative
from .normal_form import DecouplingData, NormalFormState, OutputMap, decoupling, invert_outputs, xi_from_plant
from .simulator import (CurveSpec, InitialCondition, Metrics, ScenarioConfig, SimLog,
                        compute_metrics, rk4_step, run_scenario)
from .trajectory import (CurveDescriptor, PathTracker, deviations, frame_at, make_circle,
                         make_helix, make_line, make_polynomial, project_closest)

__all__ = [
    "ControllerGains", "ObserverGains", "ObserverState", "ReferenceSpec", "full_state_law",
    "gains_from_poles", "output_feedback_law", "MassGeometryParams", "QuadState",
    "allocate_forces", "mix_forces", "plant_derivative", "DecouplingData", "NormalFormState",
    "OutputMap", "decoupling", "invert_outputs", "xi_from_plant", "CurveSpec",
    "InitialCondition", "Metrics", "ScenarioConfig", "SimLog", "compute_metrics", "rk4_step",
    "run_scenario", "CurveDescriptor", "PathTracker", "deviations", "frame_at", "make_circle",
    "make_helix", "make_line", "make_polynomial", "project_closest",
]
