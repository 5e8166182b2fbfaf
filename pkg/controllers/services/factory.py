from typing import Dict, Optional, Type

from controllers.services.base import FeedbackController
from controllers.services.config import ControllerConfig
from controllers.services.lqr import LQRController
from controllers.services.mfc import MFCController, SAMFCController
from controllers.services.nlmpc import NLMPCController
from controllers.services.pid import PIDController
from lateralbench.options import SimulationOptions
from vehicle.services.params import VehicleParams

CONTROLLERS: Dict[str, Type[FeedbackController]] = {
    cls.kind: cls
    for cls in (LQRController, MFCController, SAMFCController, PIDController, NLMPCController)
}


def make_controller(config: ControllerConfig, params: Optional[VehicleParams] = None,
                    options: Optional[SimulationOptions] = None) -> FeedbackController:
    return CONTROLLERS[config.kind](config, params or VehicleParams(), options or SimulationOptions())
