from __future__ import annotations

import math

from pydantic import BaseModel, ConfigDict, Field
from scipy import constants as sc


class PhysicalConstants(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    planck_h: float = Field(default=sc.h, gt=0)
    speed_of_light_c: float = Field(default=sc.c, gt=0)
    epsilon0: float = Field(default=sc.epsilon_0, gt=0)

    def kc_theory(self) -> float:
        """Ideal-conductor Casimir coefficient pi*h*c/480 [N m^2]."""
        return math.pi * self.planck_h * self.speed_of_light_c / 480.0


DEFAULT_CONSTANTS = PhysicalConstants()

SILICON_DENSITY = 2330.0  # kg/m^3
