"""Virtual gear hobbing: discrete-envelope flank simulation and flank metrology."""

__version__ = "0.1.0"

from hobsim.gear import GearSpec, GeometryError, build_grid, derive_transverse, flank_normal, flank_point
from hobsim.hob import HobSpec, HobSpecError, derive_hob, hob_signed_membership
from hobsim.kinematics import MachineSetup, ScheduleError, build_schedule, installation_angle
from hobsim.cutting import DeviationField, UncutPointError, deviation_at, simulate_flank, transverse_slice
from hobsim.metrology import AlignmentError, ErrorMap, align_clocking, error_map, export_error_surface
