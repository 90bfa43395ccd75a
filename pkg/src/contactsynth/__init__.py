"""Physically constrained synthesis of scraping and rolling contact sounds."""

from .analysis import confusion_similarity, spectral_centroid
from .contact import (ContactPathSignals, NonlinearityParams, alpha_of_normal_force,
                      build_contact_path, constrain_curvature, gaussian_smooth)
from .errors import (ContactLossError, ContactSynthError, DegenerateInputError,
                     DegenerateMotionError, FormatError, ParameterError, PipelineError,
                     ScenarioError, SingularityError, TruncationError)
from .force import (ForceSignal, RollParams, ScrapeParams, horizontal_force, penetration,
                    roll_trajectory, rolling_com_position, rolling_force, total_rolling_force,
                    total_scrape_force, vertical_force)
from .kinematics import (MotionKind, MotionTrajectory, RollMotion, ShmParams, load_trajectory,
                         make_roll_motion, make_scrape_motion, normal_force_bounds,
                         normal_force_profile, path_position, rolling_normal_profile,
                         save_trajectory)
from .modal import (IrField, ModalIR, Mode, extract_modes, ir_at_position, load_mir, mix_ir,
                    morph_modes, save_mir, synthesize_ir)
from .render import (AudioBuffer, RenderSettings, normalize, read_wav, render_time_varying,
                     write_wav)
from .scenario import (RenderScenario, format_scenario, parse_scenario, parse_scenario_text,
                       run_scenario)
from .surface import (SurfaceDepthMap, generate_fractal_surface, load_depth_map,
                      sample_surface, save_depth_map)

__version__ = "0.1.0"
