"""VRU occlusion risk and tracking-loss metrics under collective perception."""

from .geometry import (
    Disc, ObstacleRect, SafetyParams, Sector, line_of_sight, sector_disc_intersects,
    vehicle_safety_area, vru_safety_area, within_sensor_range,
)
from .metrics import (
    BoxplotStats, FrameRisk, MtlResult, VehicleRiskSummary, boxplot_stats, ccdf, frame_risk,
    frame_risks, mtl, vehicle_risk_summaries,
)
from .perception import (
    CpmSchedule, EquipageAssignment, PerceptionMap, assign_equipage, direct_detections, fuse_cpm,
    is_tracked, nested_equipage,
)
from .scenario import (
    AgentCategory, AgentSpec, AgentState, Scenario, ScenarioError, Scene, Segment, SyntheticSpec,
    Track, four_way_intersection, generate_synthetic, load_ind_recording, load_scenario,
    save_scenario, write_ind_recording,
)

__version__ = "0.1.0"
