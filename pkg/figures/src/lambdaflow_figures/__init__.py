"""Publication-style figures for the three-level energy-flow simulator.

Consumes only the simulator's serialized CSV outputs; never imports or
invokes the physics core.
"""

from .readers import FigureInputError
from .render import (
    RenderResult,
    render_diode_overlay,
    render_duration_heatmap,
    render_flow_timeseries,
)

__version__ = "0.1.0"
