//! Rounding of relaxed solutions: SO(3) projection, angle extraction and the
//! complete relax-round-refine pipeline.

mod extract;
mod pipeline;
mod project;

pub use extract::{extract_angles, Extraction};
pub use pipeline::{sdp_ik, Diagnostics, IKResult, SdpIkOptions};
pub use project::{project_so3, project_so3_flagged, Projection};
