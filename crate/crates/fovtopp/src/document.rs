//! JSON problem documents.
//!
//! A document mirrors [`ProblemInstance`]: piecewise polynomial path and
//! heading, landmarks with visibility windows, attitude cones, vehicle and
//! camera parameters and solver settings. Solver settings that are left out
//! take the library defaults.

use std::path::Path;

use fovtopp_core::pathspec::{
    AttitudeCone, AttitudeWindow, HeadingSegment, Landmark, PathSegment, PathSpec, Polynomial, ProblemInstance,
    SRange, SolverSettings, SpeedFloor, VisibilityWindow,
};
use fovtopp_core::quadmodel::{CameraRig, QuadParams, STANDARD_GRAVITY};
use fovtopp_core::{Mat3, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum DocumentError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl From<serde_json::Error> for DocumentError {
    fn from(e: serde_json::Error) -> Self {
        DocumentError::Parse { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

impl From<fovtopp_core::Error> for DocumentError {
    fn from(e: fovtopp_core::Error) -> Self {
        match e {
            fovtopp_core::Error::Validation(msg) => DocumentError::Validation(msg),
            other => DocumentError::Validation(other.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub path: PathDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<HeadingDoc>,
    #[serde(default)]
    pub landmarks: Vec<LandmarkDoc>,
    #[serde(default)]
    pub visibility: Vec<VisibilityDoc>,
    #[serde(default)]
    pub attitude: Vec<AttitudeDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub h_lower: Vec<SpeedFloorDoc>,
    pub quad: QuadDoc,
    pub camera: CameraDoc,
    #[serde(default)]
    pub solver: SolverDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathDoc {
    pub segments: Vec<PathSegmentDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSegmentDoc {
    pub s_range: [f64; 2],
    /// Per axis, ascending powers of `s − s_range[0]`.
    pub gamma_coeffs: [Vec<f64>; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadingDoc {
    pub segments: Vec<HeadingSegmentDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadingSegmentDoc {
    pub s_range: [f64; 2],
    pub theta_coeffs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandmarkDoc {
    pub id: u32,
    pub xyz: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisibilityDoc {
    pub s_range: [f64; 2],
    pub ids: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttitudeDoc {
    pub s_range: [f64; 2],
    pub n: [f64; 3],
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedFloorDoc {
    pub s_range: [f64; 2],
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadDoc {
    #[serde(rename = "J")]
    pub inertia: [[f64; 3]; 3],
    #[serde(rename = "k_L")]
    pub k_l: f64,
    #[serde(rename = "k_M")]
    pub k_m: f64,
    pub c_min: f64,
    pub c_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gravity: Option<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraDoc {
    pub d: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_h: Option<f64>,
}

fn range(r: [f64; 2]) -> SRange {
    SRange::new(r[0], r[1])
}

impl ProblemDocument {
    pub fn parse(text: &str) -> Result<ProblemDocument, DocumentError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("documents always serialize");
        text.push('\n');
        text
    }

    /// Builds and validates the instance described by the document.
    pub fn to_instance(&self) -> Result<ProblemInstance, DocumentError> {
        let segments = self
            .path
            .segments
            .iter()
            .map(|seg| PathSegment {
                start: seg.s_range[0],
                end: seg.s_range[1],
                gamma: seg.gamma_coeffs.clone().map(Polynomial::new),
            })
            .collect::<Vec<_>>();
        let s_end = segments.last().map_or(0.0, |s| s.end);
        let heading = match &self.heading {
            Some(h) => h
                .segments
                .iter()
                .map(|seg| HeadingSegment {
                    start: seg.s_range[0],
                    end: seg.s_range[1],
                    theta: Polynomial::new(seg.theta_coeffs.clone()),
                })
                .collect(),
            None => vec![HeadingSegment { start: 0.0, end: s_end, theta: Polynomial::new(vec![0.0]) }],
        };
        let path = PathSpec::new(segments, heading)?;

        let q = &self.quad;
        let quad = QuadParams {
            inertia: Mat3(q.inertia),
            k_l: q.k_l,
            k_m: q.k_m,
            c_min: q.c_min,
            c_max: q.c_max,
            gravity: q.gravity.map_or(Vec3::new(0.0, 0.0, -STANDARD_GRAVITY), Vec3),
        };
        let camera = CameraRig { offset: self.camera.d, half_angle: self.camera.alpha };
        let mut instance = ProblemInstance::new(path, quad, camera);
        instance.landmarks =
            self.landmarks.iter().map(|l| Landmark { id: l.id, position: Vec3(l.xyz) }).collect();
        instance.visibility = self
            .visibility
            .iter()
            .map(|v| VisibilityWindow { range: range(v.s_range), ids: v.ids.clone() })
            .collect();
        instance.attitude = self
            .attitude
            .iter()
            .map(|a| AttitudeWindow { range: range(a.s_range), cone: AttitudeCone { axis: Vec3(a.n), max_angle: a.beta } })
            .collect();
        instance.speed_floors =
            self.h_lower.iter().map(|f| SpeedFloor { range: range(f.s_range), h_min: f.h }).collect();

        let defaults = SolverSettings::with_defaults(instance.path.s_end());
        let sd = &self.solver;
        instance.solver = SolverSettings {
            grid_n: sd.grid_n.unwrap_or(defaults.grid_n),
            h_start: sd.h_start.unwrap_or(defaults.h_start),
            h_end: sd.h_end.unwrap_or(defaults.h_end),
            v_max: sd.v_max.or(defaults.v_max),
            h_cap: sd.h_cap.unwrap_or(defaults.h_cap),
            eta: sd.eta.unwrap_or(defaults.eta),
            sigma: sd.sigma.unwrap_or(defaults.sigma),
            eps_h: sd.eps_h.unwrap_or(defaults.eps_h),
        };
        instance.validate()?;
        Ok(instance)
    }

    /// Document describing `instance`, with every solver setting spelled out.
    pub fn from_instance(instance: &ProblemInstance) -> ProblemDocument {
        let path = PathDoc {
            segments: instance
                .path
                .segments()
                .iter()
                .map(|seg| PathSegmentDoc {
                    s_range: [seg.start, seg.end],
                    gamma_coeffs: seg.gamma.clone().map(|p| p.coeffs),
                })
                .collect(),
        };
        let heading = HeadingDoc {
            segments: instance
                .path
                .heading_segments()
                .iter()
                .map(|seg| HeadingSegmentDoc { s_range: [seg.start, seg.end], theta_coeffs: seg.theta.coeffs.clone() })
                .collect(),
        };
        let q = &instance.quad;
        let st = &instance.solver;
        ProblemDocument {
            path,
            heading: Some(heading),
            landmarks: instance.landmarks.iter().map(|l| LandmarkDoc { id: l.id, xyz: l.position.0 }).collect(),
            visibility: instance
                .visibility
                .iter()
                .map(|v| VisibilityDoc { s_range: [v.range.start, v.range.end], ids: v.ids.clone() })
                .collect(),
            attitude: instance
                .attitude
                .iter()
                .map(|a| AttitudeDoc { s_range: [a.range.start, a.range.end], n: a.cone.axis.0, beta: a.cone.max_angle })
                .collect(),
            h_lower: instance
                .speed_floors
                .iter()
                .map(|f| SpeedFloorDoc { s_range: [f.range.start, f.range.end], h: f.h_min })
                .collect(),
            quad: QuadDoc {
                inertia: q.inertia.0,
                k_l: q.k_l,
                k_m: q.k_m,
                c_min: q.c_min,
                c_max: q.c_max,
                gravity: Some(q.gravity.0),
            },
            camera: CameraDoc { d: instance.camera.offset, alpha: instance.camera.half_angle },
            solver: SolverDoc {
                grid_n: Some(st.grid_n),
                h_start: Some(st.h_start),
                h_end: Some(st.h_end),
                v_max: st.v_max,
                h_cap: Some(st.h_cap),
                eta: Some(st.eta),
                sigma: Some(st.sigma),
                eps_h: Some(st.eps_h),
            },
        }
    }
}

/// Parses and validates a problem document.
pub fn load_problem(text: &str) -> Result<ProblemInstance, DocumentError> {
    ProblemDocument::parse(text)?.to_instance()
}

pub fn load_problem_file(path: &Path) -> Result<ProblemInstance, DocumentError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| DocumentError::Io { path: path.display().to_string(), source })?;
    load_problem(&text)
}
