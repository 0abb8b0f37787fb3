//! Trajectory, report and profile files.

use fovtopp_core::profilesolver::SquareSpeedProfile;
use fovtopp_core::trajout::{Trajectory, TrajectorySample, VerificationReport};
use fovtopp_core::{Mat3, Vec3};
use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str = "t,s,x,y,z,vx,vy,vz,ax,ay,az,qw,qx,qy,qz,wx,wy,wz,c1,c2,c3,c4";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, thiserror::Error)]
pub enum SerializeError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("trajectory has no samples")]
    Empty,
}

/// One trajectory sample as a flat record; column order is the CSV layout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub t: f64,
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub qw: f64,
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
    pub wx: f64,
    pub wy: f64,
    pub wz: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl From<&TrajectorySample> for SampleRecord {
    fn from(p: &TrajectorySample) -> Self {
        let [qw, qx, qy, qz] = p.quaternion();
        let [c1, c2, c3, c4] = p.motors;
        SampleRecord {
            t: p.t,
            s: p.s,
            x: p.position.x(),
            y: p.position.y(),
            z: p.position.z(),
            vx: p.velocity.x(),
            vy: p.velocity.y(),
            vz: p.velocity.z(),
            ax: p.acceleration.x(),
            ay: p.acceleration.y(),
            az: p.acceleration.z(),
            qw,
            qx,
            qy,
            qz,
            wx: p.omega.x(),
            wy: p.omega.y(),
            wz: p.omega.z(),
            c1,
            c2,
            c3,
            c4,
        }
    }
}

impl From<&SampleRecord> for TrajectorySample {
    fn from(r: &SampleRecord) -> Self {
        TrajectorySample {
            t: r.t,
            s: r.s,
            position: Vec3::new(r.x, r.y, r.z),
            velocity: Vec3::new(r.vx, r.vy, r.vz),
            acceleration: Vec3::new(r.ax, r.ay, r.az),
            rotation: Mat3::from_quaternion([r.qw, r.qx, r.qy, r.qz]),
            omega: Vec3::new(r.wx, r.wy, r.wz),
            motors: [r.c1, r.c2, r.c3, r.c4],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationsDoc {
    pub fov_flown: usize,
    pub fov_thrust_implied: usize,
    pub cone: usize,
    pub total_thrust: usize,
    pub motors: usize,
    pub nonholonomy: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSlackDoc {
    pub landmark: u32,
    pub flown: f64,
    pub thrust_implied: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualDoc {
    pub t: f64,
    pub fov: Vec<LandmarkSlackDoc>,
    pub cone: Vec<f64>,
    pub total_thrust: f64,
    pub motors: [f64; 4],
    pub nonholonomy: f64,
}

/// Verification report. Slacks are in radians or m/s²; positive is inside the
/// limit. Minima over empty sets are `null`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub margin_deg: f64,
    pub eta: f64,
    pub sample_count: usize,
    pub clean: bool,
    pub min_fov_flown: Option<f64>,
    pub min_fov_thrust_implied: Option<f64>,
    pub min_cone: Option<f64>,
    pub min_total_thrust: Option<f64>,
    pub min_motor: Option<f64>,
    pub max_nonholonomy: f64,
    pub violations: ViolationsDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residuals: Vec<ResidualDoc>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl ReportDoc {
    /// Summary and, with `trajectory`, the per-sample residuals.
    pub fn new(report: &VerificationReport, trajectory: Option<&Trajectory>) -> ReportDoc {
        let v = &report.violations;
        let residuals = trajectory.map_or_else(Vec::new, |traj| {
            traj.samples
                .iter()
                .zip(&report.samples)
                .map(|(p, r)| ResidualDoc {
                    t: p.t,
                    fov: r
                        .fov
                        .iter()
                        .map(|f| LandmarkSlackDoc { landmark: f.landmark, flown: f.flown, thrust_implied: f.thrust_implied })
                        .collect(),
                    cone: r.cone.clone(),
                    total_thrust: r.total_thrust,
                    motors: r.motors,
                    nonholonomy: r.nonholonomy,
                })
                .collect()
        });
        ReportDoc {
            margin_deg: report.margin_deg,
            eta: report.eta,
            sample_count: report.samples.len(),
            clean: report.is_clean(),
            min_fov_flown: finite(report.min_fov_flown),
            min_fov_thrust_implied: finite(report.min_fov_thrust_implied),
            min_cone: finite(report.min_cone),
            min_total_thrust: finite(report.min_total_thrust),
            min_motor: finite(report.min_motor),
            max_nonholonomy: report.max_nonholonomy,
            violations: ViolationsDoc {
                fov_flown: v.fov_flown,
                fov_thrust_implied: v.fov_thrust_implied,
                cone: v.cone,
                total_thrust: v.total_thrust,
                motors: v.motors,
                nonholonomy: v.nonholonomy,
            },
            residuals,
        }
    }

    /// Worst bearing beyond the camera half-angle on the flown attitude, in degrees.
    pub fn max_fov_slack_deg(&self) -> Option<f64> {
        self.min_fov_flown.map(|m| self.margin_deg - m.to_degrees())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDoc {
    pub total_time: f64,
    pub samples: Vec<SampleRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportDoc>,
}

impl TrajectoryDoc {
    pub fn new(trajectory: &Trajectory, report: Option<ReportDoc>) -> TrajectoryDoc {
        TrajectoryDoc {
            total_time: trajectory.total_time,
            samples: trajectory.samples.iter().map(SampleRecord::from).collect(),
            report,
        }
    }

    pub fn trajectory(&self) -> Trajectory {
        Trajectory { samples: self.samples.iter().map(TrajectorySample::from).collect(), total_time: self.total_time }
    }
}

fn pretty<T: Serialize>(value: &T) -> Result<String, SerializeError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Trajectory as JSON (with the report summary) or CSV.
pub fn serialize(trajectory: &Trajectory, report: Option<&ReportDoc>, format: Format) -> Result<String, SerializeError> {
    match format {
        Format::Json => trajectory_json(trajectory, report),
        Format::Csv => trajectory_csv(trajectory),
    }
}

pub fn trajectory_json(trajectory: &Trajectory, report: Option<&ReportDoc>) -> Result<String, SerializeError> {
    let summary = report.map(|r| ReportDoc { residuals: Vec::new(), ..r.clone() });
    pretty(&TrajectoryDoc::new(trajectory, summary))
}

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String, SerializeError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub fn trajectory_csv(trajectory: &Trajectory) -> Result<String, SerializeError> {
    csv_string(trajectory.samples.iter().map(SampleRecord::from))
}

pub fn report_json(report: &ReportDoc) -> Result<String, SerializeError> {
    pretty(report)
}

pub fn parse_trajectory_json(text: &str) -> Result<TrajectoryDoc, SerializeError> {
    let doc: TrajectoryDoc = serde_json::from_str(text)?;
    if doc.samples.is_empty() {
        return Err(SerializeError::Empty);
    }
    Ok(doc)
}

/// Total time is taken from the last row.
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory, SerializeError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let samples = reader
        .deserialize::<SampleRecord>()
        .map(|r| r.map(|r| TrajectorySample::from(&r)))
        .collect::<Result<Vec<_>, _>>()?;
    let total_time = samples.last().ok_or(SerializeError::Empty)?.t;
    Ok(Trajectory { samples, total_time })
}

#[derive(Serialize)]
struct ProfileRow {
    s: f64,
    h: f64,
    l: f64,
}

#[derive(Serialize)]
struct PlotRow {
    s: f64,
    h_stage1: f64,
    h_stage2: f64,
}

/// `s,h,l` rows of a square speed profile.
pub fn profile_csv(profile: &SquareSpeedProfile) -> Result<String, SerializeError> {
    csv_string(profile.s.iter().zip(&profile.h).zip(&profile.l).map(|((s, h), l)| ProfileRow { s: *s, h: *h, l: *l }))
}

/// `s,h_stage1,h_stage2` rows on the shared grid.
pub fn plot_data_csv(stage1: &SquareSpeedProfile, stage2: &SquareSpeedProfile) -> Result<String, SerializeError> {
    csv_string(
        stage1
            .s
            .iter()
            .zip(stage1.h.iter().zip(&stage2.h))
            .map(|(s, (a, b))| PlotRow { s: *s, h_stage1: *a, h_stage2: *b }),
    )
}
