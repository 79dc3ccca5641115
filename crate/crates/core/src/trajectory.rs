//! Sampled core poses over an evaluation window.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    /// Core position in cm.
    pub position: [f64; 3],
    /// Roll, degrees.
    pub roll: f64,
    /// Pitch, degrees.
    pub pitch: f64,
    /// Yaw, degrees.
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Seconds between consecutive samples.
    pub sample_period: f64,
    pub samples: Vec<Pose>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajectoryParseError {
    #[error("missing header")]
    MissingHeader,
    #[error("line {line}: expected 7 columns")]
    Columns { line: usize },
    #[error("line {line}: bad number `{value}`")]
    Number { line: usize, value: String },
    #[error("need at least two samples")]
    TooShort,
}

pub const CSV_HEADER: &str = "t,x,y,z,roll,pitch,yaw";

impl Trajectory {
    pub fn new(sample_period: f64, samples: Vec<Pose>) -> Self {
        Trajectory { sample_period, samples }
    }

    /// A robot that never moves.
    pub fn stationary(sample_period: f64, sample_count: usize) -> Self {
        Trajectory { sample_period, samples: vec![Pose::default(); sample_count] }
    }

    pub fn duration(&self) -> f64 {
        self.samples.len().saturating_sub(1) as f64 * self.sample_period
    }

    pub fn first(&self) -> &Pose {
        &self.samples[0]
    }

    pub fn last(&self) -> &Pose {
        self.samples.last().expect("trajectory holds samples")
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|p| {
            p.position.iter().all(|v| v.is_finite()) && p.roll.is_finite() && p.pitch.is_finite() && p.yaw.is_finite()
        })
    }

    /// One row per sample; floats use the shortest round-trip representation.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.samples.len());
        out.push_str(CSV_HEADER);
        out.push('\n');
        for (i, p) in self.samples.iter().enumerate() {
            let t = i as f64 * self.sample_period;
            let [x, y, z] = p.position;
            let _ = writeln!(out, "{t},{x},{y},{z},{},{},{}", p.roll, p.pitch, p.yaw);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, TrajectoryParseError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(CSV_HEADER) {
            return Err(TrajectoryParseError::MissingHeader);
        }
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 {
                return Err(TrajectoryParseError::Columns { line: i + 2 });
            }
            let mut v = [0.0; 7];
            for (slot, col) in v.iter_mut().zip(&cols) {
                *slot = col
                    .trim()
                    .parse()
                    .map_err(|_| TrajectoryParseError::Number { line: i + 2, value: col.to_string() })?;
            }
            times.push(v[0]);
            samples.push(Pose { position: [v[1], v[2], v[3]], roll: v[4], pitch: v[5], yaw: v[6] });
        }
        if samples.len() < 2 {
            return Err(TrajectoryParseError::TooShort);
        }
        Ok(Trajectory { sample_period: times[1] - times[0], samples })
    }
}
