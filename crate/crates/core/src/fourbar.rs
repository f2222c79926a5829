//! Four-bar crank-rocker kinematics and path-synthesis objective.
//!
//! Ground pivot O2 sits at the origin and O4 at `(a41, 0)`. The crank `a12`
//! turns about O2, the rocker `a34` about O4, and the coupler point rides on
//! the coupler `a23` at distance `a25` and angle `alpha` from the crank pin.

use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::write_float_csv;
use crate::search::{Evaluation, Objective};
use crate::space::SearchSpace;

pub type Point = [f64; 2];

/// Base penalty for designs that are not crank-rockers.
pub const PENALTY_BASE: f64 = 1e9;
/// Penalty per unit of constraint violation.
pub const PENALTY_SCALE: f64 = 1e6;

pub const LINK_MIN: f64 = 10.0;
pub const LINK_MAX: f64 = 250.0;

/// Design-variable order used by the search: `a12, a23, a34, a41, a25, alpha_deg`.
pub const DESIGN_COLUMNS: [&str; 6] = ["a12", "a23", "a34", "a41", "a25", "alpha_deg"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrashofClass {
    CrankRocker,
    GrashofNonCrankRocker,
    NonGrashof,
}

impl fmt::Display for GrashofClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CrankRocker => "crank_rocker",
            Self::GrashofNonCrankRocker => "grashof_non_crank_rocker",
            Self::NonGrashof => "non_grashof",
        })
    }
}

/// Grashof class of a linkage with crank `a12`, coupler `a23`, rocker `a34`
/// and ground `a41`.
///
/// A crank-rocker needs `l + s < p + q`, the crank strictly shortest, and the
/// longest link adjacent to the crank (coupler or ground).
pub fn grashof_class(a12: f64, a23: f64, a34: f64, a41: f64) -> Result<GrashofClass> {
    let links = [a12, a23, a34, a41];
    if links.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::NonPositiveLength(links));
    }
    let mut sorted = links;
    sorted.sort_by(f64::total_cmp);
    let [s, p, q, l] = sorted;
    if l + s >= p + q {
        return Ok(GrashofClass::NonGrashof);
    }
    let crank_shortest = a12 < a23.min(a34).min(a41);
    let longest_adjacent = a23.max(a41) >= a34;
    Ok(if crank_shortest && longest_adjacent { GrashofClass::CrankRocker } else { GrashofClass::GrashofNonCrankRocker })
}

/// How far a linkage is from being a crank-rocker: Grashof excess, crank
/// excess over the shortest other link, and rocker excess over the longest
/// adjacent link, summed.
pub fn crank_rocker_violation(a12: f64, a23: f64, a34: f64, a41: f64) -> f64 {
    let mut sorted = [a12, a23, a34, a41];
    sorted.sort_by(f64::total_cmp);
    let [s, p, q, l] = sorted;
    (l + s - p - q).max(0.0) + (a12 - a23.min(a34).min(a41)).max(0.0) + (a34 - a23.max(a41)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourBar {
    pub a12: f64,
    pub a23: f64,
    pub a34: f64,
    pub a41: f64,
    pub a25: f64,
    pub alpha_deg: f64,
}

/// Generator of the shipped run-1 test motion.
pub const RUN1: FourBar = FourBar { a12: 30.0, a23: 52.0, a34: 57.0, a41: 71.0, a25: 50.0, alpha_deg: -52.0 };

/// Crank-rocker whose coupler curve crosses itself once.
pub const FIGURE_EIGHT: FourBar = FourBar { a12: 21.0, a23: 81.0, a34: 63.0, a41: 90.0, a25: 97.0, alpha_deg: -55.0 };

impl FourBar {
    pub fn from_design(v: &[f64]) -> Result<Self> {
        match *v {
            [a12, a23, a34, a41, a25, alpha_deg] => Ok(Self { a12, a23, a34, a41, a25, alpha_deg }),
            _ => Err(Error::Dimension { expected: 6, got: v.len() }),
        }
    }

    pub fn to_design(&self) -> Vec<f64> {
        vec![self.a12, self.a23, self.a34, self.a41, self.a25, self.alpha_deg]
    }

    pub fn grashof_class(&self) -> Result<GrashofClass> {
        grashof_class(self.a12, self.a23, self.a34, self.a41)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            a12: self.a12 * k,
            a23: self.a23 * k,
            a34: self.a34 * k,
            a41: self.a41 * k,
            a25: self.a25 * k,
            alpha_deg: self.alpha_deg,
        }
    }

    /// Crank pin A and rocker pin B at crank angle `theta2` (radians), on the
    /// branch where B lies to the left of the line A -> O4.
    pub fn pins(&self, theta2: f64) -> Result<(Point, Point)> {
        let a = [self.a12 * theta2.cos(), self.a12 * theta2.sin()];
        let d = [self.a41 - a[0], -a[1]];
        let r = d[0].hypot(d[1]);
        let fail = || Error::Assembly { theta2_deg: theta2.to_degrees() };
        if r == 0.0 {
            return Err(fail());
        }
        let along = (self.a23 * self.a23 - self.a34 * self.a34 + r * r) / (2.0 * r);
        let mut h2 = self.a23 * self.a23 - along * along;
        if h2 < 0.0 {
            if h2 < -1e-12 * self.a23 * self.a23 {
                return Err(fail());
            }
            h2 = 0.0;
        }
        let h = h2.sqrt();
        let (ux, uy) = (d[0] / r, d[1] / r);
        let b = [a[0] + along * ux - h * uy, a[1] + along * uy + h * ux];
        Ok((a, b))
    }

    /// Coupler point at crank angle `theta2` (radians).
    pub fn coupler_point(&self, theta2: f64) -> Result<Point> {
        let (a, b) = self.pins(theta2)?;
        let theta3 = (b[1] - a[1]).atan2(b[0] - a[0]);
        let phi = theta3 + self.alpha_deg.to_radians();
        Ok([a[0] + self.a25 * phi.cos(), a[1] + self.a25 * phi.sin()])
    }

    /// `n` coupler points at crank angles `2*pi*i/n`.
    pub fn trace(&self, n: usize) -> Result<Vec<Point>> {
        (0..n).map(|i| self.coupler_point(TAU * i as f64 / n as f64)).collect()
    }

    /// Writes `theta2_deg,x,y` for `n` equally spaced crank angles.
    pub fn write_trace<P: AsRef<Path>>(&self, path: P, n: usize) -> Result<()> {
        let pts = self.trace(n)?;
        write_float_csv(
            path,
            &["theta2_deg", "x", "y"],
            pts.iter().enumerate().map(|(i, p)| vec![360.0 * i as f64 / n as f64, p[0], p[1]]),
        )
    }
}

/// Ordered target points for the coupler curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionPath(Vec<Point>);

impl PrecisionPath {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::ShortPath(points.len()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("precision path has non-finite coordinates".into()));
        }
        Ok(Self(points))
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Reads a CSV with header `x,y`.
    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["x", "y"] {
            return Err(Error::Invalid(format!("expected header x,y, got {:?}", headers)));
        }
        let mut pts = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Invalid(format!("bad number in row {:?}", rec)))
            };
            pts.push([parse(0)?, parse(1)?]);
        }
        Self::new(pts)
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        write_float_csv(path, &["x", "y"], self.0.iter().map(|p| p.to_vec()))
    }
}

/// The 12-point self-target traced by [`RUN1`].
pub fn run1_target() -> PrecisionPath {
    PrecisionPath(RUN1.trace(12).expect("run-1 mechanism is a crank-rocker"))
}

/// A 12-point target sampled from the figure-eight curve of [`FIGURE_EIGHT`].
pub fn figure_eight_target() -> PrecisionPath {
    PrecisionPath(FIGURE_EIGHT.trace(12).expect("figure-eight mechanism is a crank-rocker"))
}

/// How traced points are matched to precision points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Point `i` of the trace against target point `i`.
    Fixed,
    /// Best over every cyclic shift and both traversal directions.
    #[default]
    Cyclic,
}

impl std::str::FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Self::Fixed),
            "cyclic" => Ok(Self::Cyclic),
            _ => Err(Error::Invalid(format!("unknown pairing {s:?} (expected fixed or cyclic)"))),
        }
    }
}

/// Sum of squared distances between `traced` and `target` under `pairing`.
pub fn squared_error(traced: &[Point], target: &[Point], pairing: Pairing) -> f64 {
    let n = target.len();
    debug_assert_eq!(traced.len(), n);
    let sum = |shift: usize, reverse: bool| -> f64 {
        traced
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let j = if reverse { (shift + n - i) % n } else { (shift + i) % n };
                let t = target[j];
                (c[0] - t[0]).powi(2) + (c[1] - t[1]).powi(2)
            })
            .sum()
    };
    match pairing {
        Pairing::Fixed => sum(0, false),
        Pairing::Cyclic => (0..n).flat_map(|s| [sum(s, false), sum(s, true)]).fold(f64::INFINITY, f64::min),
    }
}

/// Path error of `m` against `target`, or the infeasibility penalty when `m`
/// is not a crank-rocker.
pub fn path_error(m: &FourBar, target: &PrecisionPath, pairing: Pairing) -> f64 {
    synthesis_evaluation(m, target, pairing).value
}

fn penalty(m: &FourBar) -> Evaluation {
    Evaluation::infeasible(PENALTY_BASE + PENALTY_SCALE * crank_rocker_violation(m.a12, m.a23, m.a34, m.a41))
}

fn synthesis_evaluation(m: &FourBar, target: &PrecisionPath, pairing: Pairing) -> Evaluation {
    match m.grashof_class() {
        Ok(GrashofClass::CrankRocker) => match m.trace(target.len()) {
            Ok(traced) => Evaluation::feasible(squared_error(&traced, target.points(), pairing)),
            Err(_) => penalty(m),
        },
        _ => penalty(m),
    }
}

/// Path-synthesis objective over `(a12, a23, a34, a41, a25, alpha_deg)`.
#[derive(Debug, Clone)]
pub struct SynthesisObjective {
    pub target: PrecisionPath,
    pub pairing: Pairing,
}

impl SynthesisObjective {
    pub fn new(target: PrecisionPath, pairing: Pairing) -> Self {
        Self { target, pairing }
    }

    /// Five lengths in `[10, 250]` with unit steps, `alpha` in `[-180, 180]` degrees.
    pub fn space() -> SearchSpace {
        let mut b = vec![(LINK_MIN, LINK_MAX, 1.0); 5];
        b.push((-180.0, 180.0, 1.0));
        SearchSpace::from_bounds(&b).expect("static bounds")
    }
}

impl Objective for SynthesisObjective {
    fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        Ok(synthesis_evaluation(&FourBar::from_design(x)?, &self.target, self.pairing))
    }
}
