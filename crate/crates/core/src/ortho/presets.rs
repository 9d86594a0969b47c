//! Newton–Schulz coefficient schedules.
//!
//! A preset file holds one `a b c` triple per line; `#` starts a comment and
//! blank lines are ignored. When a run asks for more steps than the file has
//! lines, the last triple is repeated; fewer steps truncate the schedule.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Result, TeonError};

/// Environment variable overriding the preset directory.
pub const PRESET_DIR_ENV: &str = "TEON_PRESET_DIR";

/// Names with a bundled table.
pub const BUNDLED_PRESETS: [&str; 4] = ["cubic", "you", "jordan", "polar-express"];

/// Allowed deviation of the composed scalar map from 1 at `x = 1`, and the
/// allowed overshoot above 1 anywhere on `(0, 1]`.
pub const COMPOSED_TOLERANCE: f64 = 0.35;

const BUNDLED: [(&str, &str); 4] = [
    ("cubic", include_str!("../../presets/cubic.txt")),
    ("you", include_str!("../../presets/you.txt")),
    ("jordan", include_str!("../../presets/jordan.txt")),
    ("polar-express", include_str!("../../presets/polar-express.txt")),
];

/// One odd-polynomial step `p(x) = a·x + b·x³ + c·x⁵`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NsCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl NsCoefficients {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    #[inline]
    pub fn apply_scalar(&self, x: f64) -> f64 {
        let x2 = x * x;
        x * (self.a + x2 * (self.b + self.c * x2))
    }
}

/// A validated, fully expanded per-step schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct NsSchedule {
    name: String,
    steps: Vec<NsCoefficients>,
}

impl NsSchedule {
    pub fn new(name: impl Into<String>, steps: Vec<NsCoefficients>) -> Result<Self> {
        let schedule = Self {
            name: name.into(),
            steps,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    /// A single triple applied `steps` times.
    pub fn constant(name: impl Into<String>, coefficients: NsCoefficients, steps: usize) -> Result<Self> {
        Self::new(name, vec![coefficients; steps])
    }

    pub fn cubic(steps: usize) -> Self {
        Self::constant("cubic", NsCoefficients::new(1.5, -0.5, 0.0), steps)
            .expect("cubic schedule is always valid")
    }

    /// Bundled preset expanded to `steps` iterations.
    pub fn preset(name: &str, steps: usize) -> Result<Self> {
        let text = BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| TeonError::Preset {
                name: name.into(),
                reason: format!("unknown preset; bundled presets are {BUNDLED_PRESETS:?}"),
            })?;
        Self::from_table(name, &parse_table(name, text)?, steps)
    }

    /// Reads `<dir>/<name>.txt`.
    pub fn load(dir: &Path, name: &str, steps: usize) -> Result<Self> {
        let path = dir.join(format!("{name}.txt"));
        let text = std::fs::read_to_string(&path).map_err(|e| TeonError::Preset {
            name: name.into(),
            reason: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::from_table(name, &parse_table(name, &text)?, steps)
    }

    /// Resolves a preset, preferring `dir` (or `$TEON_PRESET_DIR`) over the
    /// bundled tables. Any failure falls back to the cubic schedule.
    pub fn resolve(name: &str, steps: usize, dir: Option<&Path>) -> Self {
        let dir: Option<PathBuf> = dir
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(PRESET_DIR_ENV).map(PathBuf::from));
        let resolved = match &dir {
            Some(d) if d.join(format!("{name}.txt")).exists() => Self::load(d, name, steps),
            _ => Self::preset(name, steps),
        };
        resolved.unwrap_or_else(|e| {
            log::warn!("{e}; falling back to the cubic schedule");
            Self::cubic(steps)
        })
    }

    /// Validates the table as written, then expands it. Truncating a tuned
    /// schedule is allowed even though the shorter composition may no longer
    /// land near 1.
    fn from_table(name: &str, table: &[NsCoefficients], steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(TeonError::Preset {
                name: name.into(),
                reason: "at least one step is required".into(),
            });
        }
        Self::new(name, table.to_vec())?;
        let last = *table.last().expect("parse_table rejects empty tables");
        let steps = (0..steps).map(|i| table.get(i).copied().unwrap_or(last)).collect();
        Ok(Self {
            name: name.into(),
            steps,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn steps(&self) -> &[NsCoefficients] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Composition of every step's scalar polynomial.
    pub fn composed(&self, x: f64) -> f64 {
        self.steps.iter().fold(x, |acc, s| s.apply_scalar(acc))
    }

    /// Coefficients must be finite, and the composed map must send 1 to
    /// within [`COMPOSED_TOLERANCE`] of 1 without overshooting `1 + tol` on
    /// `(0, 1]`. Individual tuned triples are allowed to stray far from
    /// `p(1) = 1`; only their composition is constrained.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| TeonError::Preset {
            name: self.name.clone(),
            reason,
        };
        if self.steps.is_empty() {
            return Err(fail("schedule has no steps".into()));
        }
        if let Some(i) = self
            .steps
            .iter()
            .position(|s| !(s.a.is_finite() && s.b.is_finite() && s.c.is_finite()))
        {
            return Err(fail(format!("step {} has a non-finite coefficient", i + 1)));
        }
        let at_one = self.composed(1.0);
        if !at_one.is_finite() || (at_one - 1.0).abs() > COMPOSED_TOLERANCE {
            return Err(fail(format!("composed map sends 1 to {at_one}")));
        }
        let peak = (1..=1000)
            .map(|i| self.composed(i as f64 / 1000.0))
            .fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() || peak > 1.0 + COMPOSED_TOLERANCE {
            return Err(fail(format!("composed map overshoots to {peak} on (0, 1]")));
        }
        Ok(())
    }
}

impl fmt::Display for NsSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.name, self.steps.len())
    }
}

/// Parses a preset table: whitespace-separated `a b c` per line.
pub fn parse_table(name: &str, text: &str) -> Result<Vec<NsCoefficients>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parsed: Vec<f64> = fields
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| TeonError::Preset {
                name: name.into(),
                reason: format!("line {}: {e}", lineno + 1),
            })?;
        let [a, b, c] = parsed[..] else {
            return Err(TeonError::Preset {
                name: name.into(),
                reason: format!("line {}: expected 3 coefficients, found {}", lineno + 1, fields.len()),
            });
        };
        out.push(NsCoefficients::new(a, b, c));
    }
    if out.is_empty() {
        return Err(TeonError::Preset {
            name: name.into(),
            reason: "no coefficient lines".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_presets_parse_and_validate() {
        for name in BUNDLED_PRESETS {
            let s = NsSchedule::preset(name, 5).unwrap();
            assert_eq!(s.len(), 5);
            assert_eq!(s.name(), name);
        }
        assert!(NsSchedule::preset("nope", 5).is_err());
    }

    #[test]
    fn broadcast_and_truncate() {
        let jordan = NsSchedule::preset("jordan", 3).unwrap();
        assert!(jordan.steps().iter().all(|s| *s == NsCoefficients::new(3.4445, -4.7750, 2.0315)));
        let pe = NsSchedule::preset("polar-express", 7).unwrap();
        assert_eq!(pe.steps()[6], pe.steps()[4]);
        let you = NsSchedule::preset("you", 2).unwrap();
        assert_eq!(you.len(), 2);
    }

    #[test]
    fn grammar() {
        let t = parse_table("t", "# header\n\n 1 2 3 # trailing\n4e0\t5 6\n").unwrap();
        assert_eq!(t, vec![NsCoefficients::new(1.0, 2.0, 3.0), NsCoefficients::new(4.0, 5.0, 6.0)]);
        assert!(parse_table("t", "# only comments\n").is_err());
        assert!(parse_table("t", "1 2\n").is_err());
        assert!(parse_table("t", "1 2 x\n").is_err());
    }

    #[test]
    fn validation_rejects_wild_schedules() {
        assert!(NsSchedule::new("empty", vec![]).is_err());
        assert!(NsSchedule::constant("nan", NsCoefficients::new(f64::NAN, 0.0, 0.0), 2).is_err());
        assert!(NsSchedule::constant("double", NsCoefficients::new(2.0, 0.0, 0.0), 1).is_err());
        // Tuned first steps overshoot p(1) = 1 on their own but compose fine.
        let pe = NsSchedule::preset("polar-express", 5).unwrap();
        assert!((pe.steps()[0].apply_scalar(1.0) - 1.0).abs() > COMPOSED_TOLERANCE);
    }

    #[test]
    fn load_from_directory_and_fallback() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("mine.txt"), "1.5 -0.5 0\n").unwrap();
        std::fs::write(dir.path().join("broken.txt"), "1.5 -0.5\n").unwrap();
        let mine = NsSchedule::resolve("mine", 4, Some(dir.path()));
        assert_eq!(mine.name(), "mine");
        assert_eq!(mine.len(), 4);
        let broken = NsSchedule::resolve("broken", 4, Some(dir.path()));
        assert_eq!(broken, NsSchedule::cubic(4));
        // Not in the directory: bundled table wins.
        assert_eq!(NsSchedule::resolve("jordan", 5, Some(dir.path())).name(), "jordan");
        assert!(NsSchedule::load(dir.path(), "absent", 2).is_err());
    }
}
