//! Diffusion coefficient families and the homotopy blend.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Slack allowed when checking sampled values against declared bounds.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianBump {
    pub amplitude: f64,
    pub center: Point,
    /// Squared width: the bump is `amplitude * exp(-|x - center|^2 / width_sq)`.
    pub width_sq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientShape {
    Constant {
        value: f64,
    },
    GaussianBumps {
        #[serde(default = "one")]
        base: f64,
        bumps: Vec<GaussianBump>,
    },
    /// `base + amplitude * sin(2 pi (k . x) + phase)`.
    Sinusoidal {
        #[serde(default = "one")]
        base: f64,
        amplitude: f64,
        frequency: [f64; 2],
        #[serde(default)]
        phase: f64,
    },
    /// `inside` within `radius` of `center`, `outside` far away, joined by a
    /// cubic smoothstep of the given width.
    PiecewiseSmoothstep {
        inside: f64,
        outside: f64,
        center: Point,
        radius: f64,
        transition: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// An analytic coefficient together with the bounds it promises to respect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientExpr {
    #[serde(flatten)]
    pub shape: CoefficientShape,
    /// `(c, C)`; derived from the shape parameters when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 2]>,
}

impl CoefficientExpr {
    pub fn new(shape: CoefficientShape) -> Self {
        Self {
            shape,
            bounds: None,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(CoefficientShape::Constant { value })
    }

    /// `1 + amplitude * exp(-|x - center|^2 / width_sq)`.
    pub fn gaussian_bump(amplitude: f64, center: Point, width_sq: f64) -> Self {
        Self::new(CoefficientShape::GaussianBumps {
            base: 1.0,
            bumps: alloc::vec![GaussianBump {
                amplitude,
                center,
                width_sq,
            }],
        })
    }

    pub fn value_at(&self, p: Point) -> f64 {
        match &self.shape {
            CoefficientShape::Constant { value } => *value,
            CoefficientShape::GaussianBumps { base, bumps } => {
                base + bumps
                    .iter()
                    .map(|b| {
                        let dx = p[0] - b.center[0];
                        let dy = p[1] - b.center[1];
                        b.amplitude * libm::exp(-(dx * dx + dy * dy) / b.width_sq)
                    })
                    .sum::<f64>()
            }
            CoefficientShape::Sinusoidal {
                base,
                amplitude,
                frequency,
                phase,
            } => {
                let arg = 2.0 * core::f64::consts::PI * (frequency[0] * p[0] + frequency[1] * p[1]);
                base + amplitude * libm::sin(arg + phase)
            }
            CoefficientShape::PiecewiseSmoothstep {
                inside,
                outside,
                center,
                radius,
                transition,
            } => {
                let r = libm::hypot(p[0] - center[0], p[1] - center[1]);
                let t = ((r - radius) / transition + 0.5).clamp(0.0, 1.0);
                let step = t * t * (3.0 - 2.0 * t);
                inside + (outside - inside) * step
            }
        }
    }

    /// Bounds implied by the shape parameters alone.
    pub fn natural_bounds(&self) -> [f64; 2] {
        match &self.shape {
            CoefficientShape::Constant { value } => [*value, *value],
            CoefficientShape::GaussianBumps { base, bumps } => {
                let neg: f64 = bumps.iter().map(|b| b.amplitude.min(0.0)).sum();
                let pos: f64 = bumps.iter().map(|b| b.amplitude.max(0.0)).sum();
                [base + neg, base + pos]
            }
            CoefficientShape::Sinusoidal {
                base, amplitude, ..
            } => [base - amplitude.abs(), base + amplitude.abs()],
            CoefficientShape::PiecewiseSmoothstep {
                inside, outside, ..
            } => [inside.min(*outside), inside.max(*outside)],
        }
    }

    pub fn declared_bounds(&self) -> [f64; 2] {
        self.bounds.unwrap_or_else(|| self.natural_bounds())
    }

    /// Multiplies the variable part of the coefficient by `factor`.
    pub fn scale_amplitude(&self, factor: f64) -> Self {
        let shape = match &self.shape {
            CoefficientShape::Constant { value } => CoefficientShape::Constant {
                value: 1.0 + factor * (value - 1.0),
            },
            CoefficientShape::GaussianBumps { base, bumps } => CoefficientShape::GaussianBumps {
                base: *base,
                bumps: bumps
                    .iter()
                    .map(|b| GaussianBump {
                        amplitude: b.amplitude * factor,
                        ..b.clone()
                    })
                    .collect(),
            },
            CoefficientShape::Sinusoidal {
                base,
                amplitude,
                frequency,
                phase,
            } => CoefficientShape::Sinusoidal {
                base: *base,
                amplitude: amplitude * factor,
                frequency: *frequency,
                phase: *phase,
            },
            CoefficientShape::PiecewiseSmoothstep {
                inside,
                outside,
                center,
                radius,
                transition,
            } => CoefficientShape::PiecewiseSmoothstep {
                inside: outside + factor * (inside - outside),
                outside: *outside,
                center: *center,
                radius: *radius,
                transition: *transition,
            },
        };
        Self {
            shape,
            bounds: None,
        }
    }

    /// Samples the expression at triangle centroids.
    pub fn evaluate(&self, mesh: &Mesh) -> Result<Coefficient> {
        let [lower, upper] = self.declared_bounds();
        if !(lower > 0.0) || !(upper >= lower) {
            return Err(Error::InvalidParameter(format!(
                "coefficient bounds [{lower}, {upper}] must satisfy 0 < c <= C"
            )));
        }
        let values: Vec<f64> = (0..mesh.triangle_count())
            .map(|t| self.value_at(mesh.centroid(t)))
            .collect();
        Coefficient::new(values, lower, upper)
    }
}

impl fmt::Display for CoefficientExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            CoefficientShape::Constant { value } => write!(f, "constant({value})"),
            CoefficientShape::GaussianBumps { base, bumps } => {
                write!(f, "gaussian_bumps(base={base}")?;
                for b in bumps {
                    write!(
                        f,
                        "; amplitude={} center=({}, {}) width_sq={}",
                        b.amplitude, b.center[0], b.center[1], b.width_sq
                    )?;
                }
                write!(f, ")")
            }
            CoefficientShape::Sinusoidal {
                base,
                amplitude,
                frequency,
                phase,
            } => write!(
                f,
                "sinusoidal(base={base}; amplitude={amplitude}; frequency=({}, {}); phase={phase})",
                frequency[0], frequency[1]
            ),
            CoefficientShape::PiecewiseSmoothstep {
                inside,
                outside,
                center,
                radius,
                transition,
            } => write!(
                f,
                "piecewise_smoothstep(inside={inside}; outside={outside}; center=({}, {}); radius={radius}; transition={transition})",
                center[0], center[1]
            ),
        }
    }
}

/// Piecewise-constant coefficient, one value per triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficient {
    values: Vec<f64>,
    lower: f64,
    upper: f64,
}

impl Coefficient {
    /// Checks every value against `[lower, upper]` and tightens the bounds
    /// to the observed range.
    pub fn new(values: Vec<f64>, lower: f64, upper: f64) -> Result<Self> {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for (element, &value) in values.iter().enumerate() {
            let ok = value > 0.0
                && value >= lower - BOUND_SLACK * lower.abs().max(1.0)
                && value <= upper + BOUND_SLACK * upper.abs().max(1.0);
            if !ok || !value.is_finite() {
                return Err(Error::CoefficientOutOfBounds {
                    element,
                    value,
                    lower,
                    upper,
                });
            }
            min = min.min(value);
            max = max.max(value);
        }
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty coefficient".into()));
        }
        Ok(Self {
            values,
            lower: min,
            upper: max,
        })
    }

    pub fn constant(mesh: &Mesh, value: f64) -> Result<Self> {
        Self::new(alloc::vec![value; mesh.triangle_count()], value, value)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    /// `(1 - s) gamma0 + s gamma1`, element by element.
    pub fn blend(gamma0: &Coefficient, gamma1: &Coefficient, s: f64) -> Result<Coefficient> {
        if gamma0.values.len() != gamma1.values.len() {
            return Err(Error::MeshMismatch(
                gamma0.values.len(),
                gamma1.values.len(),
            ));
        }
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!(
                "blend parameter s = {s} outside [0, 1]"
            )));
        }
        let values = gamma0
            .values
            .iter()
            .zip(&gamma1.values)
            .map(|(a, b)| (1.0 - s) * a + s * b)
            .collect();
        let lower = (1.0 - s) * gamma0.lower + s * gamma1.lower;
        let upper = (1.0 - s) * gamma0.upper + s * gamma1.upper;
        Ok(Coefficient {
            values,
            lower,
            upper,
        })
    }

    /// Element-wise `self - other`; the s-derivative of the blend path.
    pub fn difference(&self, other: &Coefficient) -> Result<Vec<f64>> {
        if self.values.len() != other.values.len() {
            return Err(Error::MeshMismatch(self.values.len(), other.values.len()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect())
    }
}

/// Convenience: describe an expression as a string.
pub fn describe(expr: &CoefficientExpr) -> String {
    format!("{expr}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn constant_evaluates_exactly() {
        let mesh = Mesh::build_structured(4).unwrap();
        let c = CoefficientExpr::constant(1.0).evaluate(&mesh).unwrap();
        assert!(c.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn gaussian_bump_peak_and_tail() {
        let mesh = Mesh::build_structured(32).unwrap();
        let expr = CoefficientExpr::gaussian_bump(0.5, [0.7, 0.3], 1.0 / 20.0);
        let c = expr.evaluate(&mesh).unwrap();
        let nearest = (0..mesh.triangle_count())
            .min_by(|&a, &b| {
                let da = dist2(mesh.centroid(a), [0.7, 0.3]);
                let db = dist2(mesh.centroid(b), [0.7, 0.3]);
                da.total_cmp(&db)
            })
            .unwrap();
        let r2 = dist2(mesh.centroid(nearest), [0.7, 0.3]);
        let exact = 1.0 + 0.5 * libm::exp(-20.0 * r2);
        assert!((c.values()[nearest] - exact).abs() < 1e-15);
        assert!((c.values()[nearest] - 1.5).abs() < 1e-2);
        // Far corner (0, 1): distance^2 = 0.98, bump ~ 0.5 e^{-19.6}.
        let corner = (0..mesh.triangle_count())
            .min_by(|&a, &b| {
                dist2(mesh.centroid(a), [0.0, 1.0]).total_cmp(&dist2(mesh.centroid(b), [0.0, 1.0]))
            })
            .unwrap();
        assert!((c.values()[corner] - 1.0).abs() < 1e-8);
    }

    fn dist2(a: Point, b: Point) -> f64 {
        (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
    }

    #[test]
    fn negative_coefficient_rejected() {
        let mesh = Mesh::build_structured(8).unwrap();
        let bad = CoefficientExpr::gaussian_bump(-2.0, [0.5, 0.5], 0.05);
        assert!(bad.evaluate(&mesh).is_err());
        let mut bounded = CoefficientExpr::gaussian_bump(-2.0, [0.5, 0.5], 0.05);
        bounded.bounds = Some([0.1, 2.0]);
        match bounded.evaluate(&mesh) {
            Err(Error::CoefficientOutOfBounds { value, .. }) => assert!(value < 0.1),
            other => panic!("expected bound violation, got {other:?}"),
        }
    }

    #[test]
    fn blend_endpoints_and_midpoint() {
        let mesh = Mesh::build_structured(3).unwrap();
        let a = Coefficient::constant(&mesh, 1.0).unwrap();
        let b = Coefficient::constant(&mesh, 3.0).unwrap();
        assert_eq!(Coefficient::blend(&a, &b, 0.0).unwrap(), a);
        assert_eq!(Coefficient::blend(&a, &b, 1.0).unwrap(), b);
        let mid = Coefficient::blend(&a, &b, 0.5).unwrap();
        assert!(mid.values().iter().all(|&v| v == 2.0));
        assert!(Coefficient::blend(&a, &b, 1.5).is_err());
    }

    #[test]
    fn blend_rejects_mesh_mismatch() {
        let a = Coefficient::new(vec![1.0; 4], 1.0, 1.0).unwrap();
        let b = Coefficient::new(vec![1.0; 6], 1.0, 1.0).unwrap();
        assert!(matches!(
            Coefficient::blend(&a, &b, 0.5),
            Err(Error::MeshMismatch(4, 6))
        ));
    }

    #[test]
    fn shapes_parse_from_tagged_records() {
        let smooth = CoefficientExpr::new(CoefficientShape::PiecewiseSmoothstep {
            inside: 2.0,
            outside: 1.0,
            center: [0.5, 0.5],
            radius: 0.2,
            transition: 0.1,
        });
        assert_eq!(smooth.value_at([0.5, 0.5]), 2.0);
        assert_eq!(smooth.value_at([0.0, 0.0]), 1.0);
        assert_eq!(smooth.natural_bounds(), [1.0, 2.0]);
        let sine = CoefficientExpr::new(CoefficientShape::Sinusoidal {
            base: 1.0,
            amplitude: 0.3,
            frequency: [1.0, 0.0],
            phase: 0.0,
        });
        assert!((sine.value_at([0.25, 0.1]) - 1.3).abs() < 1e-15);
    }
}
