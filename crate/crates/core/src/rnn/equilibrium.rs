//! Equilibria of the zero-input recurrent map `x -> phi(x, 0)` on `[0, 1]`.
//!
//! With `u = 0` the map is piecewise affine with kinks where a neuron's
//! pre-activation `w1_i x + b_i` crosses zero. Between adjacent critical values
//! the map is `q x + c`, so each segment contributes at most one fixed point.

use std::fmt;

use super::RnnWeights;

const DEDUP_TOL: f64 = 1e-12;
const ROOT_TOL: f64 = 1e-9;
const SLOPE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumClass {
    /// Slope in `[0, 1)`.
    Stable,
    /// Slope in `(-1, 0)`.
    StableOscillatory,
    /// `|slope| > 1`.
    Unstable,
    /// `|slope| = 1`.
    Marginal,
}

impl EquilibriumClass {
    pub fn from_slope(q: f64) -> Self {
        if (q.abs() - 1.0).abs() <= SLOPE_TOL {
            Self::Marginal
        } else if q.abs() > 1.0 {
            Self::Unstable
        } else if q >= 0.0 {
            Self::Stable
        } else {
            Self::StableOscillatory
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Stable => "stable",
            Self::StableOscillatory => "stable-oscillatory",
            Self::Unstable => "unstable",
            Self::Marginal => "marginal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stable" => Some(Self::Stable),
            "stable-oscillatory" => Some(Self::StableOscillatory),
            "unstable" => Some(Self::Unstable),
            "marginal" => Some(Self::Marginal),
            _ => None,
        }
    }
}

impl fmt::Display for EquilibriumClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPoint {
    pub x: f64,
    pub slope: f64,
    pub class: EquilibriumClass,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EquilibriumReport {
    pub equilibria: Vec<EquilibriumPoint>,
    pub critical_values: Vec<f64>,
    /// Segments `[lo, hi]` on which the map is the identity, so every point
    /// is fixed. These are reported instead of listing a continuum of points.
    pub marginal_segments: Vec<(f64, f64)>,
}

/// `{0, 1}` together with every neuron kink `-b_i / w1_i` inside `[0, 1]`,
/// sorted and deduplicated.
pub fn critical_values(w: &RnnWeights) -> Vec<f64> {
    let mut values = vec![0.0, 1.0];
    for (w1, b) in w.w1.iter().zip(&w.b) {
        if *w1 != 0.0 {
            let x = -b / w1;
            if (0.0..=1.0).contains(&x) {
                values.push(x);
            }
        }
    }
    values.sort_by(f64::total_cmp);
    values.dedup_by(|later, kept| (*later - *kept).abs() <= DEDUP_TOL);
    values
}

/// Slope and intercept of the zero-input map on the segment containing `mid`.
fn segment_affine(w: &RnnWeights, mid: f64) -> (f64, f64) {
    let mut q = 0.0;
    let mut c = 0.0;
    for i in 0..w.n {
        if w.w1[i] * mid + w.b[i] > 0.0 {
            q += w.a[i] * w.w1[i];
            c += w.a[i] * w.b[i];
        }
    }
    (q, c)
}

pub fn equilibria(w: &RnnWeights) -> EquilibriumReport {
    let critical = critical_values(w);
    let mut report = EquilibriumReport {
        critical_values: critical.clone(),
        ..Default::default()
    };

    for seg in critical.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let (q, c) = segment_affine(w, 0.5 * (lo + hi));
        if (q - 1.0).abs() <= SLOPE_TOL {
            if c.abs() <= SLOPE_TOL {
                report.marginal_segments.push((lo, hi));
            }
            continue;
        }
        let x = c / (1.0 - q);
        if x < lo - ROOT_TOL || x > hi + ROOT_TOL {
            continue;
        }
        let x = x.clamp(lo, hi);
        // a root on a shared kink is found from both sides; keep the steeper
        // one-sided slope so the classification is conservative
        if let Some(prev) = report
            .equilibria
            .iter_mut()
            .find(|e| (e.x - x).abs() <= ROOT_TOL)
        {
            if q.abs() > prev.slope.abs() {
                prev.slope = q;
                prev.class = EquilibriumClass::from_slope(q);
            }
            continue;
        }
        report.equilibria.push(EquilibriumPoint {
            x,
            slope: q,
            class: EquilibriumClass::from_slope(q),
        });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(a: f64, w1: f64, b: f64) -> RnnWeights {
        let mut w = RnnWeights::zeros(1, 1);
        w.a = vec![a];
        w.w1 = vec![w1];
        w.b = vec![b];
        w
    }

    #[test]
    fn critical_value_examples() {
        let mut w = RnnWeights::zeros(3, 1);
        w.w1 = vec![2.0, -1.0, 0.5];
        assert_eq!(critical_values(&w), vec![0.0, 1.0]);

        assert_eq!(critical_values(&single(1.0, 2.0, -1.0)), vec![0.0, 0.5, 1.0]);
        assert_eq!(critical_values(&single(1.0, 0.0, -1.0)), vec![0.0, 1.0]);
        // kinks outside [0, 1] are dropped
        assert_eq!(critical_values(&single(1.0, 1.0, -3.0)), vec![0.0, 1.0]);
    }

    #[test]
    fn half_slope_map_has_stable_origin() {
        let r = equilibria(&single(1.0, 0.5, 0.0));
        assert_eq!(r.equilibria.len(), 1);
        let e = r.equilibria[0];
        assert_eq!(e.x, 0.0);
        assert_eq!(e.slope, 0.5);
        assert_eq!(e.class, EquilibriumClass::Stable);
    }

    #[test]
    fn identity_map_is_a_marginal_segment() {
        let r = equilibria(&single(1.0, 1.0, 0.0));
        assert!(r.equilibria.is_empty());
        assert_eq!(r.marginal_segments, vec![(0.0, 1.0)]);
    }

    #[test]
    fn steep_kinked_map_has_unstable_point() {
        // phi(x) = 2 relu(2x - 1), fixed at x = 0 (flat piece) and x = 2/3
        let r = equilibria(&single(2.0, 2.0, -1.0));
        assert_eq!(r.equilibria.len(), 2);
        assert_eq!(r.equilibria[0].class, EquilibriumClass::Stable);
        assert!((r.equilibria[1].x - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.equilibria[1].class, EquilibriumClass::Unstable);
    }

    #[test]
    fn classification_boundaries() {
        assert_eq!(EquilibriumClass::from_slope(0.0), EquilibriumClass::Stable);
        assert_eq!(EquilibriumClass::from_slope(-0.5), EquilibriumClass::StableOscillatory);
        assert_eq!(EquilibriumClass::from_slope(-1.0), EquilibriumClass::Marginal);
        assert_eq!(EquilibriumClass::from_slope(1.5), EquilibriumClass::Unstable);
        for c in [
            EquilibriumClass::Stable,
            EquilibriumClass::StableOscillatory,
            EquilibriumClass::Unstable,
            EquilibriumClass::Marginal,
        ] {
            assert_eq!(EquilibriumClass::parse(c.as_str()), Some(c));
        }
    }
}
