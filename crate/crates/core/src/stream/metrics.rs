use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Aid,
    Rnn,
    Rls,
    Ave,
    We,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Aid, Method::Rnn, Method::Rls, Method::Ave, Method::We];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Aid => "aid",
            Method::Rnn => "rnn",
            Method::Rls => "rls",
            Method::Ave => "ave",
            Method::We => "we",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Method::ALL.into_iter().find(|m| m.as_str() == s)
    }

    fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Running absolute and squared error sums for one method.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorSums {
    pub sum_abs: f64,
    pub sum_sq: f64,
    pub count: u64,
}

impl ErrorSums {
    pub fn push(&mut self, err: f64) {
        self.sum_abs += err.abs();
        self.sum_sq += err * err;
        self.count += 1;
    }

    pub fn mae(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum_abs / self.count as f64
        }
    }

    pub fn mse(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum_sq / self.count as f64
        }
    }
}

/// Per-method prediction error statistics over frames with a measurement.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsAccumulator {
    pub sums: [ErrorSums; 5],
    /// Frames skipped by any estimator or excluded as start-up frames.
    pub skipped_frames: u64,
}

impl MetricsAccumulator {
    pub fn push(&mut self, method: Method, predicted: f64, measured: f64) {
        self.sums[method.index()].push(predicted - measured);
    }

    pub fn get(&self, method: Method) -> &ErrorSums {
        &self.sums[method.index()]
    }

    pub fn get_mut(&mut self, method: Method) -> &mut ErrorSums {
        &mut self.sums[method.index()]
    }

    pub fn mae(&self, method: Method) -> f64 {
        self.get(method).mae()
    }

    pub fn mse(&self, method: Method) -> f64 {
        self.get(method).mse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mae_never_exceeds_rmse() {
        let mut m = MetricsAccumulator::default();
        for (k, e) in [0.1, -0.4, 0.0, 2.5, -0.05].iter().enumerate() {
            m.push(Method::Aid, *e + k as f64, k as f64);
        }
        let s = m.get(Method::Aid);
        assert_eq!(s.count, 5);
        assert!(s.mae() <= s.mse().sqrt() + 1e-15);
        assert!((s.mae() - 3.05 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn empty_metrics_are_nan() {
        let m = MetricsAccumulator::default();
        assert!(m.mae(Method::We).is_nan());
    }
}
