//! Offline evaluation of stored snapshots on recorded missions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stream::{
    run_log, Engine, EngineConfig, LearningMode, Method, MetricsAccumulator, MissionLog,
    ParameterSnapshot,
};

/// Replays `log` with the snapshot's parameters held fixed and returns the
/// prediction errors over that log alone.
pub fn evaluate(
    config: &EngineConfig,
    snapshot: &ParameterSnapshot,
    log: &MissionLog,
) -> Result<MetricsAccumulator> {
    let mut engine = Engine::from_snapshot(config.clone(), snapshot)?.with_mode(LearningMode::Frozen);
    engine.start_mission()?;
    engine.metrics = MetricsAccumulator::default();
    run_log(&mut engine, log, None, |_| {})?;
    Ok(engine.metrics)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValEntry {
    pub snapshot: usize,
    pub log: usize,
    pub metrics: MetricsAccumulator,
}

/// Every (snapshot, log) pair, evaluated in parallel. Results are ordered by
/// snapshot index, then log index.
pub fn cross_validate(
    config: &EngineConfig,
    snapshots: &[ParameterSnapshot],
    logs: &[MissionLog],
) -> Result<Vec<CrossValEntry>> {
    let pairs: Vec<(usize, usize)> = (0..snapshots.len())
        .flat_map(|s| (0..logs.len()).map(move |l| (s, l)))
        .collect();
    pairs
        .par_iter()
        .map(|&(s, l)| {
            Ok(CrossValEntry {
                snapshot: s,
                log: l,
                metrics: evaluate(config, &snapshots[s], &logs[l])?,
            })
        })
        .collect()
}

/// Five-number summary with Tukey outliers (beyond 1.5 IQR from the
/// quartiles).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub outliers: Vec<f64>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl BoxStats {
    /// Summary of the finite values; `None` when there are none.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let (q1, q3) = (quantile(&v, 0.25), quantile(&v, 0.75));
        let fence = 1.5 * (q3 - q1);
        Some(Self {
            min: v[0],
            q1,
            median: quantile(&v, 0.5),
            q3,
            max: v[v.len() - 1],
            outliers: v
                .iter()
                .copied()
                .filter(|x| *x < q1 - fence || *x > q3 + fence)
                .collect(),
        })
    }
}

/// Per-method distribution of MAE or MSE over cross-validation entries.
pub fn summarize(entries: &[CrossValEntry], method: Method, use_mse: bool) -> Option<BoxStats> {
    let values: Vec<f64> = entries
        .iter()
        .map(|e| {
            if use_mse {
                e.metrics.mse(method)
            } else {
                e.metrics.mae(method)
            }
        })
        .collect();
    BoxStats::from_values(&values)
}

/// Pooled MSE of one method over several logs.
pub fn pooled_mse(
    config: &EngineConfig,
    snapshot: &ParameterSnapshot,
    logs: &[MissionLog],
    method: Method,
) -> Result<f64> {
    let results: Vec<MetricsAccumulator> = logs
        .par_iter()
        .map(|l| evaluate(config, snapshot, l))
        .collect::<Result<_>>()?;
    let (sq, n) = results.iter().fold((0.0, 0u64), |(sq, n), m| {
        let s = m.get(method);
        (sq + s.sum_sq, n + s.count)
    });
    if n == 0 {
        return Err(Error::NoData("no measured frames to score".into()));
    }
    Ok(sq / n as f64)
}

/// Index of the snapshot with the lowest pooled MSE on `logs`.
pub fn best_snapshot(
    config: &EngineConfig,
    snapshots: &[ParameterSnapshot],
    logs: &[MissionLog],
    method: Method,
) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in snapshots.iter().enumerate() {
        let mse = pooled_mse(config, s, logs, method)?;
        if best.is_none_or(|(_, b)| mse < b) {
            best = Some((i, mse));
        }
    }
    best.ok_or_else(|| Error::NoData("no snapshots to choose from".into()))
}

/// `matrix[i][j]` is the pooled MSE of model `i` on the logs of vehicle `j`.
pub fn cross_vehicle_matrix(
    config: &EngineConfig,
    models: &[ParameterSnapshot],
    logs_by_vehicle: &[Vec<MissionLog>],
    method: Method,
) -> Result<Vec<Vec<f64>>> {
    let cells: Vec<(usize, usize)> = (0..models.len())
        .flat_map(|i| (0..logs_by_vehicle.len()).map(move |j| (i, j)))
        .collect();
    let flat: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| pooled_mse(config, &models[i], &logs_by_vehicle[j], method))
        .collect::<Result<_>>()?;
    Ok(flat
        .chunks(logs_by_vehicle.len().max(1))
        .map(|row| row.to_vec())
        .collect())
}

/// Fraction of rows whose diagonal entry is the row minimum, and the same
/// for columns.
pub fn diagonal_dominance(matrix: &[Vec<f64>]) -> (f64, f64) {
    let n = matrix.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let rows = (0..n)
        .filter(|&i| matrix[i].iter().all(|&x| matrix[i][i] <= x))
        .count();
    let cols = (0..n)
        .filter(|&j| (0..n).all(|i| matrix[j][j] <= matrix[i][j]))
        .count();
    (rows as f64 / n as f64, cols as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!((quantile(&v, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn box_stats_flag_outliers() {
        let v = [1.0, 1.1, 0.9, 1.05, 0.95, 10.0, f64::NAN];
        let b = BoxStats::from_values(&v).unwrap();
        assert_eq!(b.outliers, vec![10.0]);
        assert_eq!(b.max, 10.0);
        assert!(b.min <= b.q1 && b.q1 <= b.median && b.median <= b.q3 && b.q3 <= b.max);
        assert!(BoxStats::from_values(&[f64::NAN]).is_none());
    }

    #[test]
    fn dominance_counts_rows_and_columns() {
        let m = vec![vec![1.0, 2.0, 3.0], vec![0.5, 1.0, 2.0], vec![4.0, 5.0, 6.0]];
        let (rows, cols) = diagonal_dominance(&m);
        assert!((rows - 1.0 / 3.0).abs() < 1e-12);
        assert!((cols - 1.0 / 3.0).abs() < 1e-12);
    }
}
