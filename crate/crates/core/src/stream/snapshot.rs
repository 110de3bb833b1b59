//! Parameter snapshots: every learned parameter plus the stream-side state,
//! written as line-oriented `key = value` text.
//!
//! Floats are written in shortest round-trip form, so loading and saving
//! again reproduces the file byte for byte (apart from `wall_time`). The
//! certificate and equilibrium sections are derived from the weights and are
//! informational; they are recomputed rather than read back.

use std::collections::BTreeMap;
use std::fmt::{Debug, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{SMatrix, SVector};

use super::engine::{DynamicState, Engine, EngineConfig};
use super::gate::HeadingTracker;
use super::metrics::{ErrorSums, Method, MetricsAccumulator};
use crate::aid::{AidGains, AidState};
use crate::ensemble::EnsembleState;
use crate::error::{Error, Result};
use crate::rls::{Rls, RlsState};
use crate::rnn::{AdamConfig, AdamState, RnnConfig, RnnModel, RnnWeights};

const FORMAT_VERSION: u32 = 1;
const EXTENSION: &str = "snap";

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSnapshot {
    pub vehicle_id: String,
    pub run_id: String,
    /// Seconds since the Unix epoch at save time.
    pub wall_time: u64,
    pub aid: AidState,
    pub rnn: RnnModel,
    pub rls: RlsState,
    pub ensemble: EnsembleState,
    pub dynamic: DynamicState,
    pub metrics: MetricsAccumulator,
}

impl ParameterSnapshot {
    /// Accumulated stream time at which the snapshot was taken.
    pub fn stream_time(&self) -> f64 {
        self.dynamic.elapsed
    }

    pub fn file_name(&self) -> String {
        file_name(&self.vehicle_id, self.stream_time())
    }

    pub fn to_text(&self) -> String {
        let mut w = Writer::default();
        w.comment("surge-ident parameter snapshot");
        w.kv("format", FORMAT_VERSION);
        w.kv("vehicle_id", &self.vehicle_id);
        w.kv("run_id", &self.run_id);
        w.kv("wall_time", self.wall_time);
        w.float("stream_time", self.stream_time());

        w.section("aid");
        w.float("mass", self.aid.m);
        w.floats("theta_hat", &self.aid.theta_hat);
        w.float("v_hat", self.aid.v_hat);
        w.float("k_v", self.aid.gains.k_v);
        w.floats("gamma", &self.aid.gains.gamma);
        w.kv("skipped", self.aid.skipped);

        let rnn = &self.rnn;
        w.section("rnn");
        w.kv("n", rnn.config.n);
        w.kv("m", rnn.config.m);
        w.float("eta", rnn.config.eta);
        w.float("lr", rnn.config.adam.lr);
        w.float("beta1", rnn.config.adam.beta1);
        w.float("beta2", rnn.config.adam.beta2);
        w.float("eps", rnn.config.adam.eps);
        w.floats("weights", &rnn.weights.to_flat());
        w.floats("adam_m", &rnn.adam.m);
        w.floats("adam_v", &rnn.adam.v);
        w.kv("adam_t", rnn.adam.t);
        w.kv("skipped", rnn.skipped);

        w.section("rls");
        write_rls(&mut w, &self.rls.rls);
        w.float("xi_scale", self.rls.xi_scale);
        w.kv("skipped", self.rls.skipped);

        w.section("ensemble");
        write_rls(&mut w, &self.ensemble.rls);

        let d = &self.dynamic;
        w.section("stream");
        w.kv("primed", d.primed);
        w.float("rnn_x", d.rnn_x);
        match &d.rnn_u_prev {
            Some(u) => w.floats("rnn_u_prev", u),
            None => w.kv("rnn_u_prev", "none"),
        }
        match d.heading.last {
            Some((t, h)) => w.floats("heading_last", &[t, h]),
            None => w.kv("heading_last", "none"),
        }
        w.float("heading_rate", d.heading.rate);
        match d.last_t {
            Some(t) => w.float("last_t", t),
            None => w.kv("last_t", "none"),
        }
        w.float("mission_start_t", d.mission_start_t);
        w.float("elapsed_offset", d.elapsed_offset);
        w.float("elapsed", d.elapsed);
        w.float("next_snapshot_at", d.next_snapshot_at);

        w.section("metrics");
        for m in Method::ALL {
            let s = self.metrics.get(m);
            w.kv(m.as_str(), format!("{:?} {:?} {}", s.sum_abs, s.sum_sq, s.count));
        }
        w.kv("skipped_frames", self.metrics.skipped_frames);

        w.section("certification");
        match self.rnn.certify() {
            Ok(c) => {
                w.kv("row_bound_ok", c.row_bound_ok);
                w.kv("gersgorin_ok", c.gersgorin_ok);
                w.kv("m_psd_ok", c.m_psd_ok);
                w.float("min_eigenvalue", c.min_eigenvalue);
                w.float("contraction_rate", c.contraction_rate);
                let ids: Vec<String> = c.violating_neurons.iter().map(|i| i.to_string()).collect();
                w.kv("violating_neurons", ids.join(" "));
            }
            Err(e) => w.kv("error", e),
        }

        let eq = self.rnn.equilibria();
        w.section("equilibrium");
        w.floats("critical_values", &eq.critical_values);
        let points: Vec<String> = eq
            .equilibria
            .iter()
            .map(|p| format!("{:?}:{:?}:{}", p.x, p.slope, p.class))
            .collect();
        w.kv("points", points.join(" "));
        let segs: Vec<String> = eq
            .marginal_segments
            .iter()
            .map(|(a, b)| format!("{a:?}:{b:?}"))
            .collect();
        w.kv("marginal_segments", segs.join(" "));

        w.section("end");
        w.kv("complete", true);
        w.out
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let r = Reader::new(text)?;
        if r.get::<u32>("format")? != FORMAT_VERSION {
            return Err(format!("unsupported format {}", r.raw("format")?));
        }
        if !r.get::<bool>("end.complete")? {
            return Err("snapshot is incomplete".into());
        }

        let aid = AidState {
            theta_hat: r.array("aid.theta_hat")?,
            v_hat: r.get("aid.v_hat")?,
            m: r.get("aid.mass")?,
            gains: AidGains {
                k_v: r.get("aid.k_v")?,
                gamma: r.array("aid.gamma")?,
            },
            skipped: r.get("aid.skipped")?,
        };

        let (n, m) = (r.get::<usize>("rnn.n")?, r.get::<usize>("rnn.m")?);
        let config = RnnConfig {
            n,
            m,
            eta: r.get("rnn.eta")?,
            adam: AdamConfig {
                lr: r.get("rnn.lr")?,
                beta1: r.get("rnn.beta1")?,
                beta2: r.get("rnn.beta2")?,
                eps: r.get("rnn.eps")?,
            },
            init_scale: None,
        };
        let weights =
            RnnWeights::from_flat(n, m, &r.floats("rnn.weights")?).map_err(|e| e.to_string())?;
        let adam = AdamState {
            m: r.floats("rnn.adam_m")?,
            v: r.floats("rnn.adam_v")?,
            t: r.get("rnn.adam_t")?,
        };
        if adam.m.len() != weights.len() || adam.v.len() != weights.len() {
            return Err("optimizer moments do not match the weight count".into());
        }
        let rnn = RnnModel {
            config,
            weights,
            adam,
            skipped: r.get("rnn.skipped")?,
        };

        let rls = RlsState {
            rls: read_rls(&r, "rls")?,
            xi_scale: r.get("rls.xi_scale")?,
            skipped: r.get("rls.skipped")?,
        };
        let ensemble = EnsembleState {
            rls: read_rls(&r, "ensemble")?,
        };

        let pair = |key: &str| -> std::result::Result<Option<(f64, f64)>, String> {
            if r.raw(key)? == "none" {
                return Ok(None);
            }
            let v: [f64; 2] = r.array(key)?;
            Ok(Some((v[0], v[1])))
        };
        let dynamic = DynamicState {
            primed: r.get("stream.primed")?,
            rnn_x: r.get("stream.rnn_x")?,
            rnn_u_prev: match r.raw("stream.rnn_u_prev")? {
                "none" => None,
                _ => Some(r.floats("stream.rnn_u_prev")?),
            },
            heading: HeadingTracker {
                last: pair("stream.heading_last")?,
                rate: r.get("stream.heading_rate")?,
            },
            last_t: match r.raw("stream.last_t")? {
                "none" => None,
                _ => Some(r.get("stream.last_t")?),
            },
            mission_start_t: r.get("stream.mission_start_t")?,
            elapsed_offset: r.get("stream.elapsed_offset")?,
            elapsed: r.get("stream.elapsed")?,
            next_snapshot_at: r.get("stream.next_snapshot_at")?,
        };

        let mut metrics = MetricsAccumulator::default();
        for method in Method::ALL {
            let key = format!("metrics.{}", method.as_str());
            let parts: Vec<&str> = r.raw(&key)?.split_whitespace().collect();
            let [a, s, c] = parts[..] else {
                return Err(format!("{key}: expected 3 fields"));
            };
            *metrics.get_mut(method) = ErrorSums {
                sum_abs: parse_value(&key, a)?,
                sum_sq: parse_value(&key, s)?,
                count: parse_value(&key, c)?,
            };
        }
        metrics.skipped_frames = r.get("metrics.skipped_frames")?;

        Ok(Self {
            vehicle_id: r.raw("vehicle_id")?.to_string(),
            run_id: r.raw("run_id")?.to_string(),
            wall_time: r.get("wall_time")?,
            aid,
            rnn,
            rls,
            ensemble,
            dynamic,
            metrics,
        })
    }

    /// Writes the snapshot into `dir`, creating the directory if needed.
    /// The file is first written under a temporary name and then renamed.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(self.file_name());
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_text()).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|reason| Error::Snapshot {
            path: path.to_path_buf(),
            reason,
        })
    }
}

/// `<vehicle>_<stream time in ms, zero padded>.snap`; lexicographic order
/// of names is chronological order for one vehicle.
pub fn file_name(vehicle_id: &str, stream_time: f64) -> String {
    let ms = (stream_time.max(0.0) * 1000.0).round() as u64;
    format!("{vehicle_id}_{ms:013}.{EXTENSION}")
}

/// Snapshot files of one vehicle in `dir`, in lexicographic order.
pub fn list_snapshots(dir: &Path, vehicle_id: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if !dir.exists() {
        return Ok(out);
    }
    let prefix = format!("{vehicle_id}_");
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let stem_ok = name
            .strip_prefix(&prefix)
            .and_then(|rest| rest.strip_suffix(&format!(".{EXTENSION}")))
            .is_some_and(|digits| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()));
        if stem_ok {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Every vehicle that has at least one snapshot in `dir`.
pub fn list_vehicles(dir: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(stem) = name.strip_suffix(&format!(".{EXTENSION}")) {
            if let Some((vehicle, _)) = stem.rsplit_once('_') {
                out.push(vehicle.to_string());
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// The most recent readable snapshot of a vehicle. Unreadable or corrupt
/// files are skipped with a warning.
pub fn load_latest(dir: &Path, vehicle_id: &str) -> Result<Option<(PathBuf, ParameterSnapshot)>> {
    for path in list_snapshots(dir, vehicle_id)?.into_iter().rev() {
        match ParameterSnapshot::load(&path) {
            Ok(s) => return Ok(Some((path, s))),
            Err(e) => log::warn!("skipping snapshot: {e}"),
        }
    }
    Ok(None)
}

/// Every readable snapshot of a vehicle, oldest first.
pub fn load_all(dir: &Path, vehicle_id: &str) -> Result<Vec<(PathBuf, ParameterSnapshot)>> {
    let mut out = Vec::new();
    for path in list_snapshots(dir, vehicle_id)? {
        match ParameterSnapshot::load(&path) {
            Ok(s) => out.push((path, s)),
            Err(e) => log::warn!("skipping snapshot: {e}"),
        }
    }
    Ok(out)
}

impl Engine {
    pub fn snapshot(&self, vehicle_id: &str, run_id: &str) -> ParameterSnapshot {
        let wall_time = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        ParameterSnapshot {
            vehicle_id: vehicle_id.to_string(),
            run_id: run_id.to_string(),
            wall_time,
            aid: self.aid.clone(),
            rnn: self.rnn.clone(),
            rls: self.rls.clone(),
            ensemble: self.ensemble.clone(),
            dynamic: self.dynamic.clone(),
            metrics: self.metrics.clone(),
        }
    }

    /// Rebuilds an engine from a snapshot. Learned state, including the
    /// estimators' own hyperparameters, comes from the snapshot; stream
    /// settings come from `config`.
    pub fn from_snapshot(mut config: EngineConfig, snap: &ParameterSnapshot) -> Result<Self> {
        config.rnn = snap.rnn.config.clone();
        let mut engine = Engine::from_parts(
            config,
            snap.aid.clone(),
            snap.rnn.clone(),
            snap.rls.clone(),
            snap.ensemble.clone(),
        )?;
        engine.dynamic = snap.dynamic.clone();
        engine.metrics = snap.metrics.clone();
        Ok(engine)
    }
}

fn write_rls<const N: usize>(w: &mut Writer, rls: &Rls<N>) {
    w.floats("theta", rls.theta.as_slice());
    w.floats("p", rls.p.as_slice());
    w.float("lambda_f", rls.lambda_f);
    w.float("p0", rls.p0);
    w.float("p_max", rls.p_max);
    w.kv("resets", rls.resets);
}

fn read_rls<const N: usize>(r: &Reader, section: &str) -> std::result::Result<Rls<N>, String> {
    let key = |k: &str| format!("{section}.{k}");
    let theta = r.floats(&key("theta"))?;
    let p = r.floats(&key("p"))?;
    if theta.len() != N || p.len() != N * N {
        return Err(format!("{section}: expected {N} coefficients"));
    }
    Ok(Rls {
        theta: SVector::from_column_slice(&theta),
        p: SMatrix::from_column_slice(&p),
        lambda_f: r.get(&key("lambda_f"))?,
        p0: r.get(&key("p0"))?,
        p_max: r.get(&key("p_max"))?,
        resets: r.get(&key("resets"))?,
    })
}

#[derive(Default)]
struct Writer {
    out: String,
}

impl Writer {
    fn comment(&mut self, c: &str) {
        let _ = writeln!(self.out, "# {c}");
    }

    fn section(&mut self, name: &str) {
        let _ = writeln!(self.out, "[{name}]");
    }

    fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.out, "{key} = {value}");
    }

    fn float(&mut self, key: &str, v: f64) {
        self.kv(key, format!("{v:?}"));
    }

    fn floats(&mut self, key: &str, vs: &[f64]) {
        let s: Vec<String> = vs.iter().map(|v| format!("{v:?}")).collect();
        self.kv(key, s.join(" "));
    }
}

struct Reader<'a> {
    map: BTreeMap<String, &'a str>,
}

fn parse_value<T: FromStr>(key: &str, s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("{key}: cannot parse '{s}'"))
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> std::result::Result<Self, String> {
        let mut map = BTreeMap::new();
        let mut section = String::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = format!("{name}.");
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected 'key = value'", i + 1))?;
            map.insert(format!("{section}{}", k.trim()), v.trim());
        }
        Ok(Self { map })
    }

    fn raw(&self, key: &str) -> std::result::Result<&'a str, String> {
        self.map.get(key).copied().ok_or_else(|| format!("missing key '{key}'"))
    }

    fn get<T: FromStr>(&self, key: &str) -> std::result::Result<T, String> {
        parse_value(key, self.raw(key)?)
    }

    fn floats(&self, key: &str) -> std::result::Result<Vec<f64>, String> {
        self.raw(key)?
            .split_whitespace()
            .map(|s| parse_value(key, s))
            .collect()
    }

    fn array<const N: usize>(&self, key: &str) -> std::result::Result<[f64; N], String>
    where
        [f64; N]: Debug,
    {
        let v = self.floats(key)?;
        v.try_into()
            .map_err(|v: Vec<f64>| format!("{key}: expected {N} values, got {}", v.len()))
    }
}
