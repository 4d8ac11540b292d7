//! Monte Carlo sweeps over (detector, N, Ω, SNR) and their CSV products.
//!
//! Every trial draws its frame from a ChaCha stream seeded by mixing the base
//! seed with the sweep-cell and trial indices, so results do not depend on
//! execution order and both detectors score the same frames in each cell.

use std::collections::HashSet;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::baseline::{self, BpdnConfig};
use crate::cdma::{self, CdmaConfig, Frame};
use crate::detector;
use crate::linsys::LinearSystem;
use crate::metrics::{RatePoint, Tally, TrialOutcome};
use crate::model::{AugmentedAlphabet, DetectionParams};
use crate::Matrix;

pub const SWEEP_HEADER: &str = "detector,n,omega,snr_db,trials,gse,tar,far,true_active,\
false_active,false_inactive,true_inactive,mean_nodes_visited";
pub const ROC_HEADER: &str = "omega,snr_db,far,tar";

/// Noise variance handed to the detector when a frame is noise free; the
/// penalty needs `σ² > 0`.
pub const DETECTOR_NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl HarnessError {
    /// Process exit code: 1 config, 2 I/O, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Io { .. } => 2,
            HarnessError::Internal(_) => 3,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn config_err(e: impl fmt::Display) -> HarnessError {
    HarnessError::Config(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorId {
    Bpdn,
    Brcsmud,
}

impl DetectorId {
    pub fn name(self) -> &'static str {
        match self {
            DetectorId::Bpdn => "bpdn",
            DetectorId::Brcsmud => "brcsmud",
        }
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorId {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s {
            "brcsmud" => Ok(DetectorId::Brcsmud),
            "bpdn" => Ok(DetectorId::Bpdn),
            other => Err(config_err(format!(
                "unknown detector `{other}` (expected brcsmud or bpdn)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub num_nodes: usize,
    pub channel_taps: usize,
    pub activity_prob: f64,
    pub alphabet: AugmentedAlphabet,
    pub omega_list: Vec<f64>,
    pub snr_db_list: Vec<f64>,
    pub spreading_gain_list: Vec<usize>,
    pub trials_per_point: usize,
    pub base_seed: u64,
    pub detectors: Vec<DetectorId>,
    /// l1 weight; `None` picks `σ √(2 ln K)` per SNR.
    pub reg_weight: Option<f64>,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub quant_threshold: f64,
    pub output_path: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            num_nodes: 20,
            channel_taps: 4,
            activity_prob: 0.2,
            alphabet: AugmentedAlphabet::bpsk(),
            omega_list: vec![1.0],
            snr_db_list: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0],
            spreading_gain_list: vec![5],
            trials_per_point: 10_000,
            base_seed: 1,
            detectors: vec![DetectorId::Brcsmud, DetectorId::Bpdn],
            reg_weight: None,
            max_iters: baseline::DEFAULT_MAX_ITERS,
            rel_tol: baseline::DEFAULT_REL_TOL,
            quant_threshold: baseline::DEFAULT_QUANT_THRESHOLD,
            output_path: PathBuf::from("sweep.csv"),
        }
    }
}

fn parse_scalar<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .trim()
        .parse()
        .map_err(|_| config_err(format!("cannot parse `{value}` for `{key}`")))
}

/// Parses a comma-separated list; empty entries are rejected.
pub fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, HarnessError> {
    value
        .split(',')
        .map(|item| {
            let item = item.trim();
            if item.is_empty() {
                Err(config_err(format!("empty entry in list for `{key}`")))
            } else {
                parse_scalar(key, item)
            }
        })
        .collect()
}

fn parse_detectors(key: &str, value: &str) -> Result<Vec<DetectorId>, HarnessError> {
    parse_list::<String>(key, value)?
        .iter()
        .map(|s| s.parse())
        .collect()
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_path: Option<PathBuf>,
    pub base_seed: Option<u64>,
    pub trials_per_point: Option<usize>,
    pub snr_db_list: Option<Vec<f64>>,
    pub omega_list: Option<Vec<f64>>,
    pub spreading_gain_list: Option<Vec<usize>>,
    pub detectors: Option<Vec<DetectorId>>,
}

impl ExperimentConfig {
    /// Parses `key = value` lines over the defaults. Blank lines and lines
    /// starting with `#` are ignored; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected key=value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        match key {
            "num_nodes" => self.num_nodes = parse_scalar(key, value)?,
            "channel_taps" => self.channel_taps = parse_scalar(key, value)?,
            "activity_prob" => self.activity_prob = parse_scalar(key, value)?,
            "alphabet" => {
                self.alphabet = AugmentedAlphabet::new(&parse_list::<f64>(key, value)?)
                    .map_err(config_err)?
            }
            "omega_list" => self.omega_list = parse_list(key, value)?,
            "snr_db_list" => self.snr_db_list = parse_list(key, value)?,
            "snr_db" => self.snr_db_list = vec![parse_scalar(key, value)?],
            "spreading_gain_list" => self.spreading_gain_list = parse_list(key, value)?,
            "spreading_gain" => self.spreading_gain_list = vec![parse_scalar(key, value)?],
            "trials_per_point" => self.trials_per_point = parse_scalar(key, value)?,
            "base_seed" => self.base_seed = parse_scalar(key, value)?,
            "detectors" => self.detectors = parse_detectors(key, value)?,
            "reg_weight" => {
                self.reg_weight = match value {
                    "auto" => None,
                    v => Some(parse_scalar(key, v)?),
                }
            }
            "max_iters" => self.max_iters = parse_scalar(key, value)?,
            "rel_tol" => self.rel_tol = parse_scalar(key, value)?,
            "quant_threshold" => self.quant_threshold = parse_scalar(key, value)?,
            "output_path" => self.output_path = PathBuf::from(value),
            other => return Err(config_err(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), HarnessError> {
        if let Some(p) = &o.output_path {
            self.output_path = p.clone();
        }
        if let Some(s) = o.base_seed {
            self.base_seed = s;
        }
        if let Some(t) = o.trials_per_point {
            self.trials_per_point = t;
        }
        if let Some(v) = &o.snr_db_list {
            self.snr_db_list = v.clone();
        }
        if let Some(v) = &o.omega_list {
            self.omega_list = v.clone();
        }
        if let Some(v) = &o.spreading_gain_list {
            self.spreading_gain_list = v.clone();
        }
        if let Some(v) = &o.detectors {
            self.detectors = v.clone();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        fn distinct<T: Copy>(name: &str, items: &[T], key: impl Fn(T) -> u64) -> Result<(), HarnessError> {
            if items.is_empty() {
                return Err(config_err(format!("`{name}` must not be empty")));
            }
            let mut seen = HashSet::new();
            if !items.iter().all(|&v| seen.insert(key(v))) {
                return Err(config_err(format!("`{name}` contains duplicates")));
            }
            Ok(())
        }
        distinct("omega_list", &self.omega_list, f64::to_bits)?;
        distinct("snr_db_list", &self.snr_db_list, f64::to_bits)?;
        distinct("spreading_gain_list", &self.spreading_gain_list, |n| n as u64)?;
        distinct("detectors", &self.detectors, |d| d as u64)?;
        if let Some(bad) = self.omega_list.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(config_err(format!("Bayes factor must be positive, got {bad}")));
        }
        if self.trials_per_point == 0 {
            return Err(config_err("trials_per_point must be at least 1"));
        }
        for &n in &self.spreading_gain_list {
            for &snr in &self.snr_db_list {
                self.cdma_config(n, snr).validate().map_err(config_err)?;
            }
        }
        let probe_weight = self.reg_weight.unwrap_or(1.0);
        BpdnConfig::new(probe_weight, self.max_iters, self.rel_tol, self.quant_threshold)
            .map_err(config_err)?;
        Ok(())
    }

    pub fn cdma_config(&self, spreading_gain: usize, snr_db: f64) -> CdmaConfig {
        CdmaConfig {
            num_nodes: self.num_nodes,
            spreading_gain,
            channel_taps: self.channel_taps,
            activity_prob: self.activity_prob,
            snr_db,
            alphabet: self.alphabet.clone(),
        }
    }

    pub fn bpdn_config(&self, noise_var: f64) -> BpdnConfig {
        BpdnConfig {
            reg_weight: self
                .reg_weight
                .unwrap_or_else(|| baseline::default_reg_weight(noise_var, self.num_nodes)),
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            quant_threshold: self.quant_threshold,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.detectors.len()
            * self.spreading_gain_list.len()
            * self.omega_list.len()
            * self.snr_db_list.len()
    }
}

/// Indices of one grid cell into the config's lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SweepCell {
    pub snr_index: usize,
    pub omega_index: usize,
    pub gain_index: usize,
}

impl SweepCell {
    fn values(&self, cfg: &ExperimentConfig) -> Result<(f64, f64, usize), HarnessError> {
        let get = |list_len: usize, idx: usize, name: &str| {
            if idx < list_len {
                Ok(idx)
            } else {
                Err(config_err(format!("{name} index {idx} out of range")))
            }
        };
        Ok((
            cfg.snr_db_list[get(cfg.snr_db_list.len(), self.snr_index, "snr")?],
            cfg.omega_list[get(cfg.omega_list.len(), self.omega_index, "omega")?],
            cfg.spreading_gain_list[get(cfg.spreading_gain_list.len(), self.gain_index, "gain")?],
        ))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the frame stream for one trial. The detector is deliberately not
/// an input: both detectors in a cell see the same frames.
pub fn trial_seed(base_seed: u64, cell: SweepCell, trial: u64) -> u64 {
    [
        cell.snr_index as u64,
        cell.omega_index as u64,
        cell.gain_index as u64,
        trial,
    ]
    .into_iter()
    .fold(splitmix64(base_seed), |h, v| splitmix64(h ^ v))
}

/// FNV-1a over the bit patterns of `T`, `y` and `x`.
pub fn frame_digest(frame: &Frame) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let words = frame
        .system
        .matrix()
        .as_slice()
        .iter()
        .chain(frame.system.observation())
        .chain(&frame.x_true)
        .map(|v| v.to_bits());
    for w in words {
        for b in w.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub frame_digest: u64,
    pub outcome: TrialOutcome,
    pub x_hat: Vec<f64>,
}

/// Draws the frame for `(cell, trial)` and runs one detector on it.
pub fn run_trial(
    cfg: &ExperimentConfig,
    cell: SweepCell,
    detector_id: DetectorId,
    trial: u64,
) -> Result<TrialRecord, HarnessError> {
    let (snr_db, omega, n) = cell.values(cfg)?;
    let seed = trial_seed(cfg.base_seed, cell, trial);
    let fail = |e: crate::Error| HarnessError::Internal(format!("{detector_id} failed on trial seed {seed}: {e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame = cdma::draw_frame(&mut rng, &cfg.cdma_config(n, snr_db)).map_err(fail)?;

    let (x_hat, nodes) = match detector_id {
        DetectorId::Brcsmud => {
            let params = DetectionParams::new(
                cfg.activity_prob,
                frame.noise_var.max(DETECTOR_NOISE_FLOOR),
                omega,
                cfg.alphabet.clone(),
            )
            .map_err(fail)?;
            let res = detector::detect(&frame.system, &params).map_err(fail)?;
            (res.x_hat, Some(res.nodes_visited))
        }
        DetectorId::Bpdn => {
            let bpdn = cfg.bpdn_config(frame.noise_var);
            let x = baseline::bpdn_detect(&frame.system, &bpdn, &cfg.alphabet).map_err(fail)?;
            (x, None)
        }
    };
    let outcome = TrialOutcome::score(&frame.x_true, &x_hat, nodes).map_err(fail)?;
    Ok(TrialRecord {
        seed,
        frame_digest: frame_digest(&frame),
        outcome,
        x_hat,
    })
}

/// Runs all trials of one cell (in parallel) and pools them.
pub fn run_point(
    cfg: &ExperimentConfig,
    cell: SweepCell,
    detector_id: DetectorId,
) -> Result<RatePoint, HarnessError> {
    let (snr_db, omega, _) = cell.values(cfg)?;
    let tally = (0..cfg.trials_per_point as u64)
        .into_par_iter()
        .map(|trial| run_trial(cfg, cell, detector_id, trial).map(|r| Tally::from(&r.outcome)))
        .try_reduce(Tally::default, |a, b| Ok(a.merge(&b)))?;
    RatePoint::from_tally(&tally, snr_db, omega).map_err(|e| HarnessError::Internal(e.to_string()))
}

/// `%.10g`-style formatting: 10 significant digits, trailing zeros trimmed.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..10).contains(&exp) {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (9 - exp) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// One sweep CSV row, without the trailing newline.
pub fn format_row(detector_id: DetectorId, n: usize, p: &RatePoint) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        detector_id,
        n,
        format_float(p.omega),
        format_float(p.snr_db),
        p.trials,
        format_float(p.gse),
        format_opt(p.tar),
        format_opt(p.far),
        p.counts.true_active,
        p.counts.false_active,
        p.counts.false_inactive,
        p.counts.true_inactive,
        format_opt(p.mean_nodes_visited),
    )
}

fn sorted_indices<T: Copy>(items: &[T], cmp: impl Fn(T, T) -> std::cmp::Ordering) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.sort_by(|&a, &b| cmp(items[a], items[b]));
    idx
}

/// Runs the whole grid, writing rows ordered by (detector, n, Ω, SNR) and
/// flushing after each one. Returns the number of data rows.
pub fn run_sweep_to<W: Write>(cfg: &ExperimentConfig, out: &mut W) -> Result<usize, HarnessError> {
    run_sweep_inner(cfg, out, &cfg.output_path)
}

fn run_sweep_inner<W: Write>(cfg: &ExperimentConfig, out: &mut W, path: &Path) -> Result<usize, HarnessError> {
    cfg.validate()?;
    let io_err = |e| HarnessError::io(path, e);
    writeln!(out, "{SWEEP_HEADER}").map_err(io_err)?;
    out.flush().map_err(io_err)?;

    let mut detectors = cfg.detectors.clone();
    detectors.sort_by_key(|d| d.name());
    let gains = sorted_indices(&cfg.spreading_gain_list, |a, b| a.cmp(&b));
    let omegas = sorted_indices(&cfg.omega_list, |a, b| a.total_cmp(&b));
    let snrs = sorted_indices(&cfg.snr_db_list, |a, b| a.total_cmp(&b));

    let mut rows = 0;
    for &det in &detectors {
        for &gain_index in &gains {
            for &omega_index in &omegas {
                for &snr_index in &snrs {
                    let cell = SweepCell {
                        snr_index,
                        omega_index,
                        gain_index,
                    };
                    let point = run_point(cfg, cell, det)?;
                    let n = cfg.spreading_gain_list[gain_index];
                    writeln!(out, "{}", format_row(det, n, &point)).map_err(io_err)?;
                    out.flush().map_err(io_err)?;
                    rows += 1;
                }
            }
        }
    }
    Ok(rows)
}

/// Runs the sweep into `cfg.output_path`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<usize, HarnessError> {
    let path = &cfg.output_path;
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(file);
    run_sweep_inner(cfg, &mut w, path)
}

/// Which sweep rows feed the ROC traces.
#[derive(Debug, Clone)]
pub struct RocFilter {
    pub detector: DetectorId,
    /// Required when the sweep holds more than one spreading gain.
    pub spreading_gain: Option<usize>,
}

impl Default for RocFilter {
    fn default() -> Self {
        RocFilter {
            detector: DetectorId::Brcsmud,
            spreading_gain: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocTable {
    pub csv: String,
    pub rows: usize,
    /// Rows skipped because TAR or FAR was undefined.
    pub dropped: usize,
}

/// Regroups sweep rows into per-Ω traces ordered by SNR.
pub fn roc_from_sweep(sweep_csv: &str, filter: &RocFilter) -> Result<RocTable, HarnessError> {
    let mut lines = sweep_csv.lines();
    let header = lines.next().unwrap_or_default();
    if header.trim_end() != SWEEP_HEADER {
        return Err(config_err("input is not a sweep CSV (header mismatch)"));
    }
    let cols: Vec<&str> = SWEEP_HEADER.split(',').collect();
    let col = |name: &str| cols.iter().position(|c| *c == name).expect("known column");
    let (c_det, c_n, c_omega, c_snr, c_far, c_tar) = (
        col("detector"),
        col("n"),
        col("omega"),
        col("snr_db"),
        col("far"),
        col("tar"),
    );

    struct Entry<'a> {
        omega: f64,
        snr: f64,
        fields: [&'a str; 4],
    }
    let mut entries = Vec::new();
    let mut gains = HashSet::new();
    let mut dropped = 0;
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(config_err(format!("row {}: expected {} fields", i + 2, cols.len())));
        }
        if f[c_det] != filter.detector.name() {
            continue;
        }
        let n: usize = parse_scalar("n", f[c_n])?;
        if filter.spreading_gain.is_some_and(|g| g != n) {
            continue;
        }
        gains.insert(n);
        if f[c_far].is_empty() || f[c_tar].is_empty() {
            dropped += 1;
            continue;
        }
        entries.push(Entry {
            omega: parse_scalar("omega", f[c_omega])?,
            snr: parse_scalar("snr_db", f[c_snr])?,
            fields: [f[c_omega], f[c_snr], f[c_far], f[c_tar]],
        });
    }
    if gains.len() > 1 {
        return Err(config_err(
            "sweep holds several spreading gains; select one for the ROC",
        ));
    }
    entries.sort_by(|a, b| a.omega.total_cmp(&b.omega).then(a.snr.total_cmp(&b.snr)));

    let mut csv = String::from(ROC_HEADER);
    csv.push('\n');
    for e in &entries {
        csv.push_str(&e.fields.join(","));
        csv.push('\n');
    }
    Ok(RocTable {
        csv,
        rows: entries.len(),
        dropped,
    })
}

/// Reads a sweep CSV and writes its ROC traces.
pub fn emit_roc(input: &Path, output: &Path, filter: &RocFilter) -> Result<RocTable, HarnessError> {
    let text = fs::read_to_string(input).map_err(|e| HarnessError::io(input, e))?;
    let table = roc_from_sweep(&text, filter)?;
    fs::write(output, &table.csv).map_err(|e| HarnessError::io(output, e))?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub instances: usize,
    pub objective_mismatches: usize,
    pub argmin_mismatches: usize,
    pub max_objective_gap: f64,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.objective_mismatches == 0 && self.argmin_mismatches == 0
    }
}

/// Compares the sphere detector with exhaustive search on random small
/// systems: K in 2..=6, M in K−2..=K+2, Ω in {0.01, 0.1, 1, 10, 100},
/// SNR in 0..=40 dB.
pub fn selftest(instances: usize, seed: u64) -> Result<SelftestReport, HarnessError> {
    const OMEGAS: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
    let alphabet = AugmentedAlphabet::bpsk();
    let mut report = SelftestReport {
        instances,
        objective_mismatches: 0,
        argmin_mismatches: 0,
        max_objective_gap: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let k = rng.random_range(2..=6usize);
        let m = rng.random_range(k.saturating_sub(2).max(1)..=k + 2);
        let omega = OMEGAS[rng.random_range(0..OMEGAS.len())];
        let snr_db = rng.random_range(0..=40) as f64;
        let noise_var = cdma::noise_var_for_snr(snr_db);
        let t = Matrix::from_fn(m, k, |_, _| rng.sample::<f64, _>(StandardNormal) / (m as f64).sqrt());
        let x: Vec<f64> = (0..k)
            .map(|_| if rng.random_bool(0.2) { alphabet.data_symbols()[rng.random_range(0..2)] } else { 0.0 })
            .collect();
        let y: Vec<f64> = t
            .mul_vec(&x)
            .into_iter()
            .map(|v| v + noise_var.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let internal = |e: crate::Error| HarnessError::Internal(e.to_string());
        let system = LinearSystem::new(t, y).map_err(internal)?;
        let params = DetectionParams::new(0.2, noise_var, omega, alphabet.clone()).map_err(internal)?;
        let fast = detector::detect(&system, &params).map_err(internal)?;
        let slow = detector::exhaustive_detect(&system, &params).map_err(internal)?;
        let gap = (fast.objective_value - slow.objective_value).abs();
        report.max_objective_gap = report.max_objective_gap.max(gap);
        if gap > 1e-9 {
            report.objective_mismatches += 1;
        }
        if fast.x_hat != slow.x_hat {
            report.argmin_mismatches += 1;
        }
    }
    Ok(report)
}
