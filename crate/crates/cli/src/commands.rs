use serde::Serialize;
use spectral_da_core::{
    classify_problem, construct_bad_data, ess_sweep, log_norm_constant, mc_log_constant, posterior,
    truncated_log_constant, ExtReal, PosteriorResult, PosteriorSpec, SeriesConfig,
};

use crate::error::CliError;
use crate::format::{csv_row, num};
use crate::problem::ProblemFile;

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_DELTA: f64 = 1.0;
pub const DEFAULT_MC_TRUNCATION: u64 = 10;
pub const DEFAULT_DIMS: [u64; 2] = [10, 100];

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn classify(file: &ProblemFile, cfg: &SeriesConfig) -> Result<String, CliError> {
    json(&classify_problem(&file.prior_spectrum, &file.noise_spectrum, &file.prior_mean, cfg)?)
}

#[derive(Serialize)]
struct ConstantOut {
    log_c: ExtReal,
    bracket_width: f64,
    certificates: Vec<String>,
}

#[derive(Serialize)]
struct TruncatedOut {
    truncate: u64,
    log_c: f64,
}

pub fn constant(file: &ProblemFile, truncate: Option<u64>, cfg: &SeriesConfig) -> Result<String, CliError> {
    let prob = file.problem();
    match truncate.or(file.truncate) {
        Some(n) => json(&TruncatedOut { truncate: n, log_c: truncated_log_constant(&prob, n)? }),
        None => {
            let c = log_norm_constant(&prob, cfg)?;
            json(&ConstantOut { log_c: c.value, bracket_width: c.bracket_width, certificates: c.certificates })
        }
    }
}

pub const ILL_POSED_LINE: &str = "ILL-POSED (fallback: prior)";

pub fn assimilate(file: &ProblemFile, modes: Option<Vec<u64>>, cfg: &SeriesConfig) -> Result<String, CliError> {
    let prob = file.problem();
    let result = posterior(&prob, cfg)?;
    let spec = result.analysis();
    let modes = modes.or_else(|| file.modes.clone()).unwrap_or_else(|| PosteriorSpec::updated(&prob).support());
    if let Some(&bad) = modes.iter().find(|&&i| i == 0) {
        return Err(CliError::Input(format!("mode {bad} is out of range; modes are numbered from 1")));
    }
    let mut out = String::new();
    if let PosteriorResult::IllPosed { certificate, .. } = &result {
        out.push_str(ILL_POSED_LINE);
        out.push('\n');
        for line in certificate.split("; ") {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out.push_str(&csv_row(&["mode".into(), "mean".into(), "variance".into(), "gain".into()]));
    for i in modes {
        out.push_str(&csv_row(&[i.to_string(), num(spec.mean(i)), num(spec.variance(i)), num(spec.gain(i))]));
    }
    Ok(out)
}

pub fn adversarial(file: &ProblemFile, delta: Option<f64>, cfg: &SeriesConfig) -> Result<String, CliError> {
    let delta = delta.or(file.delta).unwrap_or(DEFAULT_DELTA);
    let bad = construct_bad_data(&file.noise_spectrum, &file.prior_spectrum, &file.data, delta, cfg)?;
    let mut s = serde_json::to_string(&bad).map_err(|e| CliError::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct McOut {
    truncate: u64,
    samples: usize,
    seed: u64,
    estimate: f64,
    stderr: f64,
    ess: f64,
    truncated_log_constant: f64,
}

pub struct RunParams {
    pub truncate: Option<u64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub dims: Option<Vec<u64>>,
}

pub fn mc(file: &ProblemFile, p: RunParams) -> Result<String, CliError> {
    let prob = file.problem();
    let n_modes = p.truncate.or(file.truncate).unwrap_or(DEFAULT_MC_TRUNCATION);
    let samples = p.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES);
    let seed = p.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let e = mc_log_constant(&prob, n_modes, samples, seed)?;
    json(&McOut {
        truncate: n_modes,
        samples,
        seed,
        estimate: e.estimate,
        stderr: e.stderr,
        ess: e.ess,
        truncated_log_constant: truncated_log_constant(&prob, n_modes)?,
    })
}

pub fn sweep(file: &ProblemFile, p: RunParams) -> Result<String, CliError> {
    let dims = p.dims.or_else(|| file.dims.clone()).unwrap_or_else(|| DEFAULT_DIMS.to_vec());
    let samples = p.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES);
    let seed = p.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let curve = ess_sweep(&file.problem(), &dims, samples, seed)?;
    let mut out = csv_row(&["N".into(), "ess".into(), "mean_log_weight".into(), "stderr".into(), "seed".into()]);
    for pt in &curve.points {
        out.push_str(&csv_row(&[
            pt.dim.to_string(),
            num(pt.ess),
            num(pt.mean_log_weight),
            num(pt.stderr),
            seed.to_string(),
        ]));
    }
    Ok(out)
}
