//! Command implementations. Each resolves its config, runs, and renders
//! the output document.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use eia_core::{
    build_pairing, count_types, ff_states, gauss_states, is_delta_typical, lemma1_bound, simulate_protocol,
    sweep_figure, FiniteFieldNoiseModel, ModelKind, PairingMode, PrimeField, ProtocolConfig, QuantizedGaussianLaw,
    Quantizer, RateRegion, SeedSequence, StateKey, StateLaw, UniformFieldLaw, SWEEP_HEADER,
};

use crate::config::{RunConfig, CSV_CONFIG_PREFIX};
use crate::CliError;

/// Target probability that a Gaussian state is discarded, used when no
/// `tau` is given.
pub const DEFAULT_DISCARD: f64 = 0.01;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn runtime(msg: impl std::fmt::Display) -> CliError {
    CliError::Runtime(msg.to_string())
}

pub enum Output {
    Json(serde_json::Value),
    Csv(String),
}

fn document<T: Serialize>(command: &str, config: &RunConfig, body: T) -> serde_json::Value {
    let mut doc = json!({ "command": command, "config": config.to_json() });
    let body = serde_json::to_value(body).expect("output serializes");
    if let (Some(doc), serde_json::Value::Object(body)) = (doc.as_object_mut(), body) {
        doc.extend(body);
    }
    doc
}

fn csv_with_config(config: &RunConfig, body: Vec<u8>) -> String {
    let mut out = format!("{CSV_CONFIG_PREFIX}{}\n", config.to_json());
    out.push_str(&String::from_utf8(body).expect("csv is utf-8"));
    out
}

pub fn simulate_ff(cfg: RunConfig, trace: Option<&Path>) -> Result<Output, CliError> {
    let cfg = RunConfig {
        model: Some(ModelKind::Ff),
        q: Some(cfg.q.unwrap_or(5)),
        k: Some(cfg.k.unwrap_or(3)),
        rho: Some(cfg.rho.unwrap_or(0.0)),
        n: Some(cfg.n.unwrap_or(10_000)),
        seed: Some(cfg.seed.unwrap_or(0)),
        m: Some(cfg.m.unwrap_or(1)),
        block_len: Some(cfg.block_len.or(cfg.m).unwrap_or(1)),
        pairing: Some(cfg.pairing.unwrap_or_default()),
        threads: cfg.threads,
        ..Default::default()
    };
    let protocol = ProtocolConfig {
        q: cfg.q.unwrap(),
        k: cfg.k.unwrap(),
        rho: cfg.rho.unwrap(),
        n: cfg.n.unwrap(),
        seed: cfg.seed.unwrap(),
        message_len: cfg.m.unwrap(),
        block_len: cfg.block_len.unwrap(),
        pairing: cfg.pairing.unwrap(),
    };
    let run = simulate_protocol(&protocol)?;
    if let Some(path) = trace {
        let file = File::create(path).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
        run.write_trace_csv(BufWriter::new(file)).map_err(runtime)?;
    }
    Ok(Output::Json(document(
        "simulate-ff",
        &cfg,
        json!({ "report": run.report }),
    )))
}

pub fn region(cfg: RunConfig) -> Result<Output, CliError> {
    let rates = cfg
        .rates
        .clone()
        .ok_or_else(|| invalid("region needs --rates, e.g. --rates '[1.2, 1.2, 1.2]'"))?;
    let k = cfg.k.unwrap_or(rates.len());
    let cfg = RunConfig {
        model: Some(ModelKind::Ff),
        q: Some(cfg.q.unwrap_or(5)),
        k: Some(k),
        rho: Some(cfg.rho.unwrap_or(0.0)),
        rates: Some(rates.clone()),
        threads: cfg.threads,
        ..Default::default()
    };
    let field = PrimeField::odd(cfg.q.unwrap())?;
    let noise = FiniteFieldNoiseModel::new(field, cfg.rho.unwrap())?;
    let region = RateRegion::from_noise(&noise, k)?;
    let member = region.contains(&rates)?;
    let one_based =
        |pairs: Vec<(usize, usize)>| -> Vec<[usize; 2]> { pairs.into_iter().map(|(a, b)| [a + 1, b + 1]).collect() };
    let violated = one_based(region.violated_pairs(&rates)?);
    let tight = one_based(region.tight_pairs(&rates)?);
    let binding = if member { tight.clone() } else { violated.clone() };
    let r1 = rates.iter().copied().fold(0.0, f64::max);
    let body = json!({
        "cap": region.cap(),
        "verdict": if member { "member" } else { "non-member" },
        "member": member,
        "binding_pairs": binding,
        "violated_pairs": violated,
        "tight_pairs": tight,
        "beta": region.beta(r1),
        "timeshare_alpha": region.timeshare_split(r1).ok(),
    });
    Ok(Output::Json(document("region", &cfg, body)))
}

pub fn default_grid() -> Vec<f64> {
    (-10..=30).map(f64::from).collect()
}

pub fn sweep(cfg: RunConfig, json_out: bool) -> Result<Output, CliError> {
    let cfg = RunConfig {
        snr_db: Some(cfg.snr_db.clone().unwrap_or_else(default_grid)),
        samples: Some(cfg.samples.unwrap_or(100_000)),
        seed: Some(cfg.seed.unwrap_or(0)),
        threads: cfg.threads,
        ..Default::default()
    };
    let grid = cfg.snr_db.as_deref().unwrap();
    if grid.is_empty() {
        return Err(invalid("the SNR grid is empty"));
    }
    let rows = sweep_figure(grid, cfg.samples.unwrap(), cfg.seed.unwrap())?;
    if json_out {
        return Ok(Output::Json(document("sweep", &cfg, json!({ "rows": rows }))));
    }
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    writer.write_record(SWEEP_HEADER.split(',')).map_err(runtime)?;
    for r in &rows {
        writer
            .write_record(
                [
                    r.snr_db,
                    r.achievable,
                    r.bound_half,
                    r.gap,
                    r.stderr_ach,
                    r.stderr_bound,
                ]
                .map(|v| v.to_string()),
            )
            .map_err(runtime)?;
    }
    let body = writer.into_inner().map_err(runtime)?;
    Ok(Output::Csv(csv_with_config(&cfg, body)))
}

#[derive(Serialize)]
struct Typicality {
    delta: f64,
    trials: u64,
    typical: u64,
    typical_fraction: f64,
    alphabet_size: f64,
    lemma1_bound: f64,
}

pub fn pairing_stats(cfg: RunConfig, plan_path: Option<&Path>) -> Result<Output, CliError> {
    let model = cfg.model.unwrap_or(ModelKind::Ff);
    let k = cfg.k.unwrap_or(2);
    let mut resolved = RunConfig {
        model: Some(model),
        k: Some(k),
        n: Some(cfg.n.unwrap_or(10_000)),
        seed: Some(cfg.seed.unwrap_or(0)),
        delta: Some(cfg.delta.unwrap_or(0.05)),
        trials: Some(cfg.trials.unwrap_or(100)),
        pairing: Some(cfg.pairing.unwrap_or_default()),
        threads: cfg.threads,
        ..Default::default()
    };
    let quantizer = match model {
        ModelKind::Ff => {
            resolved.q = Some(cfg.q.unwrap_or(3));
            None
        }
        ModelKind::Gauss => {
            let gamma = cfg.gamma.unwrap_or(0.5);
            let q = match cfg.tau {
                Some(tau) => Quantizer::new(gamma, tau)?,
                None => Quantizer::with_discard_target(gamma, k, DEFAULT_DISCARD)?,
            };
            resolved.gamma = Some(q.gamma());
            resolved.tau = Some(q.tau());
            Some(q)
        }
    };
    let (n, seed, delta, trials) = (
        resolved.n.unwrap(),
        resolved.seed.unwrap(),
        resolved.delta.unwrap(),
        resolved.trials.unwrap(),
    );
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    if !(delta > 0.0) {
        return Err(invalid(format!("delta must be positive (got {delta})")));
    }

    let sample = |seeds: SeedSequence| match model {
        ModelKind::Ff => ff_states(seeds, PrimeField::odd(resolved.q.unwrap())?, k, n),
        ModelKind::Gauss => gauss_states(seeds, k, n),
    };
    let states = sample(SeedSequence::new(seed))?;
    let plan = build_pairing(
        &states,
        quantizer.as_ref(),
        resolved.pairing.unwrap_or(PairingMode::Causal),
    )?;
    if let Some(path) = plan_path {
        let file = File::create(path).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
        plan.write_csv(BufWriter::new(file)).map_err(runtime)?;
    }

    let law: Box<dyn StateLaw> = match &quantizer {
        None => Box::new(UniformFieldLaw::new(PrimeField::odd(resolved.q.unwrap())?, k)?),
        Some(q) => Box::new(QuantizedGaussianLaw::new(*q, k)?),
    };
    let mut typical = 0;
    for i in 0..trials {
        let trial = sample(SeedSequence::new(seed).child(i))?;
        let keys: Vec<StateKey> = match &quantizer {
            None => trial
                .iter()
                .map(|s| StateKey::Field(s.field().unwrap().clone()))
                .collect(),
            Some(q) => trial
                .iter()
                .map(|s| StateKey::Grid(q.quantize_matrix(s.gaussian().unwrap())))
                .filter(|key| law.probability(key).map(|p| p > 0.0).unwrap_or(false))
                .collect(),
        };
        if keys.is_empty() {
            continue;
        }
        if is_delta_typical(&count_types(&keys)?, law.as_ref(), delta)? {
            typical += 1;
        }
    }
    let alphabet_size = law.alphabet_size();
    let body = json!({
        "pairing": plan.summary(),
        "typicality": Typicality {
            delta,
            trials,
            typical,
            typical_fraction: if trials > 0 { typical as f64 / trials as f64 } else { 0.0 },
            alphabet_size,
            lemma1_bound: lemma1_bound(n as u64, delta, alphabet_size),
        },
    });
    Ok(Output::Json(document("pairing-stats", &resolved, body)))
}
