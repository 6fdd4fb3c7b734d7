//! INI-style case files.
//!
//! ```text
//! # comment
//! [grid]
//! nx = 128
//! physics.ug = 10     # dotted keys work outside a section too
//! ```
//!
//! Every key is optional; unknown keys, malformed lines and values that
//! break an invariant are errors carrying the line number.

use std::collections::HashMap;
use std::fmt::Write;
use std::path::Path;

use crate::case::CaseConfig;
use crate::error::{Error, Result};
use crate::sgs::{GammaMode, SgsModel};

const SECTIONS: [&str; 6] = ["grid", "physics", "sgs", "wall", "solver", "run"];

fn num<T: std::str::FromStr>(key: &str, v: &str, what: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("{key} must be {what}, got '{v}'"))
}

fn float(key: &str, v: &str) -> std::result::Result<f64, String> {
    let x: f64 = num(key, v, "a number")?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{key} must be finite, got '{v}'"))
    }
}

fn count(key: &str, v: &str) -> std::result::Result<usize, String> {
    num(key, v, "a non-negative integer")
}

fn flag(key: &str, v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("{key} must be true or false, got '{v}'")),
    }
}

/// Applies one `section.key = value` assignment.
fn assign(cfg: &mut CaseConfig, key: &str, v: &str) -> std::result::Result<(), String> {
    match key {
        "grid.nx" => cfg.nx = count(key, v)?,
        "grid.ny" => cfg.ny = count(key, v)?,
        "grid.nz" => cfg.nz = count(key, v)?,
        "grid.mx" => cfg.mx = count(key, v)?,
        "grid.my" => cfg.my = count(key, v)?,
        "physics.ug" => cfg.ug = float(key, v)?,
        "physics.vg" => cfg.vg = float(key, v)?,
        "physics.theta0" => cfg.theta0 = float(key, v)?,
        "physics.surface_theta" => cfg.surface_theta = float(key, v)?,
        "physics.cooling_rate" => cfg.cooling_rate = float(key, v)?,
        "physics.inversion_height" => cfg.inversion_height = float(key, v)?,
        "physics.lapse_rate" => cfg.lapse_rate = float(key, v)?,
        "physics.perturbation_amplitude" => cfg.perturbation_amplitude = float(key, v)?,
        "physics.perturbation_height" => cfg.perturbation_height = float(key, v)?,
        "physics.reynolds" => cfg.reynolds = float(key, v)?,
        "physics.length_scale" => cfg.length_scale = float(key, v)?,
        "physics.prandtl" => cfg.prandtl = float(key, v)?,
        "physics.fc" => cfg.fc = float(key, v)?,
        "physics.buoyancy" => cfg.buoyancy = flag(key, v)?,
        "physics.coriolis" => cfg.coriolis = flag(key, v)?,
        "sgs.enabled" => cfg.sgs.enabled = flag(key, v)?,
        "sgs.model" => {
            cfg.sgs.model = SgsModel::parse(v)
                .ok_or_else(|| format!("{key} must be smagorinsky or mfev_smagorinsky, got '{v}'"))?
        }
        "sgs.cs" => cfg.sgs.cs = float(key, v)?,
        "sgs.pr_t" => cfg.sgs.pr_t = float(key, v)?,
        "sgs.gamma_mode" => {
            cfg.sgs.gamma_mode =
                GammaMode::parse(v).ok_or_else(|| format!("{key} must be unity or sullivan, got '{v}'"))?
        }
        "sgs.h_blend" => cfg.sgs.h_blend = float(key, v)?,
        "wall.enabled" => cfg.wall_model = flag(key, v)?,
        "wall.kappa" => cfg.most.kappa = float(key, v)?,
        "wall.z0" => cfg.most.z0 = float(key, v)?,
        "wall.beta_m" => cfg.most.beta_m = float(key, v)?,
        "wall.beta_h" => cfg.most.beta_h = float(key, v)?,
        "wall.gravity" => cfg.most.gravity = float(key, v)?,
        "solver.pressure_tol" => cfg.pressure_tol = float(key, v)?,
        "solver.helmholtz_tol" => cfg.helmholtz_tol = float(key, v)?,
        "solver.cfl_max" => cfg.cfl_max = float(key, v)?,
        "solver.init_iterations" => cfg.init_iterations = count(key, v)?,
        "solver.mg_pre_sweeps" => cfg.mg.pre_sweeps = count(key, v)?,
        "solver.mg_post_sweeps" => cfg.mg.post_sweeps = count(key, v)?,
        "solver.mg_max_vcycles" => cfg.mg.max_vcycles = count(key, v)?,
        "solver.mg_coarse_tol" => cfg.mg.coarse_tol = float(key, v)?,
        "run.dt" => cfg.dt = if v == "auto" { None } else { Some(float(key, v)?) },
        "run.steps" => cfg.steps = count(key, v)?,
        "run.seed" => cfg.seed = num(key, v, "a non-negative integer")?,
        "run.output_interval" => cfg.output_interval = count(key, v)?,
        _ => return Err(format!("unknown key '{key}'")),
    }
    Ok(())
}

/// Parses case-file text. Values not given keep their defaults.
pub fn parse_config_str(text: &str) -> Result<CaseConfig> {
    let mut cfg = CaseConfig::default();
    let mut section: Option<&str> = None;
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |msg: String| Error::ConfigLine { line: line_no, msg };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(format!("malformed section header '{line}'")))?
                .trim();
            section = Some(
                SECTIONS
                    .into_iter()
                    .find(|s| *s == name)
                    .ok_or_else(|| err(format!("unknown section [{name}]")))?,
            );
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(err(format!("expected 'key = value', got '{line}'")));
        }
        let key = match (k.contains('.'), section) {
            (true, _) => k.to_string(),
            (false, Some(s)) => format!("{s}.{k}"),
            (false, None) => return Err(err(format!("key '{k}' outside a section"))),
        };
        if let Some(first) = seen.insert(key.clone(), line_no) {
            return Err(err(format!("{key} already set on line {first}")));
        }
        assign(&mut cfg, &key, v).map_err(err)?;
    }
    if let Err(Error::Config(msg)) = cfg.validate() {
        // point at the offending line when the message names a key that was set
        let line = seen
            .iter()
            .filter(|(k, _)| msg.contains(k.as_str()))
            .map(|(_, l)| *l)
            .min();
        return Err(match line {
            Some(line) => Error::ConfigLine { line, msg },
            None => Error::Config(msg),
        });
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a case file.
pub fn parse_config(path: &Path) -> Result<CaseConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Every key with its current value, in section order. Numbers use the
/// shortest representation that reads back to the same bits.
pub fn config_entries(cfg: &CaseConfig) -> Vec<(String, String)> {
    let f = |x: f64| format!("{x:?}");
    let out: Vec<(&str, String)> = vec![
        ("grid.nx", cfg.nx.to_string()),
        ("grid.ny", cfg.ny.to_string()),
        ("grid.nz", cfg.nz.to_string()),
        ("grid.mx", cfg.mx.to_string()),
        ("grid.my", cfg.my.to_string()),
        ("physics.ug", f(cfg.ug)),
        ("physics.vg", f(cfg.vg)),
        ("physics.theta0", f(cfg.theta0)),
        ("physics.surface_theta", f(cfg.surface_theta)),
        ("physics.cooling_rate", f(cfg.cooling_rate)),
        ("physics.inversion_height", f(cfg.inversion_height)),
        ("physics.lapse_rate", f(cfg.lapse_rate)),
        ("physics.perturbation_amplitude", f(cfg.perturbation_amplitude)),
        ("physics.perturbation_height", f(cfg.perturbation_height)),
        ("physics.reynolds", f(cfg.reynolds)),
        ("physics.length_scale", f(cfg.length_scale)),
        ("physics.prandtl", f(cfg.prandtl)),
        ("physics.fc", f(cfg.fc)),
        ("physics.buoyancy", cfg.buoyancy.to_string()),
        ("physics.coriolis", cfg.coriolis.to_string()),
        ("sgs.enabled", cfg.sgs.enabled.to_string()),
        ("sgs.model", cfg.sgs.model.name().to_string()),
        ("sgs.cs", f(cfg.sgs.cs)),
        ("sgs.pr_t", f(cfg.sgs.pr_t)),
        ("sgs.gamma_mode", cfg.sgs.gamma_mode.name().to_string()),
        ("sgs.h_blend", f(cfg.sgs.h_blend)),
        ("wall.enabled", cfg.wall_model.to_string()),
        ("wall.kappa", f(cfg.most.kappa)),
        ("wall.z0", f(cfg.most.z0)),
        ("wall.beta_m", f(cfg.most.beta_m)),
        ("wall.beta_h", f(cfg.most.beta_h)),
        ("wall.gravity", f(cfg.most.gravity)),
        ("solver.pressure_tol", f(cfg.pressure_tol)),
        ("solver.helmholtz_tol", f(cfg.helmholtz_tol)),
        ("solver.cfl_max", f(cfg.cfl_max)),
        ("solver.init_iterations", cfg.init_iterations.to_string()),
        ("solver.mg_pre_sweeps", cfg.mg.pre_sweeps.to_string()),
        ("solver.mg_post_sweeps", cfg.mg.post_sweeps.to_string()),
        ("solver.mg_max_vcycles", cfg.mg.max_vcycles.to_string()),
        ("solver.mg_coarse_tol", f(cfg.mg.coarse_tol)),
        ("run.dt", cfg.dt.map_or_else(|| "auto".to_string(), f)),
        ("run.steps", cfg.steps.to_string()),
        ("run.seed", cfg.seed.to_string()),
        ("run.output_interval", cfg.output_interval.to_string()),
    ];
    out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Case file with every key written out under its section.
pub fn serialize_config(cfg: &CaseConfig) -> String {
    let mut s = String::new();
    let mut current = "";
    for (key, v) in config_entries(cfg) {
        let (sec, k) = key.split_once('.').expect("entries are section.key");
        if sec != current {
            if !current.is_empty() {
                s.push('\n');
            }
            let _ = writeln!(s, "[{sec}]");
            current = SECTIONS.into_iter().find(|x| *x == sec).expect("known section");
        }
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}
