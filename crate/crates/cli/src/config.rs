//! Flat key-value experiment configuration: one dotted key per line,
//! `key = value`, `#` comments. Unknown keys are errors so typos surface
//! immediately, and a normalized echo of the parsed config re-parses to an
//! equal value.

use tandem_core::experiments::{ExperimentConfig, ExperimentKind};
use tandem_core::types::RankMode;
use tandem_core::TieBreak;

use crate::csvio::fmt_f64;

/// All recognized keys, in canonical echo order.
const KEYS: &[&str] = &[
    "kind",
    "seed",
    "n_train",
    "n_test",
    "replicates",
    "sweep.z",
    "sweep.alpha",
    "sweep.a",
    "sweep.b",
    "sweep.theta",
    "dgp.d",
    "dgp.noise_sd",
    "dgp.beta",
    "fit.include_intercept",
    "fit.max_outer_iters",
    "fit.convergence_tol",
    "fit.ridge_epsilon",
    "fit.rank_mode",
    "combiner.tie_break",
    "combiner.max_iters",
    "combiner.tol",
    "combiner.restarts",
    "combiner.grid_resolution",
    "combiner.step_size",
];

pub fn parse_config(text: &str) -> Result<ExperimentConfig, String> {
    let mut pairs: Vec<(String, String, usize)> = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "line {}: expected `key = value`, got `{line}`",
                line_no + 1
            ));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(format!("line {}: unknown key `{key}`", line_no + 1));
        }
        if pairs.iter().any(|(k, _, _)| *k == key) {
            return Err(format!("line {}: duplicate key `{key}`", line_no + 1));
        }
        pairs.push((key, value, line_no + 1));
    }

    let get = |key: &str| {
        pairs
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, l)| (v.as_str(), *l))
    };

    let Some((kind_str, _)) = get("kind") else {
        return Err("missing required key `kind` (overlap | alpha | objective)".into());
    };
    let kind = parse_kind(kind_str)?;
    let Some((seed_str, seed_line)) = get("seed") else {
        return Err("missing required key `seed`".into());
    };
    let seed: u64 = seed_str.parse().map_err(|_| {
        format!("line {seed_line}: seed `{seed_str}` is not a 64-bit unsigned integer")
    })?;

    let mut cfg = match kind {
        ExperimentKind::Overlap => ExperimentConfig::overlap(seed),
        ExperimentKind::Alpha => ExperimentConfig::alpha(seed),
        ExperimentKind::Objective => ExperimentConfig::objective(seed),
    };

    for (key, value, line) in &pairs {
        let err = |msg: String| format!("line {line}: {key}: {msg}");
        match key.as_str() {
            "kind" | "seed" => {}
            "n_train" => cfg.n_train = parse_num(value).map_err(err)?,
            "n_test" => cfg.n_test = parse_num(value).map_err(err)?,
            "replicates" => cfg.replicates = parse_num(value).map_err(err)?,
            "sweep.z" => {
                require_kind(kind, ExperimentKind::Overlap, key).map_err(err)?;
                cfg.z_values = parse_list(value).map_err(err)?;
            }
            "sweep.alpha" => {
                require_kind(kind, ExperimentKind::Alpha, key).map_err(err)?;
                cfg.alpha_values = parse_list(value).map_err(err)?;
            }
            "sweep.a" => {
                require_kind(kind, ExperimentKind::Objective, key).map_err(err)?;
                cfg.a = parse_num(value).map_err(err)?;
            }
            "sweep.b" => {
                require_kind(kind, ExperimentKind::Objective, key).map_err(err)?;
                cfg.b_values = parse_list(value).map_err(err)?;
            }
            "sweep.theta" => {
                require_kind(kind, ExperimentKind::Objective, key).map_err(err)?;
                cfg.theta_values = parse_list(value).map_err(err)?;
            }
            "dgp.d" => cfg.dgp.d = parse_num(value).map_err(err)?,
            "dgp.noise_sd" => cfg.dgp.noise_sd = parse_num(value).map_err(err)?,
            "dgp.beta" => cfg.dgp.beta = parse_list(value).map_err(err)?,
            "fit.include_intercept" => {
                cfg.fit.include_intercept = parse_bool(value).map_err(err)?
            }
            "fit.max_outer_iters" => cfg.fit.max_outer_iters = parse_num(value).map_err(err)?,
            "fit.convergence_tol" => cfg.fit.convergence_tol = parse_num(value).map_err(err)?,
            "fit.ridge_epsilon" => cfg.fit.ridge_epsilon = parse_num(value).map_err(err)?,
            "fit.rank_mode" => cfg.fit.rank_mode = parse_rank_mode(value).map_err(err)?,
            "combiner.tie_break" => cfg.combiner.tie_break = parse_tie_break(value).map_err(err)?,
            "combiner.max_iters" => cfg.combiner.max_iters = parse_num(value).map_err(err)?,
            "combiner.tol" => cfg.combiner.tol = parse_num(value).map_err(err)?,
            "combiner.restarts" => cfg.combiner.restarts = parse_num(value).map_err(err)?,
            "combiner.grid_resolution" => {
                cfg.combiner.grid_resolution = parse_num(value).map_err(err)?
            }
            "combiner.step_size" => cfg.combiner.step_size = parse_num(value).map_err(err)?,
            _ => unreachable!("key list is closed"),
        }
    }

    // if d changed and beta was not given, keep beta matched to d
    if get("dgp.beta").is_none() && cfg.dgp.beta.len() != cfg.dgp.d {
        cfg.dgp.beta = vec![1.0; cfg.dgp.d];
    }

    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// Canonical echo of a config; `parse_config(normalize(cfg))` reproduces
/// `cfg` exactly.
pub fn normalize(cfg: &ExperimentConfig) -> String {
    let mut lines = Vec::new();
    let mut push = |key: &str, value: String| lines.push(format!("{key} = {value}"));
    push("kind", cfg.kind.label().to_string());
    push("seed", cfg.seed.to_string());
    push("n_train", cfg.n_train.to_string());
    push("n_test", cfg.n_test.to_string());
    push("replicates", cfg.replicates.to_string());
    match cfg.kind {
        ExperimentKind::Overlap => push("sweep.z", join(&cfg.z_values, |z| z.to_string())),
        ExperimentKind::Alpha => push("sweep.alpha", join(&cfg.alpha_values, |a| fmt_f64(*a))),
        ExperimentKind::Objective => {
            push("sweep.a", fmt_f64(cfg.a));
            push("sweep.b", join(&cfg.b_values, |b| fmt_f64(*b)));
            push("sweep.theta", join(&cfg.theta_values, |t| fmt_f64(*t)));
        }
    }
    push("dgp.d", cfg.dgp.d.to_string());
    push("dgp.noise_sd", fmt_f64(cfg.dgp.noise_sd));
    push("dgp.beta", join(&cfg.dgp.beta, |b| fmt_f64(*b)));
    push(
        "fit.include_intercept",
        cfg.fit.include_intercept.to_string(),
    );
    push("fit.max_outer_iters", cfg.fit.max_outer_iters.to_string());
    push("fit.convergence_tol", fmt_f64(cfg.fit.convergence_tol));
    push("fit.ridge_epsilon", fmt_f64(cfg.fit.ridge_epsilon));
    push(
        "fit.rank_mode",
        match cfg.fit.rank_mode {
            RankMode::Sorted => "sorted".to_string(),
            RankMode::FixedIndex => "fixed_index".to_string(),
        },
    );
    push(
        "combiner.tie_break",
        match cfg.combiner.tie_break {
            TieBreak::Machine => "machine".to_string(),
            TieBreak::Human => "human".to_string(),
            TieBreak::Half => "half".to_string(),
        },
    );
    push("combiner.max_iters", cfg.combiner.max_iters.to_string());
    push("combiner.tol", fmt_f64(cfg.combiner.tol));
    push("combiner.restarts", cfg.combiner.restarts.to_string());
    push(
        "combiner.grid_resolution",
        fmt_f64(cfg.combiner.grid_resolution),
    );
    push("combiner.step_size", fmt_f64(cfg.combiner.step_size));
    lines.join("\n") + "\n"
}

fn parse_kind(value: &str) -> Result<ExperimentKind, String> {
    match value {
        "overlap" => Ok(ExperimentKind::Overlap),
        "alpha" => Ok(ExperimentKind::Alpha),
        "objective" => Ok(ExperimentKind::Objective),
        other => Err(format!(
            "kind `{other}` is not one of overlap | alpha | objective"
        )),
    }
}

pub fn parse_rank_mode(value: &str) -> Result<RankMode, String> {
    match value {
        "sorted" => Ok(RankMode::Sorted),
        "fixed_index" | "fixed-index" => Ok(RankMode::FixedIndex),
        other => Err(format!("rank mode `{other}` is not sorted | fixed_index")),
    }
}

pub fn parse_tie_break(value: &str) -> Result<TieBreak, String> {
    match value {
        "machine" => Ok(TieBreak::Machine),
        "human" => Ok(TieBreak::Human),
        "half" => Ok(TieBreak::Half),
        other => Err(format!("tie break `{other}` is not machine | human | half")),
    }
}

fn require_kind(actual: ExperimentKind, needed: ExperimentKind, key: &str) -> Result<(), String> {
    if actual == needed {
        Ok(())
    } else {
        Err(format!("`{key}` only applies to kind = {}", needed.label()))
    }
}

fn parse_num<T: std::str::FromStr>(value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{value}` is not a valid number"))
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("`{other}` is not true | false")),
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(|item| {
            let item = item.trim();
            item.parse()
                .map_err(|_| format!("`{item}` is not a valid list entry"))
        })
        .collect()
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = parse_config("kind = overlap\nseed = 42\n").unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.n_train, 8000);
        assert_eq!(cfg.replicates, 200);
        assert_eq!(cfg.z_values, vec![0, 2, 4, 6, 8]);
    }

    #[test]
    fn unknown_and_duplicate_keys_are_named() {
        let err = parse_config("kind = overlap\nseed = 1\ndgp.noise = 2\n").unwrap_err();
        assert!(err.contains("dgp.noise"), "{err}");
        let err = parse_config("kind = overlap\nseed = 1\nseed = 2\n").unwrap_err();
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn kind_mismatched_sweep_key_rejected() {
        let err = parse_config("kind = overlap\nseed = 1\nsweep.alpha = 0.5\n").unwrap_err();
        assert!(err.contains("only applies"), "{err}");
    }

    #[test]
    fn odd_remainder_z_is_rejected_with_the_rule() {
        let err = parse_config("kind = overlap\nseed = 1\nsweep.z = 9\n").unwrap_err();
        assert!(err.contains("odd"), "{err}");
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# experiment\n\nkind = alpha\nseed = 7\n# done\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Alpha);
    }

    #[test]
    fn custom_d_defaults_beta_to_ones() {
        let cfg = parse_config("kind = overlap\nseed = 1\ndgp.d = 6\nsweep.z = 0,2\n").unwrap();
        assert_eq!(cfg.dgp.beta, vec![1.0; 6]);
    }

    #[test]
    fn normalize_round_trips_for_every_kind() {
        for text in [
            "kind = overlap\nseed = 3\nreplicates = 17\n",
            "kind = alpha\nseed = 4\nsweep.alpha = 0,0.5,1\n",
            "kind = objective\nseed = 5\nsweep.b = 0.5,1\nsweep.theta = 0,1\nfit.rank_mode = fixed_index\n",
        ] {
            let cfg = parse_config(text).unwrap();
            let echoed = normalize(&cfg);
            let reparsed = parse_config(&echoed).unwrap();
            assert_eq!(cfg, reparsed, "echo drifted for:\n{echoed}");
        }
    }
}
