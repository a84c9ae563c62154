//! The five subcommands. Each reads a [`RunConfig`], writes its artifacts
//! into the output directory and prints a short summary on stdout.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};
use sr_mcmc::chains::{exchange_bound, resolve_init, run_chains, theorem_bound, ChainKind, ChainSpec, DeleteFactor};
use sr_mcmc::diagnostics::{compare_chains, ComparisonSetup, DEFAULT_CHAINS};
use sr_mcmc::exact::{
    check_log_submodular, detailed_balance_check, enumerate_distribution, exact_marginals, lumped_exchange_matrix,
    stationarity_check, transition_matrix, tv_mixing_times, LUMPING_TOL, MAX_ENUMERATION, MAX_LUMPING,
    MAX_SUBMODULARITY, STATIONARITY_TOL,
};
use sr_mcmc::measures::{ln_binomial, Measure};
use sr_mcmc::rng::stream;
use sr_mcmc::{Error, SubsetState};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::transcript::write_records;

/// Largest ground set for which `exact` lists the full distribution.
pub const MAX_LISTED_DISTRIBUTION: usize = 12;
/// Largest ground set accepted by `check`.
pub const MAX_CHECK: usize = 8;

fn create_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut w = create_file(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(std::io::Error::from)
        .and_then(|_| w.write_all(b"\n"))
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

/// JSON has no infinities; they are written as `null`.
fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn members(n: usize, mask: u64) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

fn chain_specs(cfg: &RunConfig, kind: ChainKind, chains: usize, seed: u64, factor: DeleteFactor) -> Vec<ChainSpec> {
    (0..chains as u64)
        .map(|c| ChainSpec {
            burn_in: cfg.chain.burn_in,
            thin: cfg.chain.thin,
            init: cfg.init.clone(),
            delete_factor: factor,
            ..ChainSpec::new(kind, cfg.chain.steps, seed).with_stream(c)
        })
        .collect()
}

pub fn sample(cfg: &RunConfig, out: &Path, seed: u64) -> Result<()> {
    let built = cfg.build_measure()?;
    let chains = cfg.chain.chains.unwrap_or(1);
    let specs = chain_specs(cfg, cfg.chain.kind, chains, seed, DeleteFactor::default());
    let transcripts = run_chains(&*built.measure, &specs)?;
    create_dir(out)?;
    for (i, t) in transcripts.iter().enumerate() {
        let path = out.join(format!("chain-{i}.jsonl"));
        let mut w = create_file(&path)?;
        write_records(&mut w, &t.records).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))?;
        println!("{}: {} records", path.display(), t.records.len());
    }
    Ok(())
}

pub fn exact(cfg: &RunConfig, out: &Path) -> Result<()> {
    let built = cfg.build_measure()?;
    let m = &*built.measure;
    let n = m.ground_size();
    if n > MAX_ENUMERATION {
        return Err(Error::Size(format!(
            "exact enumeration supports N <= {MAX_ENUMERATION}, got N = {n}; use `sample` or `compare` for larger ground sets"
        ))
        .into());
    }
    let dist = enumerate_distribution(m)?;
    let marginals = exact_marginals(&dist);
    let mut report = json!({
        "ground_size": n,
        "log_normalizer": dist.log_normalizer(),
        "marginals": marginals,
    });
    if n <= MAX_LISTED_DISTRIBUTION {
        let listed: Vec<Value> = dist
            .probabilities()
            .iter()
            .enumerate()
            .map(|(mask, &p)| json!({ "set": members(n, mask as u64), "p": p }))
            .collect();
        report["distribution"] = Value::Array(listed);
    }
    if n <= MAX_SUBMODULARITY {
        let s = check_log_submodular(m)?;
        report["log_submodular"] = json!({
            "verdict": if s.holds { "holds" } else { "violated" },
            "worst_slack": finite(s.worst_slack),
            "witness": s.witness.map(|(a, b)| vec![members(n, a), members(n, b)]),
        });
        println!(
            "log-submodularity: {} (worst slack {:.6e})",
            if s.holds { "holds" } else { "violated" },
            s.worst_slack
        );
    }
    create_dir(out)?;
    let path = out.join("exact.json");
    write_json(&path, &report)?;
    println!("marginals: {marginals:?}");
    println!("wrote {}", path.display());
    Ok(())
}

pub fn check(cfg: &RunConfig, out: &Path, delete_factor: DeleteFactor) -> Result<()> {
    let built = cfg.build_measure()?;
    let m = &*built.measure;
    let n = m.ground_size();
    if n > MAX_CHECK {
        return Err(Error::Size(format!("check supports N <= {MAX_CHECK}, got N = {n}")).into());
    }
    if cfg.check.lumping && n > MAX_LUMPING {
        return Err(Error::Size(format!(
            "lumping check supports N <= {MAX_LUMPING}, got N = {n}; set \"check\": {{\"lumping\": false}}"
        ))
        .into());
    }
    let dist = enumerate_distribution(m)?;
    let mut failures = Vec::new();
    let mut chains = Vec::new();
    let mut projection = None;
    for kind in ChainKind::ALL {
        let p = transition_matrix(m, kind, delete_factor)?;
        let stat = stationarity_check(&p, &dist)?;
        let balance = detailed_balance_check(&p, &dist)?;
        let pass = stat <= STATIONARITY_TOL && balance <= STATIONARITY_TOL;
        if !pass {
            failures.push(format!("{} stationarity {stat:.3e}, balance {balance:.3e}", kind.name()));
        }
        println!(
            "{:<11} stationarity {stat:.3e}  detailed balance {balance:.3e}  {}",
            kind.name(),
            if pass { "pass" } else { "FAIL" }
        );
        chains.push(json!({
            "chain": kind.name(),
            "stationarity_residual": stat,
            "detailed_balance_residual": balance,
            "pass": pass,
        }));
        if kind == ChainKind::Projection {
            projection = Some((p, pass));
        }
    }
    let (projection, projection_ok) = projection.expect("projection is one of the kinds");
    let mut report = json!({
        "ground_size": n,
        "delete_factor": match delete_factor {
            DeleteFactor::Balanced => "balanced",
            DeleteFactor::Inverted => "inverted",
        },
        "tolerances": { "stationarity": STATIONARITY_TOL, "lumping": LUMPING_TOL },
        "chains": chains,
    });

    if cfg.check.lumping {
        let entry = match lumped_exchange_matrix(m).and_then(|l| l.max_abs_difference(&projection)) {
            Ok(gap) => {
                let pass = gap <= LUMPING_TOL;
                if !pass {
                    failures.push(format!("lumping gap {gap:.3e}"));
                }
                println!("lumping     max entrywise gap {gap:.3e}  {}", if pass { "pass" } else { "FAIL" });
                json!({ "max_abs_difference": gap, "pass": pass })
            }
            Err(e @ (Error::Consistency(_) | Error::Argument(_))) => {
                failures.push(format!("lumping: {e}"));
                println!("lumping     FAIL: {e}");
                json!({ "error": e.to_string(), "pass": false })
            }
            Err(e) => return Err(e.into()),
        };
        report["lumping"] = entry;
    }

    if cfg.check.mixing {
        report["mixing"] = if projection_ok {
            let entry = mixing_dominance(m, &projection, &dist, &cfg.eps.values())?;
            if entry["pass"] != json!(true) {
                failures.push("mixing time exceeds the bound".into());
            }
            entry
        } else {
            println!("mixing      skipped: projection chain does not leave π invariant");
            json!({ "skipped": "projection chain does not leave the target invariant" })
        };
    }

    report["pass"] = json!(failures.is_empty());
    create_dir(out)?;
    let path = out.join("check.json");
    write_json(&path, &report)?;
    println!("wrote {}", path.display());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("checks failed: {}", failures.join("; "))))
    }
}

fn mixing_dominance(
    m: &dyn Measure,
    p: &sr_mcmc::exact::TransitionMatrix,
    dist: &sr_mcmc::exact::ExactDistribution,
    eps: &[f64],
) -> Result<Value> {
    let n = m.ground_size();
    let mut worst_ratio = 0.0f64;
    let mut violations = Vec::new();
    for &s0 in p.states() {
        let taus = tv_mixing_times(p, dist, s0, eps)?;
        for (&tau, &e) in taus.iter().zip(eps) {
            let bound = theorem_bound(n, s0.count_ones() as usize, dist.probability(s0).ln(), e)?;
            worst_ratio = worst_ratio.max(tau as f64 / bound);
            if tau as f64 > bound {
                violations.push(json!({ "set": members(n, s0), "eps": e, "tau": tau, "bound": bound }));
            }
        }
    }
    let pass = violations.is_empty();
    println!(
        "mixing      {} initial states, max tau/bound {worst_ratio:.3}  {}",
        p.states().len(),
        if pass { "pass" } else { "FAIL" }
    );
    Ok(json!({
        "eps": eps,
        "initial_states": p.states().len(),
        "max_tau_over_bound": worst_ratio,
        "violations": violations,
        "pass": pass,
    }))
}

pub fn bound(cfg: &RunConfig, out: &Path, seed: u64) -> Result<()> {
    let built = cfg.build_measure()?;
    let m = &*built.measure;
    let n = m.ground_size();
    let s0: SubsetState = resolve_init(m, &cfg.init, &mut stream(seed, 0))?;
    let k0 = s0.cardinality();
    let log_pi_s0 = match cfg.bound.log_pi_s0 {
        Some(v) => v,
        None => {
            let log_z = match built.log_normalizer {
                Some(z) => z,
                None => enumerate_distribution(m)
                    .map_err(|e| match e {
                        Error::Size(msg) => Error::Size(format!("{msg}; supply bound.log_pi_s0 instead")),
                        other => other,
                    })?
                    .log_normalizer(),
            };
            m.log_weight(&s0)?.value() - log_z
        }
    };
    let log_binom = ln_binomial(n, k0);
    let mut rows = Vec::new();
    println!("S0 = {:?} (|S0| = {k0}), N = {n}", s0.members());
    println!("  2N^2            = {}", 2 * n * n);
    println!("  log C(N, |S0|)  = {log_binom:.6}");
    println!("  -log pi(S0)     = {:.6}", -log_pi_s0);
    for e in cfg.eps.values() {
        // total variation never exceeds 1, so at eps = 1 the chain has mixed at t = 0
        let degenerate = e == 1.0;
        if degenerate {
            eprintln!("warning: eps = 1 is met by every distribution; reporting a bound of 0");
        }
        let bound_or_zero = |b: f64| if degenerate { 0.0 } else { b };
        let theorem = bound_or_zero(theorem_bound(n, k0, log_pi_s0, e)?);
        let homogenized = bound_or_zero(exchange_bound(n, 2 * n, log_pi_s0 - log_binom, e)?);
        let mut row = json!({
            "eps": e,
            "log_inv_eps": -e.ln(),
            "theorem_bound": theorem,
            "homogenized_exchange_bound": homogenized,
        });
        println!("  eps = {e}: -log eps = {:.6}, theorem bound = {theorem:.4}", -e.ln());
        if let Some(k) = built.homogeneous_k {
            let direct = bound_or_zero(exchange_bound(k, n, log_pi_s0, e)?);
            row["exchange_bound"] = json!(direct);
            println!("           exchange bound on the k = {k} shell = {direct:.4}");
        }
        rows.push(row);
    }
    let report = json!({
        "ground_size": n,
        "initial_set": s0.members(),
        "log_binomial": log_binom,
        "log_pi_s0": log_pi_s0,
        "prefactor": 2 * n * n,
        "bounds": rows,
    });
    create_dir(out)?;
    write_json(&out.join("bound.json"), &report)
}

pub fn compare(cfg: &RunConfig, out: &Path, seed: u64) -> Result<()> {
    let built = cfg.build_measure()?;
    let setup = ComparisonSetup {
        kinds: cfg.compare.kinds.clone(),
        chains: cfg.chain.chains.unwrap_or(DEFAULT_CHAINS),
        steps: cfg.chain.steps,
        burn_in: cfg.chain.burn_in,
        thin: cfg.chain.thin,
        seed,
        init: cfg.init.clone(),
        statistics: cfg.compare.statistics.clone(),
        threshold: cfg.compare.threshold,
        stride: cfg.compare.stride,
    };
    let rows = compare_chains(&*built.measure, &setup)?;
    create_dir(out)?;

    let table = out.join("compare.csv");
    let curves = out.join("curves.csv");
    let csv_err = |path: &Path| {
        let path = path.to_owned();
        move |e: csv::Error| CliError::io(&path, e.into())
    };
    let mut w = csv::Writer::from_path(&table).map_err(csv_err(&table))?;
    w.write_record(["chain", "statistic", "iterations_to_threshold"]).map_err(csv_err(&table))?;
    for r in &rows {
        let hit = r.iterations_to_threshold.map_or(String::new(), |s| s.to_string());
        w.write_record([r.kind.name(), &r.statistic.label(), &hit]).map_err(csv_err(&table))?;
        println!(
            "{:<11} {:<14} {}",
            r.kind.name(),
            r.statistic.label(),
            r.iterations_to_threshold.map_or("not reached".into(), |s| s.to_string())
        );
    }
    w.flush().map_err(|e| CliError::io(&table, e))?;

    let mut w = csv::Writer::from_path(&curves).map_err(csv_err(&curves))?;
    w.write_record(["chain", "statistic", "iteration", "psrf"]).map_err(csv_err(&curves))?;
    for r in &rows {
        for &(iteration, value) in &r.curve {
            w.write_record([r.kind.name(), &r.statistic.label(), &iteration.to_string(), &value.to_string()])
                .map_err(csv_err(&curves))?;
        }
    }
    w.flush().map_err(|e| CliError::io(&curves, e))?;
    println!("wrote {} and {}", table.display(), curves.display());
    Ok(())
}
