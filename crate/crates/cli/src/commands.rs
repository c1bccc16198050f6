use std::fs;
use std::path::{Path, PathBuf};

use gamchain::bench::{growth_rate, run_benchmark, write_bench_csv, BenchConfig};
use gamchain::derivations::{render_markdown, run_all};
use gamchain::engine::{fit_engine, EngineConfig, Posterior};
use gamchain::eval::{draw_residuals, qq_pairs, series_stats, ResidualReport, DEFAULT_ALPHA};
use gamchain::ingest::load_series;
use gamchain::model::{increment_kurtosis, increment_variance, marginal_return_kurtosis, GamChainParams, LogNParams, ReturnSeries};
use gamchain::numerics::sampling::substream;
use gamchain::numerics::timing::time_function;
use gamchain::report::{EmSettings, Engine, FitReport};
use gamchain::simulate::{simulate_gamchain, simulate_logn, SyntheticDataset};
use gamchain::vi::Topology;

use crate::settings::ConfigFile;
use crate::{BenchArgs, Cli, CliError, Command, DerivationArgs, FitArgs, MomentsArgs, ResidualArgs, SeriesArgs, SimulateArgs, StatsArgs, TimingArgs};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let dir = file.report_dir(cli.report_dir.clone())?;
    match cli.command {
        Command::Fit(args) => fit(&args, &file, &dir),
        Command::Simulate(args) => simulate(&args),
        Command::Residuals(args) => residuals(&args, &file, &dir),
        Command::Stats(args) => stats(&args),
        Command::Moments(args) => moments(&args, &dir),
        Command::Bench(args) => bench(&args, &dir),
        Command::Timing(args) => timing(&args, &dir),
        Command::Derivations(args) => derivations(&args, &dir),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

fn instrument_of(path: &Path, given: Option<&str>) -> String {
    given.map(str::to_string).unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "series".to_string())
    })
}

fn load(args: &SeriesArgs) -> Result<ReturnSeries, CliError> {
    let id = instrument_of(&args.input, args.instrument.as_deref());
    Ok(load_series(&args.input, &id, &args.period)?)
}

fn parse_engine(label: &str) -> Result<Engine, CliError> {
    label.parse().map_err(|e: gamchain::Error| CliError::usage(e.to_string()))
}

pub fn report_path(dir: &Path, id: &str, engine: &str, kind: &str, ext: &str) -> PathBuf {
    dir.join(format!("{id}.{engine}.{kind}.{ext}"))
}

fn engine_config(args: &FitArgs, file: &ConfigFile, engine: Engine) -> Result<EngineConfig, CliError> {
    let em = EmSettings {
        max_rounds: file.pick(args.max_rounds, "max-rounds", EmSettings::default().max_rounds)?,
        tol: file.pick(args.tol_a, "tol-a", EmSettings::default().tol)?,
        ..EmSettings::default()
    };
    let mut cfg = EngineConfig::default().with_em(em);
    let sweeps = file.pick(args.sweeps, "sweeps", 1)?;
    cfg.vi.sweeps = sweeps;
    cfg.laplace.sweeps = sweeps;
    cfg.mc.seed = file.pick(args.seed, "seed", 0)?;
    cfg.mc.particles = file.pick(args.particles, "particles", cfg.mc.particles)?;
    cfg.mc.trajectories = file.pick_opt(args.trajectories, "trajectories")?;
    if file.switch(args.paper_literal, "paper-literal")? {
        if engine != Engine::C3 {
            return Err(CliError::usage("--paper-literal applies to c3 only"));
        }
        cfg.vi.topology = Topology::TrailingDummy;
    }
    Ok(cfg)
}

struct FitOutcome {
    id: String,
    report: FitReport,
}

fn fit_one(path: &Path, period: &str, engine: Engine, cfg: &EngineConfig, dir: &Path) -> Result<FitOutcome, CliError> {
    let id = instrument_of(path, None);
    let series = load_series(path, &id, period)?;
    let (report, posterior) = fit_engine(&series, engine, cfg)?;
    let label = engine.label();
    write_text(&report_path(dir, &id, label, "report", "json"), &report.to_json()?)?;
    posterior.write_json(&report_path(dir, &id, label, "posterior", "json"))?;
    let timings = serde_json::to_string_pretty(&report.timings).map_err(gamchain::Error::from)?;
    write_text(&report_path(dir, &id, label, "timings", "json"), &timings)?;
    Ok(FitOutcome { id, report })
}

fn fit(args: &FitArgs, file: &ConfigFile, dir: &Path) -> Result<(), CliError> {
    let engine_label: String = file
        .pick_opt(args.engine.clone(), "engine")?
        .ok_or_else(|| CliError::usage("--engine is required (c1, c2, c3 or c4)"))?;
    let engine = parse_engine(&engine_label)?;
    let cfg = engine_config(args, file, engine)?;
    ensure_dir(dir)?;
    // one worker per series
    let outcomes: Vec<Result<FitOutcome, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = args
            .inputs
            .iter()
            .map(|path| s.spawn(|| fit_one(path, &args.period, engine, &cfg, dir)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("fit worker panicked")).collect()
    });
    let mut stalled = Vec::new();
    for outcome in outcomes {
        let FitOutcome { id, report } = outcome?;
        println!(
            "{id}: {engine} {}={:.6} after {} rounds{}",
            if engine == Engine::C1 || engine == Engine::C2 { "S2" } else { "A" },
            report.params.value(),
            report.iterations,
            if report.converged { "" } else { " (not converged)" }
        );
        if !report.converged {
            stalled.push(id);
        }
    }
    if stalled.is_empty() {
        Ok(())
    } else {
        Err(CliError::Convergence(format!("no convergence for: {}", stalled.join(", "))))
    }
}

fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let data = match args.model.as_str() {
        "gam" => {
            let a = args.a.ok_or_else(|| CliError::usage("--a is required for --model gam"))?;
            simulate_gamchain(GamChainParams::new(a)?, args.t, args.u0, args.seed)?
        }
        "logn" => {
            let s2 = args.s2.ok_or_else(|| CliError::usage("--s2 is required for --model logn"))?;
            simulate_logn(LogNParams::new(s2)?, args.t, args.u0, args.seed)?
        }
        other => return Err(CliError::usage(format!("unknown model '{other}' (expected gam or logn)"))),
    };
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    data.write_csv(&args.out)?;
    data.write_sidecar(&args.out.with_extension("json"))?;
    Ok(())
}

fn residuals(args: &ResidualArgs, file: &ConfigFile, dir: &Path) -> Result<(), CliError> {
    let series = load(&args.series)?;
    let id = series.instrument_id.clone();
    let label: String = file
        .pick_opt(args.engine.clone(), "engine")?
        .ok_or_else(|| CliError::usage("--engine is required (c1..c4, raw or exact)"))?;
    let seed = file.pick(args.seed, "seed", 0)?;
    let alpha = file.pick(args.alpha, "alpha", DEFAULT_ALPHA)?;
    let residuals = match label.as_str() {
        "raw" => series.returns().to_vec(),
        "exact" => {
            let sidecar = args.sidecar.clone().unwrap_or_else(|| args.series.input.with_extension("json"));
            let data = SyntheticDataset::read_sidecar(&sidecar)
                .map_err(|e| CliError::usage(format!("cannot read sidecar {}: {e}", sidecar.display())))?;
            draw_residuals(&Posterior::Exact(data.latents), &series, &mut substream(seed, 0))?
        }
        other => {
            let engine = parse_engine(other)?;
            let path = report_path(dir, &id, engine.label(), "posterior", "json");
            if !path.exists() {
                return Err(CliError::usage(format!(
                    "no posterior at {}; run `fit --engine {engine}` first",
                    path.display()
                )));
            }
            let posterior = Posterior::read_json(&path)?;
            draw_residuals(&posterior, &series, &mut substream(seed, 0))?
        }
    };
    let report = ResidualReport::from_residuals(&id, &label, &residuals, alpha)?;
    ensure_dir(dir)?;
    let json = serde_json::to_string_pretty(&report).map_err(gamchain::Error::from)?;
    write_text(&report_path(dir, &id, &label, "residuals", "json"), &json)?;
    let mut qq = String::from("normal_quantile,residual\n");
    for (q, x) in qq_pairs(&residuals)? {
        qq.push_str(&format!("{q:e},{x:e}\n"));
    }
    write_text(&report_path(dir, &id, &label, "qq", "csv"), &qq)?;
    println!(
        "{id}: {label} D={:.4} p={:.4} {}",
        report.ks_statistic,
        report.p_value,
        if report.passed { "pass" } else { "fail" }
    );
    Ok(())
}

fn stats(args: &StatsArgs) -> Result<(), CliError> {
    let series = load(&args.series)?;
    let s = series_stats(&series)?;
    println!("{}", serde_json::to_string_pretty(&s).map_err(gamchain::Error::from)?);
    Ok(())
}

pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::usage(format!("grid '{text}' must look like lo:hi:n with 0 < lo < hi and n >= 2"));
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else { return Err(bad()) };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && hi.is_finite() && n >= 2) {
        return Err(bad());
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn moments(args: &MomentsArgs, dir: &Path) -> Result<(), CliError> {
    let grid = parse_grid(&args.a_grid)?;
    let mut out = String::from("a,increment_variance,increment_kurtosis,return_kurtosis\n");
    for a in grid {
        let p = GamChainParams::new(a)?;
        // the return kurtosis is infinite for A <= 2; leave the cell empty
        let rk = marginal_return_kurtosis(p).map(|k| format!("{k:.12e}")).unwrap_or_default();
        out.push_str(&format!("{a:.12e},{:.12e},{:.12e},{rk}\n", increment_variance(p), increment_kurtosis(p)));
    }
    let path = args.out.clone().unwrap_or_else(|| dir.join("moments.csv"));
    ensure_parent(&path)?;
    write_text(&path, &out)
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(parent) => ensure_dir(parent),
        None => Ok(()),
    }
}

fn bench(args: &BenchArgs, dir: &Path) -> Result<(), CliError> {
    let engines = args.engines.iter().map(|e| parse_engine(e)).collect::<Result<Vec<_>, _>>()?;
    let longest = args.lengths.iter().copied().max().unwrap_or(0);
    let series = match &args.input {
        Some(path) => load_series(path, &instrument_of(path, None), "")?,
        None => simulate_gamchain(GamChainParams::new(1.0)?, longest, 1.0, args.seed)?.series,
    };
    let cfg = BenchConfig {
        engines: engines.clone(),
        lengths: args.lengths.clone(),
        iterations: args.iterations,
        particles: args.particles,
        repetitions: args.repetitions,
        seed: args.seed,
        ..BenchConfig::default()
    };
    let reports = run_benchmark(&series, &cfg)?;
    let path = args.out.clone().unwrap_or_else(|| dir.join("bench.csv"));
    ensure_parent(&path)?;
    write_bench_csv(&path, &reports)?;
    for r in &reports {
        println!("{} T={} estep={:.4}s total={:.4}s", r.engine, r.sequence_length, r.estep_seconds, r.total_seconds);
    }
    if args.lengths.len() >= 2 {
        for e in engines {
            println!("{e} growth {:.3e} s per step", growth_rate(&reports, e)?);
        }
    }
    Ok(())
}

fn timing(args: &TimingArgs, dir: &Path) -> Result<(), CliError> {
    let mut out = String::from("function_name,mean_eval_time,sample_count\n");
    for f in &args.functions {
        let rec = time_function(f, args.evaluations)?;
        println!("{:<10} {:.3} ns", rec.function_name, rec.mean_eval_time * 1e9);
        out.push_str(&format!("{},{:e},{}\n", rec.function_name, rec.mean_eval_time, rec.sample_count));
    }
    let path = args.out.clone().unwrap_or_else(|| dir.join("timing.csv"));
    ensure_parent(&path)?;
    write_text(&path, &out)
}

fn derivations(args: &DerivationArgs, dir: &Path) -> Result<(), CliError> {
    let checks = run_all()?;
    let md = render_markdown(&checks);
    let path = args.out.clone().unwrap_or_else(|| dir.join("derivations.md"));
    ensure_parent(&path)?;
    write_text(&path, &md)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
    println!("{}/{} derivation checks passed", checks.len() - failed.len(), checks.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Convergence(format!("failed checks: {}", failed.join(", "))))
    }
}
