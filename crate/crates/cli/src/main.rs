use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ramp_merge::experiment::{self, CalibrationOptions, SweepSpec};
use ramp_merge::io::{self, TrialRow};
use ramp_merge::metrics::{aggregate, summarize, TrialSummary};
use ramp_merge::{config, Controller, Outcome, ScenarioConfig, SimulationTrace};

#[derive(Parser, Debug)]
#[command(name = "rampsim", version, about = "Ramp-merging simulation runner")]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
}

#[derive(Subcommand, Debug)]
enum Mode {
    /// Run one scenario for `--trials` trials; trial 0 gets a full trace.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ControllerArg::Planner)]
        controller: ControllerArg,
    },
    /// Sweep one config key over a range, writing every trace.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "initial_fv_relative_distance")]
        param: String,
        #[arg(long, default_value_t = -15.0, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, default_value_t = 15.0, allow_negative_numbers = true)]
        to: f64,
        #[arg(long, default_value_t = 3.0)]
        step: f64,
        #[arg(long, value_enum, default_value_t = ControllerArg::Planner)]
        controller: ControllerArg,
    },
    /// Bisect the decision threshold toward a target mean decision time.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.24)]
        target: f64,
    },
    /// Curvature table over the three curve families and the APF velocity comparison.
    CompareBaselines {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario document; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `scenario.rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per run or per sweep point; the config's trial count when omitted.
    #[arg(long)]
    trials: Option<usize>,
    /// Exit with status 2 if any trial ends in a collision.
    #[arg(long)]
    fail_on_collision: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ControllerArg {
    Planner,
    Apf,
}

impl From<ControllerArg> for Controller {
    fn from(c: ControllerArg) -> Self {
        match c {
            ControllerArg::Planner => Controller::Planner,
            ControllerArg::Apf => Controller::Apf,
        }
    }
}

enum Status {
    Ok,
    Collision,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.mode) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Collision) => {
            eprintln!("rampsim: collision outcome recorded");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("rampsim: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(mode: Mode) -> Result<Status> {
    match mode {
        Mode::Run { common, controller } => {
            let (cfg, trials) = prepare(&common)?;
            let outcomes = run(&cfg, trials, controller.into(), &common.out)?;
            Ok(status(&common, &outcomes))
        }
        Mode::Sweep { common, param, from, to, step, controller } => {
            let (cfg, trials) = prepare(&common)?;
            let spec = SweepSpec { param, from, to, step, trials };
            let outcomes = sweep(&cfg, &spec, controller.into(), &common.out)?;
            Ok(status(&common, &outcomes))
        }
        Mode::Calibrate { common, target } => {
            let (mut cfg, trials) = prepare(&common)?;
            cfg.trial_count = trials;
            let opts = CalibrationOptions { target, ..CalibrationOptions::default() };
            let cal = experiment::calibrate(&cfg, &opts)?;
            cfg.decision.threshold = cal.threshold;
            write_echo(&cfg, &common.out)?;
            let report = format!(
                "threshold: {}\nmean_decision_time_s: {}\ntarget_s: {}\ntrials: {}\niterations: {}\n",
                io::fmt_sig(cal.threshold),
                io::fmt_sig(cal.mean_decision_time),
                io::fmt_sig(target),
                trials,
                cal.iterations,
            );
            write_text(&common.out.join("calibration.txt"), &report)?;
            print!("{report}");
            Ok(Status::Ok)
        }
        Mode::CompareBaselines { common } => {
            let (cfg, trials) = prepare(&common)?;
            let outcomes = compare(&cfg, trials, &common.out)?;
            Ok(status(&common, &outcomes))
        }
    }
}

fn prepare(common: &Common) -> Result<(ScenarioConfig, usize)> {
    let mut cfg = match &common.config {
        Some(path) => config::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.rng_seed = seed;
    }
    cfg.validate()?;
    let trials = common.trials.unwrap_or(cfg.trial_count);
    anyhow::ensure!(trials > 0, "invalid input: --trials must be positive");
    std::fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
    Ok((cfg, trials))
}

fn status(common: &Common, outcomes: &[Outcome]) -> Status {
    let collided = outcomes.contains(&Outcome::Collision);
    if common.fail_on_collision && collided {
        Status::Collision
    } else {
        Status::Ok
    }
}

fn write_echo(cfg: &ScenarioConfig, out: &Path) -> Result<()> {
    write_text(&out.join("config.txt"), &config::echo(cfg))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_trace_files(trace: &SimulationTrace, trace_path: &Path, candidates_path: Option<&Path>) -> Result<()> {
    io::write_file(trace_path, |w| io::write_trace(w, trace))?;
    let plan = trace.plan.as_ref().or(trace.attempts.last());
    if let (Some(path), Some(record)) = (candidates_path, plan) {
        io::write_file(path, |w| io::write_candidates(w, &record.plan))?;
    }
    Ok(())
}

fn write_summary_file(out: &Path, sections: &[(String, Vec<TrialSummary>)], extra: &str) -> Result<()> {
    let mut text = Vec::new();
    for (title, summaries) in sections {
        io::write_summary(&mut text, title, &aggregate(summaries)?)?;
        text.push(b'\n');
    }
    text.extend_from_slice(extra.as_bytes());
    std::fs::write(out.join("summary.txt"), text)?;
    Ok(())
}

fn run(cfg: &ScenarioConfig, trials: usize, controller: Controller, out: &Path) -> Result<Vec<Outcome>> {
    let traces = experiment::run_trials(cfg, trials, controller)?;
    write_echo(cfg, out)?;
    write_trace_files(&traces[0], &out.join("trace.csv"), Some(&out.join("candidates.csv")))?;
    let summaries: Vec<TrialSummary> = traces.iter().map(summarize).collect();
    let rows: Vec<TrialRow> = summaries
        .iter()
        .enumerate()
        .map(|(i, s)| TrialRow { trial: i as u64, param_value: None, controller: controller.as_str(), summary: *s })
        .collect();
    io::write_file(&out.join("trials.csv"), |w| io::write_trials(w, &rows))?;
    let outcomes = summaries.iter().map(|s| s.outcome).collect();
    write_summary_file(out, &[(controller.as_str().to_string(), summaries)], "")?;
    Ok(outcomes)
}

fn sweep(cfg: &ScenarioConfig, spec: &SweepSpec, controller: Controller, out: &Path) -> Result<Vec<Outcome>> {
    let points = experiment::sweep(cfg, spec, controller)?;
    write_echo(cfg, out)?;
    let traces_dir = out.join("traces");
    std::fs::create_dir_all(&traces_dir)?;
    let mut rows = Vec::new();
    let mut sections = Vec::new();
    let mut all = Vec::new();
    for (p, point) in points.iter().enumerate() {
        let mut summaries = Vec::new();
        for (t, trace) in point.traces.iter().enumerate() {
            let stem = format!("p{p:02}_t{t:03}");
            write_trace_files(
                trace,
                &traces_dir.join(format!("{stem}_trace.csv")),
                Some(&traces_dir.join(format!("{stem}_candidates.csv"))),
            )?;
            let s = summarize(trace);
            rows.push(TrialRow { trial: t as u64, param_value: Some(point.value), controller: controller.as_str(), summary: s });
            summaries.push(s);
        }
        all.extend_from_slice(&summaries);
        sections.push((format!("{} = {}", spec.param, io::fmt_sig(point.value)), summaries));
    }
    io::write_file(&out.join("trials.csv"), |w| io::write_trials(w, &rows))?;
    sections.insert(0, (format!("{} sweep", controller.as_str()), all.clone()));
    write_summary_file(out, &sections, "")?;
    Ok(all.iter().map(|s| s.outcome).collect())
}

fn compare(cfg: &ScenarioConfig, trials: usize, out: &Path) -> Result<Vec<Outcome>> {
    let cmp = experiment::compare_baselines(cfg, trials)?;
    write_echo(cfg, out)?;
    io::write_file(&out.join("curvature.csv"), |w| io::write_curvature(w, &cmp.curvature))?;
    let mut rows = Vec::new();
    for (name, summaries) in [("planner", &cmp.planner), ("apf", &cmp.apf)] {
        rows.extend(summaries.iter().enumerate().map(|(i, s)| TrialRow {
            trial: i as u64,
            param_value: None,
            controller: name,
            summary: *s,
        }));
    }
    io::write_file(&out.join("trials.csv"), |w| io::write_trials(w, &rows))?;
    let gap = (cmp.planner_velocity.mean - cmp.apf_velocity.mean) / cmp.apf_velocity.mean;
    let mut extra = String::from("[curvature]\n");
    for r in &cmp.curvature {
        extra.push_str(&format!(
            "{}: max_abs={} mean_abs={} length_m={}\n",
            r.kind.as_str(),
            io::fmt_sig(r.max_abs),
            io::fmt_sig(r.mean_abs),
            io::fmt_sig(r.length)
        ));
    }
    extra.push_str(&format!("\n[velocity]\nrelative_gap: {}\n", io::fmt_sig(gap)));
    write_summary_file(out, &[("planner".into(), cmp.planner.clone()), ("apf".into(), cmp.apf.clone())], &extra)?;
    Ok(cmp.planner.iter().chain(&cmp.apf).map(|s| s.outcome).collect())
}
