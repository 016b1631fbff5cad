mod error;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dstates_core::compare::MatchSpec;
use dstates_core::graph::export_dot;
use dstates_core::pipelines::even::{reconstruct_series, EvenAssessment};
use dstates_core::pipelines::io::{eca_to_image, field_to_csv, parse_symbol_series, read_pgm, write_pgm};
use dstates_core::pipelines::{
    ca_filter, image_filter, render_field, run_even, CaConfig, ComplexityField, EvenConfig, GreyImage,
    ImageFilterConfig, Preprocess, RenderMode,
};
use dstates_core::reconstruct::Determinism;

use crate::error::CliError;
use crate::report::Report;

#[derive(Debug, Parser)]
#[command(name = "dstates", version, about = "Causal and decisional state reconstruction")]
struct Cli {
    /// Worker threads (0 = all cores). Outputs do not depend on it.
    #[arg(long, global = true, env = "DSTATES_WORKERS", default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an Even process series and reconstruct its machine.
    EvenProcess(EvenArgs),
    /// Reconstruct the machine of a symbol series read from a file.
    Reconstruct(ReconstructArgs),
    /// Light-cone complexity fields of an elementary cellular automaton.
    CaFilter(CaArgs),
    /// Decisional complexity field of a grey-level image.
    ImageFilter(ImageArgs),
}

#[derive(Debug, Args)]
struct MachineArgs {
    /// Chi-square significance level [source: reference experiment]
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Determinism threshold [source: reference experiment]
    #[arg(long, default_value_t = 0.95)]
    theta: f64,
    /// Split/merge iteration cap [source: design default]
    #[arg(long, default_value_t = 64)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct EvenArgs {
    /// Series length [source: reference experiment]
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    /// Past window length [source: reference experiment]
    #[arg(long = "L", default_value_t = 10)]
    window: usize,
    /// Random seed; trial k uses seed + k [source: reference experiment]
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Independent trials [source: design default]
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Window sweep `a..b` (inclusive), written to sweep.csv [source: design default]
    #[arg(long = "L-range", value_parser = parse_range)]
    l_range: Option<(usize, usize)>,
    #[command(flatten)]
    machine: MachineArgs,
    /// Output directory [source: design default]
    #[arg(long, default_value = "dstates-out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    /// Symbol series: whitespace-separated tokens or one line of characters
    #[arg(long)]
    input: PathBuf,
    /// Past window length [source: reference experiment]
    #[arg(long = "L", default_value_t = 10)]
    window: usize,
    #[command(flatten)]
    machine: MachineArgs,
    /// Output directory [source: design default]
    #[arg(long, default_value = "dstates-out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CaArgs {
    /// Rule number [source: reference experiment]
    #[arg(long, default_value_t = 110)]
    rule: u8,
    /// Cells per row [source: reference experiment]
    #[arg(long, default_value_t = 400)]
    width: usize,
    /// Rows kept [source: reference experiment]
    #[arg(long, default_value_t = 300)]
    steps: usize,
    /// Initial rows dropped [source: reference experiment]
    #[arg(long, default_value_t = 100)]
    drop: usize,
    /// Past cone depth [source: reference experiment]
    #[arg(long, default_value_t = 6)]
    past: usize,
    /// Future cone depth [source: reference experiment]
    #[arg(long, default_value_t = 4)]
    future: usize,
    /// Random seed [source: reference experiment]
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Field rendering [source: design default]
    #[arg(long, value_enum, default_value_t = Render::Raw)]
    render: Render,
    /// Output directory [source: design default]
    #[arg(long, default_value = "dstates-out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ImageArgs {
    /// 8-bit binary graymap
    #[arg(long)]
    input: PathBuf,
    /// Kernel bandwidth [source: reference experiment]
    #[arg(long = "h", default_value_t = 5.0)]
    bandwidth: f64,
    /// Utility tolerance on grey levels [source: reference experiment]
    #[arg(long, default_value_t = 15.0)]
    tau: f64,
    /// Bhattacharyya matching threshold [source: design default]
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Kernel contributions below this are dropped [source: design default]
    #[arg(long, default_value_t = 1e-6)]
    cutoff: f64,
    /// Neighbourhood preprocessing [source: design default]
    #[arg(long, value_enum, default_value_t = PreprocessArg::None)]
    preprocess: PreprocessArg,
    /// Field rendering [source: reference experiment]
    #[arg(long, value_enum, default_value_t = Render::Rank)]
    render: Render,
    /// Process only the region `x,y,width,height`
    #[arg(long, value_parser = parse_crop)]
    crop: Option<(usize, usize, usize, usize)>,
    /// Output directory [source: design default]
    #[arg(long, default_value = "dstates-out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Render {
    Raw,
    Rank,
}

impl From<Render> for RenderMode {
    fn from(r: Render) -> Self {
        match r {
            Render::Raw => RenderMode::Raw,
            Render::Rank => RenderMode::Rank,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PreprocessArg {
    None,
    SubtractMin,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once("..").ok_or("expected a..b")?;
    let a: usize = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a == 0 || a > b {
        return Err(format!("invalid window range {a}..{b}"));
    }
    Ok((a, b))
}

fn parse_crop(s: &str) -> Result<(usize, usize, usize, usize), String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse().map_err(|e| format!("{e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, w, h] => Ok((x, y, w, h)),
        _ => Err("expected x,y,width,height".into()),
    }
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<(), CliError> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn write_image(dir: &Path, name: &str, img: &GreyImage) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_pgm(img, &mut buf)?;
    write_file(dir, name, &buf)
}

fn write_field(dir: &Path, stem: &str, f: &ComplexityField, mode: RenderMode) -> Result<(), CliError> {
    write_file(dir, &format!("{stem}.csv"), field_to_csv(f).as_bytes())?;
    write_image(dir, &format!("{stem}.pgm"), &render_field(f, mode)?)
}

fn assessment_lines(r: &mut Report, a: &EvenAssessment) {
    r.kv("recurrent_states", a.recurrent.len());
    r.kv(
        "recurrent",
        a.recurrent.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "),
    );
    r.kv("transient_states", a.transients.len());
    r.kv("structurally_correct", a.structurally_correct);
    if let (Some(sa), Some(sb)) = (a.a, a.b) {
        r.kv("state_a", sa);
        r.kv("state_b", sb);
        r.kv("p1_given_a", a.p1_given_a.unwrap_or(f64::NAN));
        r.kv("p1_given_b", a.p1_given_b.unwrap_or(f64::NAN));
    }
    for t in &a.transients {
        r.kv(
            "transient",
            format!("{} mass={:.6} p0={:.6} p1={:.6}", t.state, t.mass, t.p0, t.p1),
        );
    }
}

fn even_process(args: &EvenArgs) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    fs::create_dir_all(&args.out)?;
    let cfg = |window: usize, seed: u64| EvenConfig {
        n: args.n,
        window,
        seed,
        alpha: args.machine.alpha,
        theta: args.machine.theta,
        max_iter: args.machine.max_iter,
    };
    if let Some((lo, hi)) = args.l_range {
        let mut csv = String::from("L,mean_recurrent_states,fraction_two_recurrent,fraction_structurally_correct\n");
        for window in lo..=hi {
            let (mut total, mut two, mut correct) = (0usize, 0usize, 0usize);
            for k in 0..args.trials {
                let run = run_even(&cfg(window, args.seed + k as u64))?;
                total += run.assessment.recurrent.len();
                two += (run.assessment.recurrent.len() == 2) as usize;
                correct += run.assessment.structurally_correct as usize;
            }
            let t = args.trials as f64;
            csv.push_str(&format!(
                "{window},{},{},{}\n",
                total as f64 / t,
                two as f64 / t,
                correct as f64 / t
            ));
        }
        return write_file(&args.out, "sweep.csv", csv.as_bytes());
    }
    let mut report = Report::default();
    report.kv("command", "even-process");
    report.kv("n", args.n).kv("L", args.window).kv("seed", args.seed);
    report.kv("alpha", args.machine.alpha).kv("theta", args.machine.theta);
    let mut recurrent_total = 0;
    for k in 0..args.trials {
        let run = run_even(&cfg(args.window, args.seed + k as u64))?;
        recurrent_total += run.assessment.recurrent.len();
        if k == 0 {
            let machine = run.reconstruction.machine.as_ref().expect("symbols are attached");
            assessment_lines(&mut report, &run.assessment);
            report.complexities(&run.reconstruction);
            report.transitions(machine);
            write_file(&args.out, "machine.dot", export_dot(machine).as_bytes())?;
        }
    }
    report.kv("trials", args.trials);
    report.kv("mean_recurrent_states", recurrent_total as f64 / args.trials as f64);
    write_file(&args.out, "report.txt", report.text().as_bytes())?;
    print!("{}", report.text());
    Ok(())
}

fn reconstruct_cmd(args: &ReconstructArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.input)?;
    let series = parse_symbol_series(&text)?;
    let (_, rec, assessment) = reconstruct_series(
        &series.codes,
        args.window,
        MatchSpec::chi_square(args.machine.alpha)?,
        Determinism {
            theta: args.machine.theta,
            max_iter: args.machine.max_iter,
        },
    )?;
    fs::create_dir_all(&args.out)?;
    let machine = rec.machine.as_ref().expect("symbols are attached");
    let mut report = Report::default();
    report.kv("command", "reconstruct");
    report.kv("input", args.input.display()).kv("length", series.codes.len());
    report.kv("alphabet", series.alphabet.join(" "));
    report.kv("L", args.window);
    report.kv("recurrent_states", assessment.recurrent.len());
    report.kv(
        "recurrent",
        assessment.recurrent.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "),
    );
    if series.alphabet.len() == 2 {
        report.kv("even_structure", assessment.structurally_correct);
    }
    report.complexities(&rec);
    report.transitions(machine);
    write_file(&args.out, "machine.dot", export_dot(machine).as_bytes())?;
    write_file(&args.out, "report.txt", report.text().as_bytes())?;
    print!("{}", report.text());
    Ok(())
}

fn ca_cmd(args: &CaArgs) -> Result<(), CliError> {
    let run = ca_filter(&CaConfig {
        rule: args.rule,
        width: args.width,
        steps: args.steps,
        drop: args.drop,
        d_past: args.past,
        d_future: args.future,
        seed: args.seed,
    })?;
    fs::create_dir_all(&args.out)?;
    let mode = RenderMode::from(args.render);
    write_image(&args.out, "cells.pgm", &eca_to_image(&run.field))?;
    write_field(&args.out, "statistical", &run.statistical, mode)?;
    write_field(&args.out, "iso-utility", &run.iso_utility, mode)?;
    write_field(&args.out, "iso-prediction", &run.iso_prediction, mode)?;
    let mut report = Report::default();
    report.kv("command", "ca-filter");
    report.kv("rule", args.rule).kv("width", args.width).kv("steps", args.steps);
    report.kv("drop", args.drop).kv("past", args.past).kv("future", args.future);
    report.kv("seed", args.seed);
    report.kv("observations", run.cones.observations.len());
    report.complexities(&run.reconstruction);
    write_file(&args.out, "report.txt", report.text().as_bytes())?;
    print!("{}", report.text());
    Ok(())
}

fn image_cmd(args: &ImageArgs) -> Result<(), CliError> {
    let file = fs::File::open(&args.input)?;
    let mut img = read_pgm(std::io::BufReader::new(file))?;
    if let Some((x, y, w, h)) = args.crop {
        img = img.crop(x, y, w, h)?;
    }
    let run = image_filter(
        &img,
        &ImageFilterConfig {
            bandwidth: args.bandwidth,
            tau: args.tau,
            delta: args.delta,
            cutoff: args.cutoff,
            preprocess: match args.preprocess {
                PreprocessArg::None => Preprocess::None,
                PreprocessArg::SubtractMin => Preprocess::SubtractMin,
            },
        },
    )?;
    fs::create_dir_all(&args.out)?;
    write_field(&args.out, "decisional", &run.decisional, args.render.into())?;
    let mut report = Report::default();
    report.kv("command", "image-filter");
    report.kv("input", args.input.display());
    report.kv("width", img.width()).kv("height", img.height());
    report.kv("h", args.bandwidth).kv("tau", args.tau).kv("delta", args.delta);
    report.kv("observations", run.pairs.observations.len());
    report.complexities(&run.reconstruction);
    write_file(&args.out, "report.txt", report.text().as_bytes())?;
    print!("{}", report.text());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    match &cli.command {
        Command::EvenProcess(a) => even_process(a),
        Command::Reconstruct(a) => reconstruct_cmd(a),
        Command::CaFilter(a) => ca_cmd(a),
        Command::ImageFilter(a) => image_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
