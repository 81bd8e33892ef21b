use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ise_core::analysis::{
    build_report, decrease_in_performance, export_report, rm_anova, PerformanceMatrix,
};
use ise_core::intelligibility::{sti_from_signals, stit, StiResult, StiWeights, StitParams};
use ise_core::model::{
    fit_sigmoid, predict_dp, simulate_cohort, CohortSpec, DpObservation, SigmoidParams,
};
use ise_core::signal::{
    a_weighted_level, apply_ltass, band_levels, load_wave, rms, save_wave, AudioBuffer,
    ShapingConfig, SpectrumProfile, WavEncoding, OCTAVE_CENTERS,
};
use ise_core::stimulus::{
    build_condition, rebuild_from_manifest, synth_babble, BuildConfig, SourceRef, StimulusManifest,
    StimulusSpec,
};
use ise_lab::{
    matrix_from_bundles, read_events, replay, write_condition, ExportBundle, LabService,
    SessionConfig, StimulusLibrary, SystemClock,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "ise", version, about = "Irrelevant-speech experiment toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Level and spectrum utilities for WAV files.
    #[command(subcommand)]
    Signal(SignalCmd),
    /// Stationary STI of speech against a masker.
    Sti(StiArgs),
    /// Sliding-window STI for fluctuating maskers.
    Stit {
        #[command(flatten)]
        common: StiArgs,
        #[arg(long, default_value_t = 1.0)]
        window: f64,
        #[arg(long, default_value_t = 0.25)]
        hop: f64,
    },
    /// Build a condition signal and its manifest, or verify one.
    Synth(SynthArgs),
    /// Sigmoid DP-vs-STI model.
    #[command(subcommand)]
    Model(ModelCmd),
    /// Repeated-measures ANOVA on a performance matrix.
    Anova {
        #[arg(long = "in")]
        input: PathBuf,
        /// Label of the control column.
        #[arg(long, default_value = "silence")]
        control: String,
        /// Analyse raw performance across every condition instead of DP.
        #[arg(long)]
        raw: bool,
    },
    /// Full analysis report from lab sessions or a matrix.
    Report {
        /// A session directory, or a directory of session directories.
        #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
        session: Option<PathBuf>,
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value = "silence")]
        control: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Run the lab session service.
    Serve {
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        stimuli: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Stroop trials per session.
        #[arg(long, default_value_t = 24)]
        stroop_trials: usize,
    },
}

#[derive(Subcommand)]
enum SignalCmd {
    /// Digital RMS and dBFS.
    Rms { input: PathBuf },
    /// A-weighted level and octave band levels.
    Level {
        input: PathBuf,
        /// SPL that digital RMS 1.0 maps to.
        #[arg(long, default_value_t = 100.0)]
        offset: f64,
    },
    /// Shape a signal to a long-term average speech spectrum.
    Ltass {
        input: PathBuf,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct StiArgs {
    speech: PathBuf,
    noise: PathBuf,
    /// Band weight file; defaults to the male-speech weights.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    uniform: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, required_unless_present = "verify")]
    speech: Option<PathBuf>,
    /// One file, or several talkers to mix into babble.
    #[arg(long, required_unless_present = "verify", num_args = 1..)]
    babble: Vec<PathBuf>,
    /// Number of babble talkers when several files are given.
    #[arg(long)]
    talkers: Option<usize>,
    /// Target STI; omit for the silent control.
    #[arg(long)]
    target: Option<f64>,
    #[arg(long, default_value_t = 540.0)]
    duration: f64,
    #[arg(long, default_value_t = 55.0)]
    level: f64,
    #[arg(long, default_value_t = 0.01)]
    tolerance: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rebuild from this manifest and check the output checksum.
    #[arg(long, conflicts_with = "target")]
    verify: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ModelCmd {
    Predict {
        #[arg(long, num_args = 1.., required = true)]
        sti: Vec<f64>,
        #[arg(long, default_value_t = 7.0)]
        dp_max: f64,
        #[arg(long, default_value_t = 0.45)]
        midpoint: f64,
        #[arg(long, default_value_t = 12.0)]
        slope: f64,
    },
    Fit {
        /// Table with columns sti,dp.
        #[arg(long)]
        obs: PathBuf,
    },
    Simulate {
        /// Cohort spec (JSON); defaults to the moderate-noise preset.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write_or_print(value: &impl Serialize, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            fs::write(p, serde_json::to_string_pretty(value)? + "\n")
                .with_context(|| format!("writing {}", p.display()))?;
            Ok(())
        }
        None => print_json(value),
    }
}

fn load(path: &Path) -> Result<AudioBuffer> {
    load_wave(path).with_context(|| format!("reading {}", path.display()))
}

fn load_profile(path: Option<&Path>) -> Result<SpectrumProfile> {
    match path {
        None => Ok(SpectrumProfile::default_male()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(SpectrumProfile::parse(&text)?)
        }
    }
}

fn signal(cmd: SignalCmd) -> Result<()> {
    match cmd {
        SignalCmd::Rms { input } => {
            let b = load(&input)?;
            let r = rms(&b)?;
            print_json(&serde_json::json!({
                "file": input,
                "sha256": b.checksum(),
                "samples": b.len(),
                "sample_rate": b.sample_rate(),
                "rms": r,
                "dbfs": if r > 0.0 { Some(20.0 * r.log10()) } else { None },
            }))
        }
        SignalCmd::Level { input, offset } => {
            let b = load(&input)?;
            let bands = band_levels(&b)?;
            let bands: Vec<_> = OCTAVE_CENTERS
                .iter()
                .zip(bands.iter())
                .map(|(f, l)| serde_json::json!({"center_hz": f, "level_db": l.db()}))
                .collect();
            print_json(&serde_json::json!({
                "file": input,
                "sha256": b.checksum(),
                "calibration_offset_db": offset,
                "la_db": a_weighted_level(&b, offset)?.db(),
                "bands": bands,
            }))
        }
        SignalCmd::Ltass {
            input,
            profile,
            out,
        } => {
            let b = load(&input)?;
            let shaped = apply_ltass(
                &b,
                &load_profile(profile.as_deref())?,
                &ShapingConfig::default(),
            )?;
            save_wave(&out, &shaped, WavEncoding::Float32)?;
            print_json(
                &serde_json::json!({"input": input, "output": out, "sha256": shaped.checksum()}),
            )
        }
    }
}

#[derive(Serialize)]
struct StiReport {
    schema_version: u32,
    #[serde(flatten)]
    result: StiResult,
    weights: StiWeights,
    params: Option<StitParams>,
    speech: FileRef,
    noise: FileRef,
}

#[derive(Serialize)]
struct FileRef {
    path: PathBuf,
    sha256: String,
}

fn sti_command(args: StiArgs, params: Option<StitParams>) -> Result<()> {
    let speech = load(&args.speech)?;
    let noise = load(&args.noise)?;
    let weights = match (&args.weights, args.uniform) {
        (Some(p), _) => StiWeights::parse(
            &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        )?,
        (None, true) => StiWeights::uniform(),
        (None, false) => StiWeights::default_male(),
    };
    let result = match params {
        None => sti_from_signals(&speech, &noise, &weights)?,
        Some(p) => stit(&speech, &noise, &weights, p)?,
    };
    let report = StiReport {
        schema_version: 1,
        result,
        weights,
        params,
        speech: FileRef {
            path: args.speech,
            sha256: speech.checksum(),
        },
        noise: FileRef {
            path: args.noise,
            sha256: noise.checksum(),
        },
    };
    write_or_print(&report, args.out.as_deref())
}

fn synth(args: SynthArgs) -> Result<()> {
    if let Some(manifest_path) = args.verify {
        let manifest: StimulusManifest = serde_json::from_str(
            &fs::read_to_string(&manifest_path)
                .with_context(|| format!("reading {}", manifest_path.display()))?,
        )?;
        let source = |r: &Option<SourceRef>,
                      flag: &Option<PathBuf>,
                      which: &str|
         -> Result<AudioBuffer> {
            let path = flag
                .clone()
                .or_else(|| r.as_ref().and_then(|s| s.path.clone()).map(PathBuf::from))
                .with_context(|| format!("no {which} source path in manifest; pass --{which}"))?;
            load(&path)
        };
        let speech = source(&manifest.speech_source, &args.speech, "speech")?;
        let babble = if args.babble.len() > 1 {
            let talkers: Vec<AudioBuffer> =
                args.babble.iter().map(|p| load(p)).collect::<Result<_>>()?;
            let n = args.talkers.unwrap_or(talkers.len());
            synth_babble(&talkers, n, manifest.spec.seed)?
        } else {
            source(
                &manifest.babble_source,
                &args.babble.first().cloned(),
                "babble",
            )?
        };
        let out = rebuild_from_manifest(&manifest, &speech, &babble)?;
        return print_json(&serde_json::json!({
            "manifest": manifest_path,
            "condition_id": manifest.condition_id,
            "verified": true,
            "sha256": out.checksum(),
        }));
    }
    let speech_path = args.speech.expect("required by clap");
    let speech = load(&speech_path)?;
    let (babble, babble_path) = if args.babble.len() == 1 {
        (
            load(&args.babble[0])?,
            Some(args.babble[0].display().to_string()),
        )
    } else {
        let talkers: Vec<AudioBuffer> =
            args.babble.iter().map(|p| load(p)).collect::<Result<_>>()?;
        let n = args.talkers.unwrap_or(talkers.len());
        (synth_babble(&talkers, n, args.seed)?, None)
    };
    let spec = StimulusSpec {
        target_sti: args.target,
        duration_s: args.duration,
        presentation_level_db: args.level,
        sti_tolerance: args.tolerance,
        seed: args.seed,
    };
    let config = BuildConfig {
        profile: load_profile(args.profile.as_deref())?,
        ..BuildConfig::default()
    };
    let (buffer, mut manifest) = build_condition(&speech, &babble, &spec, &config)?;
    if let Some(s) = manifest.speech_source.as_mut() {
        s.path = Some(speech_path.display().to_string());
    }
    if let Some(s) = manifest.babble_source.as_mut() {
        s.path = babble_path;
    }
    let out = args.out.unwrap_or_else(|| PathBuf::from("."));
    let (wav, json) = write_condition(&out, &manifest, &buffer)?;
    print_json(&serde_json::json!({
        "condition_id": manifest.condition_id,
        "achieved_sti": manifest.achieved_sti,
        "achieved_level_db": manifest.achieved_level_db,
        "wav": wav,
        "manifest": json,
        "sha256": manifest.output.sha256,
    }))
}

fn model(cmd: ModelCmd) -> Result<()> {
    match cmd {
        ModelCmd::Predict {
            sti,
            dp_max,
            midpoint,
            slope,
        } => {
            let params = SigmoidParams::new(dp_max, midpoint, slope)?;
            let rows: Vec<_> = sti
                .iter()
                .map(|&s| serde_json::json!({"sti": s, "dp": predict_dp(s, &params)}))
                .collect();
            print_json(&serde_json::json!({"params": params, "predictions": rows}))
        }
        ModelCmd::Fit { obs } => {
            let file =
                fs::File::open(&obs).with_context(|| format!("reading {}", obs.display()))?;
            let observations = DpObservation::read_csv(file)?;
            print_json(&fit_sigmoid(&observations)?)
        }
        ModelCmd::Simulate { spec, seed, out } => {
            let spec = match spec {
                Some(p) => serde_json::from_str(
                    &fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?,
                )
                .with_context(|| format!("parsing {}", p.display()))?,
                None => CohortSpec::moderate_noise(seed),
            };
            let matrix = simulate_cohort(&spec, &SigmoidParams::default())?;
            matrix.save(&out)?;
            print_json(
                &serde_json::json!({"spec": spec, "out": out, "subjects": matrix.subjects().len()}),
            )
        }
    }
}

fn anova(input: &Path, control: &str, raw: bool) -> Result<()> {
    let matrix = PerformanceMatrix::load(input)?;
    let result = if raw {
        rm_anova(&matrix)?
    } else {
        rm_anova(&decrease_in_performance(&matrix, control)?)?
    };
    print_json(&serde_json::json!({
        "input": input,
        "on": if raw { "performance" } else { "dp" },
        "result": result,
    }))
}

/// Closed sessions found at `dir` (a session directory or a directory of them).
fn load_bundles(dir: &Path) -> Result<Vec<ExportBundle>> {
    let mut dirs = Vec::new();
    if dir.join("events.jsonl").is_file() {
        dirs.push(dir.to_path_buf());
    } else {
        for e in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
            let p = e?.path();
            if p.join("events.jsonl").is_file() {
                dirs.push(p);
            }
        }
        dirs.sort();
    }
    let mut bundles = Vec::new();
    for d in dirs {
        let record = replay(&read_events(d.join("events.jsonl"))?)?;
        match ExportBundle::from_record(&record) {
            Ok(b) => bundles.push(b),
            Err(e) => tracing::warn!(session = %record.session_id, "skipped: {e}"),
        }
    }
    if bundles.is_empty() {
        bail!("no finished sessions under {}", dir.display());
    }
    Ok(bundles)
}

fn report(
    session: Option<&Path>,
    matrix: Option<&Path>,
    control: &str,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let m = match (session, matrix) {
        (Some(dir), _) => {
            let bundles = load_bundles(dir)?;
            fs::create_dir_all(out)?;
            fs::write(
                out.join("bundles.json"),
                serde_json::to_string_pretty(&bundles)?,
            )?;
            matrix_from_bundles(&bundles)?
        }
        (None, Some(p)) => PerformanceMatrix::load(p)?,
        (None, None) => bail!("one of --session or --matrix is required"),
    };
    let r = build_report(&m, control, seed)?;
    let files = export_report(&r, out)?;
    print_json(&serde_json::json!({
        "subjects": m.subjects().len(),
        "anova_dp": r.anova_dp,
        "files": files,
    }))
}

fn serve(
    sessions: &Path,
    stimuli: &Path,
    host: &str,
    port: u16,
    stroop_trials: usize,
) -> Result<()> {
    let library = StimulusLibrary::load(stimuli)?;
    let missing = library.missing();
    if !missing.is_empty() {
        tracing::warn!(
            ?missing,
            "stimulus library is incomplete; session creation will fail"
        );
    }
    let config = SessionConfig {
        stroop_trials,
        ..SessionConfig::default()
    };
    let service = Arc::new(LabService::open(
        sessions,
        library,
        Arc::new(SystemClock),
        config,
    )?);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port)).await?;
        ise_lab::http::serve(listener, service).await?;
        Ok(())
    })
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Signal(cmd) => signal(cmd),
        Command::Sti(args) => sti_command(args, None),
        Command::Stit {
            common,
            window,
            hop,
        } => sti_command(
            common,
            Some(StitParams {
                window_s: window,
                hop_s: hop,
            }),
        ),
        Command::Synth(args) => synth(args),
        Command::Model(cmd) => model(cmd),
        Command::Anova {
            input,
            control,
            raw,
        } => anova(&input, &control, raw),
        Command::Report {
            session,
            matrix,
            control,
            seed,
            out,
        } => report(session.as_deref(), matrix.as_deref(), &control, seed, &out),
        Command::Serve {
            sessions,
            stimuli,
            port,
            host,
            stroop_trials,
        } => serve(&sessions, &stimuli, &host, port, stroop_trials),
    }
}
