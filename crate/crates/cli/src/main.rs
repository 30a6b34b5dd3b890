mod deployment;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dualthresh::analysis::{
    collusion_experiment, forgery_experiment, impersonation_experiment, tamper_experiment, wrong_key_experiment,
    ExperimentReport, ForgeryStrategy, Testbed,
};
use dualthresh::group_math::{generate_params, validate_params};
use dualthresh::protocol::{Scheduler, Transcript};
use dualthresh::worked_example as fx;
use dualthresh::{
    deploy_random, distribute_setup, replay_transcript, run_signing_session, run_verification_session, BigUint,
    DeploymentShape, Error, GroupParams, ParamSize, Profile, SessionConfig, SignatureBundle,
};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use deployment::{read_json, write_json, Deployment};
use output::{Format, Out};

#[derive(Parser)]
#[command(
    name = "dualthresh",
    version,
    about = "Threshold signing with threshold verification, simulated"
)]
struct Cli {
    /// Output style.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Log protocol diagnostics to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or check group parameters.
    GenParams(GenParams),
    /// Set up both organizations and write a deployment directory.
    Setup(Setup),
    /// Run a signing session and write the bundle.
    Sign(Sign),
    /// Run a verification session on a bundle.
    Verify(Verify),
    /// Recompute the built-in worked example and check every value.
    DemoPaper(DemoPaper),
    /// Run an attack experiment and report its success count.
    Attack(Attack),
    /// Check a transcript's hash chain and recompute its derived values.
    Replay(Replay),
}

#[derive(Args)]
struct GenParams {
    /// Size class: `full` (512/160 bits, the default when generating) or `test`.
    #[arg(long)]
    profile: Option<Profile>,
    /// Literal modulus; requires --q and --g.
    #[arg(long, requires_all = ["q", "g"])]
    p: Option<String>,
    #[arg(long, requires_all = ["p", "g"])]
    q: Option<String>,
    #[arg(long, requires_all = ["p", "q"])]
    g: Option<String>,
    /// Modulus size for generated test parameters.
    #[arg(long, default_value_t = 128)]
    p_bits: u64,
    /// Subgroup order size for generated test parameters.
    #[arg(long, default_value_t = 64)]
    q_bits: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the parameters to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Setup {
    /// Parameters file; defaults to p=47, q=23, g=2.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Deployment directory to create.
    #[arg(long)]
    out: PathBuf,
    /// Sender roster size.
    #[arg(long, default_value_t = 7)]
    n: usize,
    /// Signing threshold.
    #[arg(long, default_value_t = 4)]
    t: usize,
    /// Recipient roster size.
    #[arg(long, default_value_t = 6)]
    l: usize,
    /// Verification threshold.
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Use the built-in worked example instead of random polynomials and keys.
    #[arg(long, conflicts_with_all = ["params", "n", "t", "l", "k", "seed"])]
    fixture: bool,
}

#[derive(Args)]
struct SessionFiles {
    /// Session config file.
    #[arg(long)]
    config: PathBuf,
    /// Write the full transcript here.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Write the redacted public transcript here.
    #[arg(long)]
    public_transcript: Option<PathBuf>,
    /// Run each party on its own thread.
    #[arg(long)]
    threaded: bool,
}

#[derive(Args)]
struct Sign {
    #[command(flatten)]
    files: SessionFiles,
    /// Message file, or the message itself if no such file exists.
    #[arg(long)]
    message: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Bundle output file.
    #[arg(long, default_value = "bundle.json")]
    out: PathBuf,
}

#[derive(Args)]
struct Verify {
    #[command(flatten)]
    files: SessionFiles,
    #[arg(long)]
    bundle: PathBuf,
}

#[derive(Args)]
struct DemoPaper {
    /// Also write the example as a deployment plus session config into this directory.
    #[arg(long)]
    emit_config: Option<PathBuf>,
    /// Override one expected value, `NAME=VALUE` (harness self-test).
    #[arg(long, hide = true)]
    expect: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Impersonation,
    Forgery,
    Tamper,
    WrongKey,
    Collusion,
}

#[derive(Args)]
struct Attack {
    #[arg(long, value_enum)]
    experiment: Experiment,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Forgery strategy: pick-rr-first or pick-both-first.
    #[arg(long, default_value = "pick-rr-first")]
    strategy: ForgeryStrategy,
    /// Give the adversary the missing secret (share or sender key).
    #[arg(long)]
    control: bool,
    /// Parameters file; defaults to p=47, q=23, g=2.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Replay {
    #[arg(long)]
    transcript: PathBuf,
}

/// How a command ended, mapped onto the exit code.
enum Failure {
    /// Exit 1: a well-formed input that does not check out.
    Invalid(String),
    /// Exit 2: bad flags or unreadable input.
    Usage(anyhow::Error),
    /// Exit 3: the protocol or the program itself failed.
    Internal(anyhow::Error),
}

type CmdResult = Result<(), Failure>;

trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn internal(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn internal(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Internal(e.into()))
    }
}

fn rng(seed: Option<u64>) -> ChaCha20Rng {
    match seed {
        Some(seed) => ChaCha20Rng::seed_from_u64(seed),
        None => ChaCha20Rng::from_entropy(),
    }
}

fn load_params(path: Option<&Path>) -> Result<GroupParams, Failure> {
    match path {
        Some(path) => read_json(path).usage(),
        None => Ok(fx::params()),
    }
}

fn parse_int(name: &str, text: &str) -> Result<BigUint, Failure> {
    dualthresh::decimal::parse(text).map_err(|e| Failure::Usage(anyhow!("--{name}: {e}")))
}

fn gen_params(out: &Out, args: GenParams) -> CmdResult {
    let params = match (&args.p, &args.q, &args.g) {
        (Some(p), Some(q), Some(g)) => {
            let params = GroupParams::new_unchecked(
                parse_int("p", p)?,
                parse_int("q", q)?,
                parse_int("g", g)?,
                args.profile.unwrap_or(Profile::Test),
            );
            let report = validate_params(&params);
            for check in &report.checks {
                out.emit(
                    "check",
                    serde_json::json!({ "name": check.name, "passed": check.passed }),
                );
            }
            if !report.is_valid() {
                return Err(Failure::Invalid(format!(
                    "parameters fail: {}",
                    report.failures().join(", ")
                )));
            }
            params
        }
        _ => {
            let size = match args.profile.unwrap_or(Profile::Full) {
                Profile::Full => ParamSize::FULL,
                Profile::Test => ParamSize {
                    p_bits: args.p_bits,
                    q_bits: args.q_bits,
                },
            };
            if size.q_bits < 2 || size.p_bits <= size.q_bits {
                return Err(Failure::Usage(anyhow!("need p-bits > q-bits >= 2")));
            }
            generate_params(size, &mut rng(args.seed)).internal()?
        }
    };
    if let Some(path) = &args.out {
        write_json(path, &params).usage()?;
    }
    out.emit("params", &params);
    Ok(())
}

fn setup(out: &Out, args: Setup) -> CmdResult {
    let (ctc, keys) = if args.fixture {
        fx::deployment().internal()?
    } else {
        let params = load_params(args.params.as_deref())?;
        let shape = DeploymentShape {
            n: args.n,
            t: args.t,
            l: args.l,
            k: args.k,
        };
        if !(1 <= shape.t && shape.t <= shape.n && 1 <= shape.k && shape.k <= shape.l) {
            return Err(Failure::Usage(anyhow!("need 1 <= t <= n and 1 <= k <= l")));
        }
        deploy_random(&params, shape, &mut rng(args.seed)).map_err(|e| match e {
            Error::SearchExhausted(_) => Failure::Usage(anyhow!(
                "q is too small for {} distinct member ids",
                shape.n.max(shape.l)
            )),
            other => Failure::Internal(other.into()),
        })?
    };
    let mut deployment = Deployment::create(&args.out, ctc, keys).usage()?;
    let transcript = distribute_setup(&mut deployment.ctc);
    fs::write(args.out.join("setup-transcript.jsonl"), transcript.to_jsonl()).usage()?;
    deployment.save_center().usage()?;
    let public = deployment.public();
    out.emit(
        "setup",
        serde_json::json!({
            "dir": args.out.display().to_string(),
            "y_S": public.y_s,
            "y_R": public.y_r,
            "W": public.w,
            "t": public.sender.threshold,
            "n": public.sender.roster.len(),
            "k": public.recipient.threshold,
            "l": public.recipient.roster.len(),
        }),
    );
    Ok(())
}

/// A session config file: the deployment it runs against plus the session choices.
#[derive(Serialize, Deserialize)]
struct ConfigFile {
    /// Deployment directory, relative to the config file.
    deployment: PathBuf,
    #[serde(flatten)]
    session: SessionConfig,
}

fn load_session(files: &SessionFiles) -> Result<(Deployment, SessionConfig), Failure> {
    let config: ConfigFile = read_json(&files.config).usage()?;
    let base = files.config.parent().unwrap_or(Path::new("."));
    let deployment = Deployment::load(&base.join(&config.deployment)).usage()?;
    let mut session = config.session;
    if files.threaded {
        session.scheduler = Scheduler::Threaded;
    }
    let ctc = &deployment.ctc;
    ctc.sender().check_subset(&session.signers, "signers").usage()?;
    ctc.recipient().check_subset(&session.verifiers, "verifiers").usage()?;
    ctc.recipient().member(&session.combiner).usage()?;
    Ok((deployment, session))
}

fn write_transcripts(files: &SessionFiles, transcript: &Transcript) -> CmdResult {
    if let Some(path) = &files.transcript {
        fs::write(path, transcript.to_jsonl())
            .with_context(|| format!("cannot write {}", path.display()))
            .usage()?;
    }
    if let Some(path) = &files.public_transcript {
        fs::write(path, transcript.public().to_jsonl())
            .with_context(|| format!("cannot write {}", path.display()))
            .usage()?;
    }
    Ok(())
}

fn read_message(arg: &str) -> Result<Vec<u8>, Failure> {
    let path = Path::new(arg);
    if path.is_file() {
        fs::read(path).with_context(|| format!("cannot read {arg}")).usage()
    } else {
        Ok(arg.as_bytes().to_vec())
    }
}

fn sign(out: &Out, args: Sign) -> CmdResult {
    let (mut deployment, mut session) = load_session(&args.files)?;
    if args.seed.is_some() {
        session.seed = args.seed;
    }
    let message = read_message(&args.message)?;
    let outcome = run_signing_session(&mut deployment.ctc, &deployment.keys, &session, &message).internal()?;
    write_json(&args.out, &outcome.bundle).usage()?;
    deployment.append_ledger(&outcome.record).internal()?;
    deployment.save_center().internal()?;
    write_transcripts(&args.files, &outcome.transcript)?;
    out.emit("bundle", &outcome.bundle);
    Ok(())
}

fn verify(out: &Out, args: Verify) -> CmdResult {
    let (mut deployment, session) = load_session(&args.files)?;
    let bundle: SignatureBundle = read_json(&args.bundle).usage()?;
    let outcome = run_verification_session(&mut deployment.ctc, &deployment.keys, &session, &bundle).internal()?;
    deployment.save_center().internal()?;
    write_transcripts(&args.files, &outcome.transcript)?;
    out.emit("verdict", &outcome.verdict);
    if outcome.verdict.valid {
        Ok(())
    } else {
        Err(Failure::Invalid("signature is invalid".into()))
    }
}

fn emit_fixture_config(dir: &Path) -> anyhow::Result<()> {
    let (ctc, keys) = fx::deployment()?;
    let mut deployment = Deployment::create(&dir.join("deployment"), ctc, keys)?;
    let transcript = distribute_setup(&mut deployment.ctc);
    fs::write(dir.join("deployment/setup-transcript.jsonl"), transcript.to_jsonl())?;
    deployment.save_center()?;
    let config = ConfigFile {
        deployment: PathBuf::from("deployment"),
        session: fx::session_config(&deployment.ctc),
    };
    write_json(&dir.join("session.json"), &config)?;
    fs::write(dir.join("message.txt"), fx::MESSAGE)?;
    Ok(())
}

fn demo_paper(out: &Out, args: DemoPaper) -> CmdResult {
    let mut expected: Vec<(String, String)> = fx::EXPECTED
        .iter()
        .map(|(n, v)| (n.to_string(), v.to_string()))
        .collect();
    for item in &args.expect {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| Failure::Usage(anyhow!("--expect takes NAME=VALUE")))?;
        let slot = expected
            .iter_mut()
            .find(|(n, _)| n == name)
            .ok_or_else(|| Failure::Usage(anyhow!("no traced value named {name}")))?;
        slot.1 = value.to_string();
    }
    let trace = fx::trace().internal()?;
    for (name, value) in &trace {
        out.value(name, value);
    }
    let borrowed: Vec<(&str, &str)> = expected.iter().map(|(n, v)| (n.as_str(), v.as_str())).collect();
    if let Some((name, want, got)) = fx::first_mismatch(&borrowed, &trace) {
        return Err(Failure::Internal(anyhow!("{name}: expected {want}, computed {got}")));
    }
    if let Some(dir) = &args.emit_config {
        emit_fixture_config(dir).usage()?;
    }
    out.emit(
        "summary",
        serde_json::json!({ "checked": trace.len(), "mismatches": 0 }),
    );
    Ok(())
}

fn attack(out: &Out, args: Attack) -> CmdResult {
    let params = load_params(args.params.as_deref())?;
    let mut rng = rng(args.seed);
    let run = |rng: &mut ChaCha20Rng| -> dualthresh::Result<ExperimentReport> {
        match args.experiment {
            Experiment::WrongKey => wrong_key_experiment(&params, args.trials, rng),
            Experiment::Collusion => {
                collusion_experiment(&params, DeploymentShape { n: 5, t: 3, l: 4, k: 2 }, args.trials, rng)
            }
            experiment => {
                let bed = Testbed::small(&params, rng)?;
                match experiment {
                    Experiment::Impersonation => impersonation_experiment(&bed, args.trials, args.control, rng),
                    Experiment::Forgery => {
                        let x_s = bed.ctc.sender().polynomial().secret().clone();
                        let key = args.control.then_some(&x_s);
                        forgery_experiment(&bed, args.trials, args.strategy, key, rng)
                    }
                    _ => tamper_experiment(&bed, args.trials, rng),
                }
            }
        }
    };
    let report = run(&mut rng).map_err(|e| match e {
        Error::SearchExhausted(_) => Failure::Usage(anyhow!("q is too small for the experiment's roster")),
        other => Failure::Internal(other.into()),
    })?;
    out.emit("report", &report);
    if report.within_interval() {
        Ok(())
    } else {
        Err(Failure::Invalid(format!(
            "{} successes outside [{}, {}]",
            report.successes, report.interval[0], report.interval[1]
        )))
    }
}

fn replay(out: &Out, args: Replay) -> CmdResult {
    let text = fs::read_to_string(&args.transcript)
        .with_context(|| format!("cannot read {}", args.transcript.display()))
        .usage()?;
    let outcome = replay_transcript(&text).map_err(|e| match e {
        Error::Tampered(_) | Error::ReplayMismatch(_) | Error::VersionMismatch { .. } => {
            Failure::Invalid(e.to_string())
        }
        Error::Malformed(_) | Error::Empty(_) => Failure::Usage(e.into()),
        other => Failure::Internal(other.into()),
    })?;
    out.emit(
        "replay",
        serde_json::json!({
            "session": outcome.session,
            "messages": outcome.messages,
            "bundle": outcome.bundle,
            "verdict": outcome.verdict,
            "signature_valid": outcome.signature_valid,
        }),
    );
    if outcome.signature_valid == Some(false) || outcome.verdict.as_ref().is_some_and(|v| !v.valid) {
        return Err(Failure::Invalid("recorded session does not verify".into()));
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    let out = Out::new(cli.format);
    match cli.command {
        Command::GenParams(args) => gen_params(&out, args),
        Command::Setup(args) => setup(&out, args),
        Command::Sign(args) => sign(&out, args),
        Command::Verify(args) => verify(&out, args),
        Command::DemoPaper(args) => demo_paper(&out, args),
        Command::Attack(args) => attack(&out, args),
        Command::Replay(args) => replay(&out, args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Debug
        } else {
            log::LevelFilter::Warn
        })
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("invalid: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(3)
        }
    }
}
