use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, Read, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::Context;
use chrono::Utc;
use scanline39::auth::{
    authenticate, load_db, parse_log, AuditLog, AuthOutcome, GateOutcome, GateSnapshot, LogEntry,
    PasswordGate,
};
use scanline39::channel::Channel;
use scanline39::code39::{encode_card, Pattern36, DIGIT_ELEMENTS};
use scanline39::decode::decode_stream_with;
use scanline39::experiment::{self, Execution, ExperimentSpec};
use scanline39::scanline::synthesize;
use scanline39::{CardCode, SymbolStream};

use crate::{Command, ExperimentArgs, GateAction, GateArgs, LinkArgs, ScanArgs};

pub fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Encode { code } => {
            print!("{}", render_encode(code));
            Ok(ExitCode::SUCCESS)
        }
        Command::Scan { code, scan, link } => {
            print!("{}", transmit(code, &scan, &link)?.to_line());
            Ok(ExitCode::SUCCESS)
        }
        Command::Decode {
            file,
            decode,
            record,
        } => {
            let mut text = String::new();
            match file {
                Some(path) => File::open(&path)
                    .with_context(|| format!("opening {}", path.display()))?
                    .read_to_string(&mut text)?,
                None => io::stdin().read_to_string(&mut text)?,
            };
            let stream: SymbolStream = text.parse()?;
            let report = decode_stream_with(&stream, &decode.options());
            if record {
                println!("{}", report.to_record());
            } else {
                println!("{report}");
            }
            Ok(exit_status(report.is_success()))
        }
        Command::Pipeline {
            code,
            db,
            log,
            success_only_log,
            scan,
            link,
            decode,
        } => {
            let db = load_db(BufReader::new(
                File::open(&db).with_context(|| format!("opening {}", db.display()))?,
            ))
            .with_context(|| format!("loading {}", db.display()))?;
            let received = transmit(code, &scan, &link)?;
            let report = decode_stream_with(&received, &decode.options());
            println!("{report}");
            let Some(decoded) = report.card else {
                println!("REJECT (decode failed: {})", report.failure);
                return Ok(ExitCode::from(1));
            };
            let outcome = authenticate(decoded, &db);
            if let Some(path) = log {
                let entry = LogEntry::for_outcome(Utc::now(), decoded, &outcome);
                append_audit(&path, &entry, !success_only_log)?;
            }
            match outcome {
                AuthOutcome::Accept(name) => {
                    println!("ACCEPT {name}");
                    Ok(ExitCode::SUCCESS)
                }
                AuthOutcome::Reject => {
                    println!("REJECT {decoded}");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Experiment(args) => run_experiment(args),
        Command::Gate(args) => run_gate(args),
    }
}

fn exit_status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

/// Scan with jitter seed `seed`, then corrupt with channel seed `seed + 1`.
fn transmit(code: CardCode, scan: &ScanArgs, link: &LinkArgs) -> anyhow::Result<SymbolStream> {
    let cfg = scan.config(link.seed)?;
    let clean = synthesize(&encode_card(code), &cfg);
    let channel = Channel::new(link.flip_prob())?.with_burst(link.burst);
    Ok(channel.corrupt(&clean, link.seed.wrapping_add(1)))
}

fn render_encode(code: CardCode) -> String {
    let pattern = encode_card(code);
    let groups: Vec<String> = pattern
        .groups()
        .map(|g| g.iter().map(|&w| if w { '1' } else { '0' }).collect())
        .collect();
    let bars = ascii_bars(&pattern);
    let mut out = format!("code:     {code}\nelements: {}\n", groups.join(" "));
    for _ in 0..3 {
        out.push_str(&format!("          {bars}\n"));
    }
    out
}

/// `#` for bars, blank for spaces; narrow is one column, wide is three.
fn ascii_bars(pattern: &Pattern36) -> String {
    pattern
        .elements()
        .iter()
        .enumerate()
        .map(|(i, &wide)| {
            let c = if (i % DIGIT_ELEMENTS).is_multiple_of(2) {
                "#"
            } else {
                " "
            };
            c.repeat(if wide { 3 } else { 1 })
        })
        .collect::<String>()
        .trim_end()
        .to_string()
}

fn append_audit(path: &Path, entry: &LogEntry, log_denied: bool) -> anyhow::Result<()> {
    let last = match File::open(path) {
        Ok(f) => parse_log(BufReader::new(f))
            .with_context(|| format!("reading {}", path.display()))?
            .last()
            .map(|e| e.timestamp),
        Err(e) if e.kind() == io::ErrorKind::NotFound => None,
        Err(e) => return Err(e).with_context(|| format!("opening {}", path.display())),
    };
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut log = AuditLog::new(file, last).log_denied(log_denied);
    log.record(entry)?;
    log.into_inner().flush()?;
    Ok(())
}

fn run_experiment(args: ExperimentArgs) -> anyhow::Result<ExitCode> {
    let flip_probs = if !args.flip_prob.is_empty() {
        args.flip_prob
    } else if !args.channel.is_empty() {
        args.channel.iter().map(|c| c.flip_prob()).collect()
    } else {
        ExperimentSpec::default().flip_probs
    };
    let spec = ExperimentSpec {
        flip_probs,
        corrections: args.correction,
        trials: args.trials,
        scan: args.scan.config(0)?,
        base_seed: args.seed,
        code: args.code,
        strict: !args.lenient,
        burst: args.burst,
    };
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let rows = experiment::run_experiment_with(&spec, exec)?;
    if args.table {
        print!("{}", experiment::to_table(&rows));
    } else {
        print!("{}", experiment::to_csv(&rows));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_gate(args: GateArgs) -> anyhow::Result<ExitCode> {
    let snapshot = match fs::read_to_string(&args.state) {
        Ok(text) => text
            .parse::<GateSnapshot>()
            .map_err(anyhow::Error::msg)
            .with_context(|| format!("reading {}", args.state.display()))?,
        Err(e) if e.kind() == io::ErrorKind::NotFound => GateSnapshot::default(),
        Err(e) => return Err(e).with_context(|| format!("opening {}", args.state.display())),
    };
    let mut gate = PasswordGate::restore(args.device_password, args.factory_code, snapshot);
    let ok = match &args.action {
        GateAction::Attempt { password } => {
            let outcome = gate.password_attempt(password);
            println!("outcome: {outcome}");
            outcome == GateOutcome::Granted
        }
        GateAction::Reset { code } => {
            let ok = gate.factory_reset(code);
            println!("reset: {}", if ok { "ok" } else { "rejected" });
            ok
        }
        GateAction::Status => true,
    };
    let snapshot = gate.snapshot();
    print!("{snapshot}");
    if !matches!(args.action, GateAction::Status) {
        fs::write(&args.state, snapshot.to_string())
            .with_context(|| format!("writing {}", args.state.display()))?;
    }
    Ok(exit_status(ok))
}
