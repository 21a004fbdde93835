//! Command-line front end: build presentations, query membership and the
//! definable submodules, solve endomorphism rings, and run the
//! verification suites.
//!
//! Exit codes: 0 when every check passes (or the queried predicate
//! holds), 1 when a check fails or the predicate is false or undecided,
//! 2 on usage and IO errors.

mod format;
mod suites;

use clap::{Parser, Subcommand};
use format::{
    parse_vector, presentation_from_file, presentation_to_file, report_to_file, ring_to_file,
    PresentationFile,
};
use rigid_core::construction::{
    build, control_presentation, default_scheme, designated_family, phi_eval, ConstructionParams,
    PhiVerdict,
};
use rigid_core::presentation::{Analyzer, Presentation};
use rigid_core::rigidity::{endo_ring, pairwise_noniso};
use rigid_core::separation::{parse_family, Branch, BranchFamily};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "rigid",
    about = "Finite approximations of rigid torsion-free abelian groups and their verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a presentation from a branch file and emit it as JSON.
    Build {
        #[arg(long)]
        lambda: u32,
        #[arg(long)]
        blocks: u32,
        #[arg(long)]
        depth: u32,
        /// File listing branches, one `head|period` string per line.
        #[arg(long)]
        branches: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Emit the de-mixed control instead (basis generators only).
        #[arg(long)]
        control: bool,
    },
    /// Decide membership of a vector in the presented group.
    Member {
        file: PathBuf,
        /// Vector as `sym:rational` pairs, e.g. `x.0:1/2,y.0.0:1`.
        #[arg(long)]
        vector: String,
    },
    /// Evaluate the ladder formula φ at a block and level.
    Phi {
        file: PathBuf,
        #[arg(long)]
        block: u32,
        #[arg(long)]
        epsilon: u64,
        #[arg(long)]
        vector: String,
    },
    /// Solve the endomorphism module at a depth cap and emit it.
    Endos {
        file: PathBuf,
        #[arg(long)]
        depth: u32,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run a verification suite and emit its report.
    Verify {
        file: PathBuf,
        #[arg(long)]
        suite: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Include wall-clock timings in the report (non-canonical).
        #[arg(long)]
        timings: bool,
    },
    /// Pairwise non-isomorphism over families listed in a file.
    Family {
        /// File listing families, one per line, branches comma-separated.
        #[arg(long)]
        branches: PathBuf,
        /// Compare all pairs.
        #[arg(long)]
        pairs: bool,
        #[arg(long, default_value_t = 4)]
        depth: u32,
        #[arg(long, default_value_t = 2)]
        lambda: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn read_presentation(path: &Path) -> Result<Presentation, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let file: PresentationFile =
        serde_json::from_str(&text).map_err(|e| format!("malformed presentation file: {e}"))?;
    presentation_from_file(&file).map_err(|e| e.to_string())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| format!("serialization failed: {e}"))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Build {
            lambda,
            blocks,
            depth,
            branches,
            output,
            control,
        } => {
            let text = std::fs::read_to_string(&branches)
                .map_err(|e| format!("cannot read {}: {e}", branches.display()))?;
            let members: Vec<Branch> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(|l| Branch::parse(l).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
            let family = BranchFamily::new(members).map_err(|e| e.to_string())?;
            let params = ConstructionParams::new(lambda, blocks, depth, family)
                .map_err(|e| e.to_string())?;
            let scheme = default_scheme(
                blocks,
                params.ladder_primes_needed().map_err(|e| e.to_string())?,
            );
            let mut pres = build(&params, &scheme).map_err(|e| e.to_string())?;
            if control {
                pres = control_presentation(&pres);
            }
            let file = presentation_to_file(&pres).map_err(|e| e.to_string())?;
            write_json(&output, &file)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Member { file, vector } => {
            let pres = read_presentation(&file)?;
            let v = parse_vector(&vector).map_err(|e| e.to_string())?;
            let analyzer = Analyzer::new(&pres).map_err(|e| e.to_string())?;
            let ok = analyzer.member(&v).map_err(|e| e.to_string())?;
            println!("{ok}");
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Phi {
            file,
            block,
            epsilon,
            vector,
        } => {
            let pres = read_presentation(&file)?;
            let v = parse_vector(&vector).map_err(|e| e.to_string())?;
            let analyzer = Analyzer::new(&pres).map_err(|e| e.to_string())?;
            let verdict = phi_eval(&analyzer, block, epsilon, &v).map_err(|e| e.to_string())?;
            let (text, code) = match verdict {
                PhiVerdict::Holds => ("true", ExitCode::SUCCESS),
                PhiVerdict::Fails => ("false", ExitCode::from(1)),
                PhiVerdict::Undecided { .. } => ("undecided", ExitCode::from(1)),
            };
            println!("{text}");
            Ok(code)
        }
        Command::Endos {
            file,
            depth,
            output,
        } => {
            let pres = read_presentation(&file)?;
            let analyzer = Analyzer::new(&pres).map_err(|e| e.to_string())?;
            let designated = designated_family(&pres).map_err(|e| e.to_string())?;
            let ring = endo_ring(&analyzer, &designated, depth).map_err(|e| e.to_string())?;
            let blocks = pres.meta.as_ref().map_or(1, |m| m.blocks);
            write_json(&output, &ring_to_file(&ring, blocks))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            file,
            suite,
            output,
            timings,
        } => {
            let pres = read_presentation(&file)?;
            let start = Instant::now();
            let report = suites::run_suite(&suite, &pres).map_err(|e| e.to_string())?;
            let elapsed = start.elapsed().as_millis() as u64;
            suites::print_report(&report);
            if let Some(path) = output {
                let timing = timings.then_some(elapsed);
                write_json(&path, &report_to_file(&report, timing))?;
            }
            Ok(ExitCode::from(suites::exit_code_for(&report) as u8))
        }
        Command::Family {
            branches,
            pairs,
            depth,
            lambda,
        } => {
            let text = std::fs::read_to_string(&branches)
                .map_err(|e| format!("cannot read {}: {e}", branches.display()))?;
            let families: Vec<BranchFamily> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(|l| parse_family(l).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
            if !pairs {
                return Err("family requires --pairs".into());
            }
            let mut needed = 1u32;
            let mut built = Vec::new();
            let mut params_list = Vec::new();
            for f in &families {
                let params = ConstructionParams::new(lambda, 2, depth, f.clone())
                    .map_err(|e| e.to_string())?;
                needed = needed.max(params.ladder_primes_needed().map_err(|e| e.to_string())?);
                params_list.push(params);
            }
            let scheme = default_scheme(2, needed);
            for params in &params_list {
                built.push(build(params, &scheme).map_err(|e| e.to_string())?);
            }
            let mut all_ok = true;
            for i in 0..built.len() {
                for j in (i + 1)..built.len() {
                    let ok = pairwise_noniso(&built[i], &built[j], depth)
                        .map_err(|e| e.to_string())?;
                    println!("{} {} vs {}", if ok { "noniso" } else { "ISO" }, i, j);
                    all_ok &= ok;
                }
            }
            Ok(if all_ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
