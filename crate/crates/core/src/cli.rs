//! The `mdtree` command line.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 map not realizable,
//! 4 below the uniqueness threshold without `--force`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::counterexample::{build_counterexample, random_weights, verify_pair};
use crate::error::{Error, Result};
use crate::mdissim::{check_necessary_conditions, compute_mmap, trop_membership, ConditionReport, MMap};
use crate::mmap_io::{read_mmap, write_mmap, AnyMMap};
use crate::newick::{parse_newick, write_newick};
use crate::reconstruct::{reconstruct, ReconstructOptions};
use crate::robust::perturbation_trial;
use crate::scalar::{Rational, Scalar, ScalarMode, DEFAULT_TOL};
use crate::tropical::{plucker_minors, plucker_residuals, random_source, verify_minor_factorization, LiftForm, LiftedMatrix};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_REALIZABLE: i32 = 3;
pub const EXIT_BELOW_THRESHOLD: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "mdtree", version, about = "Subtree-weight maps of weighted trees")]
struct Cli {
    /// Worker threads for map computation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<u32>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the m-map of a Newick tree.
    Weights {
        #[arg(long)]
        tree: PathBuf,
        #[arg(short)]
        m: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Rebuild the tree from an m-map.
    Reconstruct {
        #[arg(long)]
        map: PathBuf,
        /// Run even when n < 2m-1 (the result is then not unique).
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Test the quartet conditions every tree-derived map satisfies.
    Check {
        #[arg(long)]
        map: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Write two different trees on 2m-2 leaves that share one m-map.
    Counterexample {
        #[arg(short)]
        m: usize,
        /// Random weights in [1, 10] instead of primes.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Recover topologies from noisy maps.
    Perturb {
        #[arg(long)]
        tree: PathBuf,
        #[arg(short)]
        m: usize,
        #[arg(long)]
        delta_frac: f64,
        #[arg(long, default_value_t = 100)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Minor factorization and Plücker residuals of lifted random matrices.
    Lift {
        /// Number of columns.
        #[arg(short)]
        n: usize,
        /// First seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of seeds.
        #[arg(long, default_value_t = 100)]
        trials: u32,
        /// Third row of the lift: veronese (y²) or printed (y).
        #[arg(long, default_value = "veronese", value_parser = parse_form)]
        form: LiftForm,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Output path (file, or directory for `counterexample`); stdout if absent.
    #[arg(short)]
    o: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<ScalarMode>,
    /// Absolute tolerance for float comparisons.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

fn parse_mode(text: &str) -> std::result::Result<ScalarMode, String> {
    ScalarMode::parse(text).ok_or_else(|| format!("expected `exact` or `float`, got `{text}`"))
}

fn parse_form(text: &str) -> std::result::Result<LiftForm, String> {
    LiftForm::parse(text).ok_or_else(|| format!("expected `veronese` or `printed`, got `{text}`"))
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(t) = cli.threads {
        configure_threads(t);
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotRealizable(_) => EXIT_NOT_REALIZABLE,
        Error::BelowThreshold { .. } => EXIT_BELOW_THRESHOLD,
        _ => EXIT_INPUT,
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(t: u32) {
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(t as usize)
        .build_global();
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(_: u32) {}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Weights { tree, m, common } => {
            let text = read(&tree)?;
            let out = match common.mode.unwrap_or(ScalarMode::Exact) {
                ScalarMode::Exact => weights::<Rational>(&text, m)?,
                ScalarMode::Float => weights::<f64>(&text, m)?,
            };
            emit(common.o.as_deref(), &out)?;
            Ok(EXIT_OK)
        }
        Command::Reconstruct { map, force, common } => {
            let map = read_mmap(&read(&map)?)?;
            let options = ReconstructOptions {
                tol: common.tol,
                force,
            };
            let out = match (map, common.mode) {
                (AnyMMap::Exact(m), None | Some(ScalarMode::Exact)) => rebuild(&m, &options)?,
                (AnyMMap::Float(m), None | Some(ScalarMode::Float)) => rebuild(&m, &options)?,
                (AnyMMap::Exact(m), Some(ScalarMode::Float)) => rebuild(&m.map_values(|v| v.to_f64()), &options)?,
                (AnyMMap::Float(m), Some(ScalarMode::Exact)) => {
                    let exact = m.map_values(|v| Rational::from_f64(*v).expect("finite values"));
                    rebuild(&exact, &options)?
                }
            };
            emit(common.o.as_deref(), &out)?;
            Ok(EXIT_OK)
        }
        Command::Check { map, common } => {
            let (out, ok) = match read_mmap(&read(&map)?)? {
                AnyMMap::Exact(m) => check(&m, common.tol),
                AnyMMap::Float(m) => check(&m, common.tol),
            };
            emit(common.o.as_deref(), &out)?;
            Ok(if ok { EXIT_OK } else { EXIT_NOT_REALIZABLE })
        }
        Command::Counterexample { m, seed, common } => {
            let dir = common
                .o
                .ok_or_else(|| Error::InvalidArgument("counterexample needs an output directory (-o)".into()))?;
            let summary = match common.mode.unwrap_or(ScalarMode::Exact) {
                ScalarMode::Exact => counterexample::<Rational>(m, seed, &dir)?,
                ScalarMode::Float => counterexample::<f64>(m, seed, &dir)?,
            };
            print!("{summary}");
            Ok(EXIT_OK)
        }
        Command::Perturb {
            tree,
            m,
            delta_frac,
            trials,
            seed,
            common,
        } => {
            let tree = parse_newick::<f64>(&read(&tree)?)?;
            let r = perturbation_trial(&tree, m, delta_frac, seed, trials as usize, common.tol)?;
            let out = format!(
                "trials\tidentical\tsuccess_rate\tmax_weight_error\n{}\t{}\t{}\t{:e}\n",
                r.trials, r.identical_topology, r.success_rate, r.max_weight_error
            );
            emit(common.o.as_deref(), &out)?;
            Ok(EXIT_OK)
        }
        Command::Lift {
            n,
            seed,
            trials,
            form,
            common,
        } => {
            let out = match common.mode.unwrap_or(ScalarMode::Float) {
                ScalarMode::Exact => lift::<Rational>(n, seed, trials, form)?,
                ScalarMode::Float => lift::<f64>(n, seed, trials, form)?,
            };
            emit(common.o.as_deref(), &out)?;
            Ok(EXIT_OK)
        }
    }
}

fn weights<S: Scalar>(text: &str, m: usize) -> Result<String> {
    let tree = parse_newick::<S>(text)?;
    write_mmap(&compute_mmap(&tree, m)?)
}

fn rebuild<S: Scalar>(map: &MMap<S>, options: &ReconstructOptions) -> Result<String> {
    let res = reconstruct(map, options)?;
    if res.stats.non_unique {
        eprintln!(
            "warning: n={} is below 2m-1={}; other trees may share this map",
            map.n(),
            2 * map.m() - 1
        );
    }
    eprintln!(
        "quartet queries: {}, R candidates: {}, topology: {:?}, weights: {:?}",
        res.stats.quartet_queries,
        res.stats.r_candidates_scanned,
        res.stats.topology_time,
        res.stats.weights_time
    );
    Ok(format!("{}\n", write_newick(&res.tree)))
}

fn report_lines<S: Scalar>(title: &str, report: &ConditionReport<S>, out: &mut String) {
    let verdict = if report.passed { "PASS" } else { "FAIL" };
    out.push_str(&format!(
        "{title}\t{verdict}\tchecked={}\tviolations={}\n",
        report.checked,
        report.violations.len()
    ));
    if let Some(v) = report.violations.first() {
        out.push_str(&format!("first witness\t{v}\n"));
    }
}

fn check<S: Scalar>(map: &MMap<S>, tol: f64) -> (String, bool) {
    let mut out = String::new();
    let necessary = check_necessary_conditions(map, tol);
    let title = if map.m() == 2 { "four-point condition" } else { "quartet conditions" };
    report_lines(title, &necessary, &mut out);
    let trop = trop_membership(map, tol);
    report_lines("tropical membership", &trop, &mut out);
    (out, necessary.passed)
}

fn counterexample<S: Scalar>(m: usize, seed: Option<u64>, dir: &Path) -> Result<String> {
    let weights = seed.map(|s| random_weights::<S>(m, s));
    let pair = build_counterexample(m, weights)?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("T.nwk"), format!("{}\n", write_newick(&pair.t)))?;
    fs::write(dir.join("Tprime.nwk"), format!("{}\n", write_newick(&pair.t_prime)))?;
    let a = compute_mmap(&pair.t, m)?;
    let b = compute_mmap(&pair.t_prime, m)?;
    fs::write(dir.join("map.tsv"), write_mmap(&a)?)?;
    let yes_no = |b: bool| if b { "yes" } else { "no" };
    Ok(format!(
        "m={m} n={}\nm-maps equal: {}\nedge sets correspond: {}\nsame topology: {}\n",
        pair.leaf_count(),
        yes_no(a == b),
        yes_no(verify_pair(&pair)),
        yes_no(pair.t.same_topology(&pair.t_prime))
    ))
}

fn lift<S: Scalar>(n: usize, seed: u64, trials: u32, form: LiftForm) -> Result<String> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("lift needs n >= 3, got {n}")));
    }
    let mut out = format!("#lift n={n} form={} mode={}\nseed\tfactorization\tplucker\n", form.as_str(), S::MODE);
    let (mut worst_f, mut worst_p) = (0.0f64, 0.0f64);
    for s in seed..seed + trials as u64 {
        let x = random_source::<S>(n, s);
        let f = verify_minor_factorization(&x, form)?;
        let lifted = LiftedMatrix::new(x, form)?;
        worst_f = worst_f.max(f);
        let p_text = if n >= 5 {
            let p = plucker_residuals(&plucker_minors(&lifted.lifted)?, n).max_relative_residual;
            worst_p = worst_p.max(p);
            format!("{p:e}")
        } else {
            "NA".into()
        };
        out.push_str(&format!("{s}\t{f:e}\t{p_text}\n"));
    }
    let p_text = if n >= 5 { format!("{worst_p:e}") } else { "NA".into() };
    out.push_str(&format!("max\t{worst_f:e}\t{p_text}\n"));
    Ok(out)
}
