use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lpcc_cli::bench::{run_bench, store_trace, write_summary, BenchConfig};
use lpcc_cli::instance::{invqp_instance, qap_instance, qp_instance, random_instance, stqp_instance, Instance};
use lpcc_cli::methods::{run_method, Budgets, Method};
use lpcc_cli::records::{read_records, write_records, RunRecord};
use lpcc_cli::CliError;
use lpcc_core::gen::{parse_qaplib, InvQpOptions};
use lpcc_core::reform::build_full_milp;

#[derive(Parser)]
#[command(name = "lpcc", version, about = "Progressive integer programming for LPCCs and nonconvex QPs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a generated instance as JSON.
    Generate {
        #[command(subcommand)]
        family: GenFamily,
        /// Output file; stdout when omitted.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Run one method on one instance and print (or append) a CSV record.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// pip:<p_max>, fmip, fmip-w, oracle or stationary.
        #[arg(long)]
        method: String,
        #[command(flatten)]
        budgets: BudgetArgs,
        /// Write the full big-M MILP in LP format and exit.
        #[arg(long)]
        export_lp: Option<PathBuf>,
        /// Directory for records.csv and traces/; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a TOML-configured sweep.
    Bench {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild summary.tsv from a records.csv.
    Report {
        records: PathBuf,
        /// Output directory; next to the records file when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenFamily {
    Stqp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        seed: u64,
    },
    Invqp {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        sparsity: Option<f64>,
        #[arg(long)]
        perturbation: Option<f64>,
    },
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: u64,
    },
    Qp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        psd: bool,
        #[arg(long, default_value_t = 100.0)]
        big_m: f64,
    },
    Qap {
        /// QAPLIB `.dat` file.
        #[arg(long)]
        qaplib: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        margin: f64,
    },
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    sub_time_limit: Option<f64>,
    #[arg(long)]
    init_budget: Option<f64>,
    #[arg(long)]
    rel_gap: Option<f64>,
    #[arg(long)]
    certify: bool,
}

impl BudgetArgs {
    fn budgets(&self) -> Result<Budgets, CliError> {
        let d = Budgets::default();
        let b = Budgets {
            time_limit: self.time_limit.unwrap_or(d.time_limit),
            sub_time_limit: self.sub_time_limit.unwrap_or(d.sub_time_limit),
            init_budget: self.init_budget.unwrap_or(d.init_budget),
            rel_gap: self.rel_gap.unwrap_or(d.rel_gap),
            certify: self.certify,
            ..d
        };
        b.validate()?;
        Ok(b)
    }
}

fn generate(family: &GenFamily) -> Result<Instance, CliError> {
    match *family {
        GenFamily::Stqp { n, rho, seed } => stqp_instance(n, rho, seed),
        GenFamily::Invqp {
            m,
            n,
            seed,
            sparsity,
            perturbation,
        } => {
            let d = InvQpOptions::default();
            let opts = InvQpOptions {
                sparsity: sparsity.unwrap_or(d.sparsity),
                perturbation: perturbation.unwrap_or(d.perturbation),
                ..d
            };
            invqp_instance(m, n, seed, &opts)
        }
        GenFamily::Random { n, m, k, seed } => random_instance(n, m, k, seed),
        GenFamily::Qp { n, m, seed, psd, big_m } => qp_instance(n, m, psd, big_m, seed),
        GenFamily::Qap { ref qaplib, margin } => {
            let text = std::fs::read_to_string(qaplib).map_err(|e| CliError::io(qaplib, e))?;
            let name = qaplib.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            qap_instance(&name, &parse_qaplib(&text)?, margin)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Generate { family, out } => {
            let inst = generate(&family)?;
            match out {
                Some(p) => inst.write(&p)?,
                None => println!("{}", inst.to_json()),
            }
        }
        Cmd::Solve {
            instance,
            method,
            budgets,
            export_lp,
            out,
        } => {
            let inst = Instance::read(&instance)?;
            if let Some(p) = export_lp {
                let text = build_full_milp(&inst.lpcc)?.to_lp_format();
                return std::fs::write(&p, text).map_err(|e| CliError::io(&p, e));
            }
            let method: Method = method.parse()?;
            let mut outcome = run_method(&inst, method, &budgets.budgets()?);
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
                    store_trace(&dir, &mut outcome)?;
                    append_record(&dir.join("records.csv"), outcome.record)?;
                }
                None => {
                    write_records(std::io::stdout().lock(), std::slice::from_ref(&outcome.record))?;
                }
            }
        }
        Cmd::Bench { config, out } => {
            let text = std::fs::read_to_string(&config).map_err(|e| CliError::io(&config, e))?;
            let cfg = BenchConfig::parse(&text)?;
            let base = config.parent().unwrap_or(Path::new("."));
            std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
            let records = run_bench(&cfg, base, &out)?;
            eprintln!("{} records written to {}", records.len(), out.display());
        }
        Cmd::Report { records, out } => {
            let file = std::fs::File::open(&records).map_err(|e| CliError::io(&records, e))?;
            let recs = read_records(file)?;
            let dir = out.unwrap_or_else(|| records.parent().unwrap_or(Path::new(".")).to_path_buf());
            write_summary(&dir, &recs)?;
        }
    }
    Ok(())
}

/// Appends to an existing records file, keeping a single header.
fn append_record(path: &Path, record: RunRecord) -> Result<(), CliError> {
    let mut all = if path.exists() {
        let f = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        read_records(f)?
    } else {
        Vec::new()
    };
    all.push(record);
    let f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_records(f, &all)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, CliError::Config(_)) { 2 } else { 1 })
        }
    }
}
