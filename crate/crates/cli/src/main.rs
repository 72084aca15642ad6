mod cache;
mod commands;
mod error;
mod table;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::cache::Cache;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "keel", version, about = "Exact intersection theory on M_{0,n}")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
    /// Directory for cached bases and pairing matrices.
    #[arg(long, env = cache::ENV, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Kaufmann,
    Oracle,
    Both,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Good monomials (stable trees) by degree.
    Trees {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: Option<usize>,
    },
    /// Normal form of a product of boundary divisors, e.g. `{12|345}{12|345}`.
    Mul {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        product: String,
    },
    /// Pairing of two good monomials of complementary degree.
    Pair {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m1: String,
        #[arg(long)]
        m2: String,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
    },
    /// Betti numbers from relations and from the pairing.
    Betti {
        #[arg(long)]
        n: usize,
    },
    /// `psi_label^power`, or with `--exponents` the integral of a psi monomial.
    Psi {
        #[arg(long)]
        n: usize,
        #[arg(long, conflicts_with = "exponents", required_unless_present = "exponents")]
        label: Option<usize>,
        #[arg(long, default_value_t = 1, conflicts_with = "exponents")]
        power: u32,
        #[arg(long, value_delimiter = ',')]
        exponents: Option<Vec<usize>>,
    },
    /// `kappa_a` on `n` labels.
    Kappa {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: usize,
    },
    /// Restriction of a class family to every boundary divisor.
    LogCheck {
        /// Check `kappa_a`.
        #[arg(long, conflicts_with = "theory", required_unless_present = "theory")]
        a: Option<usize>,
        /// Check a rank-one theory read from a JSON file.
        #[arg(long)]
        theory: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        nmax: usize,
    },
    /// Volumes `v_4, ..., v_nmax` from the quadratic recursion.
    WpVolumes {
        #[arg(long)]
        nmax: usize,
    },
    /// The ODE satisfied by the volume generating series.
    Matone {
        #[arg(long, default_value_t = 12)]
        order: usize,
    },
    /// Symmetric weights `A_n` on trees with `a` edges.
    ACoeffs {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: usize,
    },
    /// `Omega_n(a)` directly and by recursion.
    Omega {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: usize,
    },
    /// Associativity equations for a potential file.
    Wdvv {
        #[arg(long)]
        potential: PathBuf,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Potential of the tensor product of two theories.
    Tensor {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        order: usize,
    },
    /// Tensor square of the P1 theory against the degree recursion.
    P1xp1 {
        #[arg(long, default_value_t = 8)]
        order: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    let cache = Cache::new(if cli.no_cache { None } else { cli.cache_dir.clone() });
    match commands::run(&cli.command, &cache) {
        Ok(out) => {
            let text = match cli.format {
                Format::Json => serde_json::to_string_pretty(&out.json).expect("serializable"),
                Format::Table => out.table,
            };
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{text}");
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
