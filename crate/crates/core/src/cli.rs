//! Command-line front end. Each verb parses its inputs, calls one library
//! operation and serializes the result.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::fmodel::{dim_phi, FiniteStructure, QfFormula, StructureFile};
use crate::hyperrand::{adjacency_walk, gen_extension_hypergraph};
use crate::io::{GroundFamilyFile, SetSystemFile};
use crate::ramsey::{
    arrow_check, bar_restrict, build_direct_sum_witness, direct_sum, encode_tilde, ColoringProblem, OrderedSetOracle,
    RelStructure, RelStructureFile, DEFAULT_COLORING_BUDGET,
};
use crate::scalar::fmt_sig6;
use crate::setsys::{sauer_binomial_bound, shatter_fn, shift, vc_n_dim, SetSystem};
use crate::zar::{
    build_counterexample_structure, build_extremal_family, erdos_bound, HypergraphFile, ZarCache, DEFAULT_NODE_BUDGET,
};

#[derive(Debug, Parser)]
#[command(name = "vcn", version, about = "Generalized VC dimension and Zarankiewicz workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Search budget: nodes for Zarankiewicz search, colorings for arrows, patterns for witnesses.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Table of z_n(m,d) with the asymptotic Erdős bound (the bound column is advisory).
    ZarTable {
        #[arg(long)]
        n: usize,
        /// Part sizes, e.g. `1..4` (inclusive) or `2,3,5`.
        #[arg(long)]
        m: String,
        #[arg(long)]
        d: String,
    },
    /// Shatter function of a set system next to the generalized Sauer bound.
    Shatter {
        #[arg(long)]
        input: PathBuf,
        /// Box sizes; defaults to 1 through the smallest part size.
        #[arg(long)]
        m: Option<String>,
    },
    /// VC_n dimension of a set system, or of a formula over a structure.
    Dim {
        /// Set system file.
        #[arg(long, conflicts_with_all = ["structure", "formula"])]
        input: Option<PathBuf>,
        #[arg(long, requires = "formula")]
        structure: Option<PathBuf>,
        #[arg(long, requires = "structure")]
        formula: Option<String>,
        /// Largest box size searched; defaults to the smallest part size.
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Down-shift a ground family to a downward-closed one.
    Shift {
        #[arg(long)]
        input: PathBuf,
    },
    /// Union of power sets of extremal K(d+1)-free hypergraphs.
    Extremal {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        m: String,
    },
    /// Ternary structure whose formula class is the extremal family with n = 2, d = 1.
    Counterexample {
        #[arg(long)]
        m: String,
    },
    /// Exhaustive arrow check C -> (B)^A_k.
    Arrow {
        #[arg(long, conflicts_with = "a_size")]
        a: Option<PathBuf>,
        #[arg(long, conflicts_with = "b_size")]
        b: Option<PathBuf>,
        #[arg(long, conflicts_with = "c_size")]
        c: Option<PathBuf>,
        /// Use an ordered set of this size for A.
        #[arg(long)]
        a_size: Option<usize>,
        #[arg(long)]
        b_size: Option<usize>,
        #[arg(long)]
        c_size: Option<usize>,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Direct-sum arrow witness for two ordered-set problems, checked when within budget.
    DirectSum {
        #[arg(long)]
        a0: usize,
        #[arg(long)]
        b0: usize,
        #[arg(long)]
        a1: usize,
        #[arg(long)]
        b1: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Bipartite double of an ordered partite structure and its restriction.
    EncodePartite {
        #[arg(long)]
        input: PathBuf,
    },
    /// Random ordered partite hypergraph with a verified extension level.
    GenRandom {
        #[arg(long)]
        n: usize,
        /// Vertices per part.
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        retries: u64,
    },
    /// Adjacency walk between two order-isomorphic vertex lists.
    Walk {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated global vertex ids.
        #[arg(long)]
        w: String,
        #[arg(long)]
        w_prime: String,
    },
    /// Check both Sauer-type bounds on the extremal family.
    VerifyBounds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        m: String,
    },
}

/// Parses `a..b` (inclusive), `a..=b`, `a,b,c` or a single number.
pub fn parse_range(s: &str) -> Result<Vec<usize>> {
    let num = |x: &str| x.trim().parse::<usize>().map_err(|_| Error::input(format!("`{x}` is not a number")));
    let v: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        (num(a)?..=num(b)?).collect()
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    if v.is_empty() {
        return Err(Error::input(format!("`{s}` is an empty range")));
    }
    Ok(v)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse().map_err(|_| Error::input(format!("`{x}` is not a vertex id"))))
        .collect()
}

/// Rendered output: CSV records or one JSON value.
enum Output {
    Csv(Vec<String>, Vec<Vec<String>>),
    Json(serde_json::Value),
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable output")
}

fn table(format: Format, header: &[&str], rows: Vec<Vec<String>>) -> Output {
    match format {
        Format::Csv => Output::Csv(header.iter().map(|s| s.to_string()).collect(), rows),
        Format::Json => Output::Json(serde_json::Value::Array(
            rows.into_iter()
                .map(|r| {
                    serde_json::Value::Object(
                        header.iter().map(|h| h.to_string()).zip(r.into_iter().map(Into::into)).collect(),
                    )
                })
                .collect(),
        )),
    }
}

fn render(out: Output) -> Result<Vec<u8>> {
    match out {
        Output::Json(v) => {
            let mut s = serde_json::to_string(&v).expect("json");
            s.push('\n');
            Ok(s.into_bytes())
        }
        Output::Csv(header, rows) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header)
                .and_then(|_| rows.iter().try_for_each(|r| w.write_record(r)))
                .map_err(|e| Error::Internal(e.to_string()))?;
            w.into_inner().map_err(|e| Error::Internal(e.to_string()))
        }
    }
}

fn load_rel(path: &Option<PathBuf>, size: Option<usize>, name: &str) -> Result<RelStructure> {
    match (path, size) {
        (Some(p), _) => read_json::<RelStructureFile>(p)?.to_structure(),
        (None, Some(s)) => Ok(RelStructure::ordered_set(s)),
        (None, None) => Err(Error::input(format!("give --{name} or --{name}-size"))),
    }
}

/// Executes one parsed command and returns the bytes to write.
pub fn execute(cli: &Cli) -> Result<Vec<u8>> {
    let fmt = cli.common.format;
    let nodes = cli.common.budget.unwrap_or(DEFAULT_NODE_BUDGET);
    let out = match &cli.command {
        Command::ZarTable { n, m, d } => {
            let mut cache = ZarCache::new(nodes);
            let mut rows = Vec::new();
            for &d in &parse_range(d)? {
                for &m in &parse_range(m)? {
                    let r = cache.get(*n, m, d)?;
                    let e = erdos_bound::<f64>(*n, m, d);
                    rows.push(vec![
                        n.to_string(),
                        m.to_string(),
                        d.to_string(),
                        r.z.to_string(),
                        r.status.to_string(),
                        fmt_sig6(e.z_bound),
                    ]);
                }
            }
            table(fmt, &["n", "m", "d", "z", "status", "erdos_bound"], rows)
        }
        Command::Shatter { input, m } => {
            let system = read_json::<SetSystemFile>(input)?.to_system()?;
            let n = system.universe().arity();
            let sizes = match m {
                Some(r) => parse_range(r)?,
                None => (1..=system.universe().min_part_size()).collect(),
            };
            let d = vc_n_dim(&system, system.universe().min_part_size())?;
            let mut cache = ZarCache::new(nodes);
            let mut rows = Vec::new();
            for m in sizes {
                let pi = shatter_fn(&system, m)?;
                let bound: BigUint =
                    if m == 0 { BigUint::from(1u8) } else { sauer_binomial_bound(n, m, cache.exact(n, m, d + 1)?) };
                rows.push(vec![
                    m.to_string(),
                    pi.to_string(),
                    bound.to_string(),
                    (BigUint::from(pi) == bound).to_string(),
                ]);
            }
            table(fmt, &["m", "pi", "bound", "tight"], rows)
        }
        Command::Dim { input, structure, formula, cap } => {
            let (dim, n) = match (input, structure, formula) {
                (Some(p), _, _) => {
                    let s = read_json::<SetSystemFile>(p)?.to_system()?;
                    (vc_n_dim(&s, cap.unwrap_or(s.universe().min_part_size()))?, s.universe().arity())
                }
                (None, Some(sp), Some(f)) => {
                    let m: FiniteStructure = read_json::<StructureFile>(sp)?.to_structure()?;
                    let phi = QfFormula::parse(f)?;
                    (dim_phi(&m, &phi, cap.unwrap_or(usize::MAX))?, phi.n())
                }
                _ => return Err(Error::input("give --input, or --structure with --formula")),
            };
            table(fmt, &["n", "dim"], vec![vec![n.to_string(), dim.to_string()]])
        }
        Command::Shift { input } => {
            let family = read_json::<GroundFamilyFile>(input)?.to_family()?;
            Output::Json(to_json(&GroundFamilyFile::from(&shift(&family))))
        }
        Command::Extremal { n, d, m } => {
            let fam = build_extremal_family(*n, *d, &parse_range(m)?, nodes)?;
            match fmt {
                Format::Json => Output::Json(to_json(&SetSystemFile::from(&fam.system))),
                Format::Csv => table(
                    fmt,
                    &["m", "offset", "z", "edges"],
                    fam.blocks
                        .iter()
                        .map(|b| {
                            vec![b.m.to_string(), b.offset.to_string(), b.z.to_string(), b.edges.len().to_string()]
                        })
                        .collect(),
                ),
            }
        }
        Command::Counterexample { m } => {
            let c = build_counterexample_structure(&parse_range(m)?, nodes)?;
            Output::Json(to_json(&c.structure.to_file()))
        }
        Command::Arrow { a, b, c, a_size, b_size, c_size, k } => {
            let p = ColoringProblem {
                a: load_rel(a, *a_size, "a")?,
                b: load_rel(b, *b_size, "b")?,
                c: load_rel(c, *c_size, "c")?,
                k: *k,
            };
            let outcome = arrow_check(&p, cli.common.budget.unwrap_or(DEFAULT_COLORING_BUDGET))?;
            table(fmt, &["|A|", "|B|", "|C|", "k", "result", "colorings_checked"], vec![outcome.csv_row(&p).to_vec()])
        }
        Command::DirectSum { a0, b0, a1, b1, k } => {
            let budget = cli.common.budget.unwrap_or(DEFAULT_COLORING_BUDGET);
            let oracle = OrderedSetOracle { budget, ..OrderedSetOracle::default() };
            let pts = RelStructure::ordered_set;
            let w =
                build_direct_sum_witness(&pts(*a0), &pts(*b0), &pts(*a1), &pts(*b1), *k, &oracle, &oracle, 1 << 16)?;
            let p = ColoringProblem {
                a: direct_sum(&pts(*a0), &pts(*a1))?,
                b: direct_sum(&pts(*b0), &pts(*b1))?,
                c: w.structure.clone(),
                k: *k,
            };
            let (result, checked) = match arrow_check(&p, budget) {
                Ok(o) => (o.holds.to_string(), o.colorings_checked.to_string()),
                Err(Error::Budget(_)) => ("refused".to_string(), "0".to_string()),
                Err(e) => return Err(e),
            };
            match fmt {
                Format::Json => Output::Json(json!({
                    "structure": w.structure.to_file(),
                    "m": w.m,
                    "chain_sizes": w.chain.iter().map(RelStructure::size).collect::<Vec<_>>(),
                    "c1_size": w.c1.size(),
                    "result": result,
                    "colorings_checked": checked,
                })),
                Format::Csv => table(
                    fmt,
                    &["|C|", "m", "result", "colorings_checked"],
                    vec![vec![w.structure.size().to_string(), w.m.to_string(), result, checked]],
                ),
            }
        }
        Command::EncodePartite { input } => {
            let x = read_json::<RelStructureFile>(input)?.to_structure()?;
            let tilde = encode_tilde(&x.without_parts())?;
            let bar = bar_restrict(&x)?;
            Output::Json(json!({ "tilde": tilde.to_file(), "bar": bar.to_file(), "isomorphic": bar == x }))
        }
        Command::GenRandom { n, m, t, seed, retries } => {
            let h = gen_extension_hypergraph(*n, *m, *t, *seed, *retries)?;
            Output::Json(to_json(&h.to_file()))
        }
        Command::Walk { input, w, w_prime } => {
            let h = read_json::<HypergraphFile>(input)?.to_hypergraph()?;
            Output::Json(to_json(&adjacency_walk(&h, &parse_list(w)?, &parse_list(w_prime)?)?))
        }
        Command::VerifyBounds { n, d, m } => {
            let sizes = parse_range(m)?;
            let fam = build_extremal_family(*n, *d, &sizes, nodes)?;
            let system: &SetSystem = &fam.system;
            let dim = vc_n_dim(system, *d + 1)?;
            let mut rows = Vec::new();
            for b in &fam.blocks {
                let pi = shatter_fn(system, b.m)?;
                let lower = BigUint::from(1u8) << (b.z - 1);
                let upper: BigUint = sauer_binomial_bound(*n, b.m, b.z);
                let pi_big = BigUint::from(pi);
                rows.push(vec![
                    n.to_string(),
                    d.to_string(),
                    b.m.to_string(),
                    dim.to_string(),
                    b.z.to_string(),
                    pi.to_string(),
                    lower.to_string(),
                    upper.to_string(),
                    (pi_big >= lower).to_string(),
                    (pi_big <= upper).to_string(),
                ]);
            }
            table(fmt, &["n", "d", "m", "dim", "z", "pi", "lower", "upper", "lower_holds", "upper_holds"], rows)
        }
    };
    render(out)
}

/// Process exit status for an error: 1 for bad input, 2 for budget refusals, 3 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Input(_) | Error::Undefined(_) => 1,
        Error::Budget(_) => 2,
        Error::Construction(_) | Error::Internal(_) => 3,
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("VCN_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::input(format!("VCN_THREADS=`{v}` is not a number")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Internal(e.to_string()))?;
    }
    Ok(())
}

/// Runs the CLI on the given arguments and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = configure_threads().and_then(|_| execute(&cli)).and_then(|bytes| match &cli.common.out {
        Some(p) => fs::write(p, bytes).map_err(|e| Error::input(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(&bytes).map_err(|e| Error::Internal(e.to_string())),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("vcn: {e}");
            exit_code(&e)
        }
    }
}
