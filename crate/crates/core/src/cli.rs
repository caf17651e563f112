//! Command line front end.
//!
//! Exit codes: 0 on success, 1 on a domain error (a computation or an
//! input that does not fit the block), 2 on a usage error (malformed
//! arguments or diagram strings, unknown subcommands).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::ainfty::{AInfinity, SplitMode, Splitting};
use crate::arcalg::{AlgebraElement, Block};
use crate::diagrams::{OrientedCircleDiagram, Weight};
use crate::extalg::{end_quiver, n1_closed_dims, shelton_dims, HomAlgebra, TableEntry};
use crate::render::{render_diagram, render_trace};
use crate::repmod::{cartan_matrix, decomposition_matrix, kl_poly_closed, kl_poly_recursive};
use crate::resolve::{resolve_cone, resolve_generic, verify_resolution, ResolutionCache};

/// Environment variable holding the default resolution cache directory.
pub const CACHE_ENV: &str = "ARCEXT_CACHE_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "arcext",
    version,
    about = "Khovanov arc algebras, resolutions of cell modules, Ext algebras and A-infinity minimal models",
    after_help = "Weights are strings over '^' and 'v' (up and down). The shorthands '3' (n = 1, up at \
position 3) and '3,1' (n = 2, ups at positions 1 and 3) are accepted wherever a weight is expected; \
--j and --kl set the first weight argument.\n\nCircle diagrams are written \
'cups=(0,3);(1,2) rays=4 | vv^^v | caps=(1,2);(3,4) rays=0'.\n\nExit codes: 0 success, 1 domain error, 2 usage error."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Number of down labels.
    #[arg(short, long)]
    m: usize,
    /// Number of up labels.
    #[arg(short, long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Directory for cached resolutions.
    #[arg(long, env = CACHE_ENV)]
    cache: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
struct Pair {
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    /// Index shorthand for the first weight when n = 1.
    #[arg(long)]
    j: Option<usize>,
    /// Index shorthand `k,l` for the first weight when n = 2.
    #[arg(long)]
    kl: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Basis of K_m^n, or of e_λ K e_μ.
    Basis {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        w: Pair,
    },
    /// Product of two circle diagrams.
    Multiply {
        #[command(flatten)]
        c: Common,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Kazhdan-Lusztig polynomial p_{λ,μ}, by the recursion and the closed form.
    Klpoly {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        w: Pair,
    },
    /// q-decomposition numbers d_{λ,μ}.
    Decomp {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        w: Pair,
    },
    /// Graded Cartan matrix.
    Cartan {
        #[command(flatten)]
        c: Common,
    },
    /// Linear projective resolution of M(λ).
    Resolve {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        w: Pair,
        #[arg(long, value_enum, default_value_t = ResolveMethod::Cone)]
        method: ResolveMethod,
    },
    /// Dimensions of Ext^k(M(λ), M(μ)).
    Extdim {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        w: Pair,
        /// Every ordered pair of the block.
        #[arg(long)]
        all: bool,
        #[arg(long, value_enum)]
        oracle: Option<Oracle>,
    },
    /// Basis of Ext(M(λ), M(μ)) by labelled or generic representatives.
    Extbasis {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        w: Pair,
    },
    /// Products of labelled classes against the multiplication table (n = 2).
    Multtable {
        #[command(flatten)]
        c: Common,
    },
    /// Higher products of the minimal model.
    Ainfty {
        #[command(flatten)]
        c: Common,
        #[arg(long, default_value = "generic", value_parser = parse_mode)]
        mode: SplitMode,
        #[arg(long, default_value_t = 5)]
        max_arity: usize,
        /// Highest arity of Stasheff identities checked (0 skips the check).
        #[arg(long, default_value_t = 0)]
        stasheff: usize,
        /// Replaces the chosen complement by a random one.
        #[arg(long)]
        seed: Option<u64>,
        /// Compare m_3 with the table of m_3 values (n = 2).
        #[arg(long)]
        mult3: bool,
    },
    /// Quiver and quadratic relations of the graded endomorphism algebra.
    Quiver {
        #[command(flatten)]
        c: Common,
    },
    /// SVG drawing of a circle diagram or of the surgery trace of a product.
    Render {
        /// Circle diagram to draw.
        #[arg(long, conflicts_with_all = ["x", "y"])]
        diagram: Option<String>,
        /// First factor of a surgery trace.
        #[arg(long, requires = "y")]
        x: Option<String>,
        #[arg(long, requires = "x")]
        y: Option<String>,
        /// Output file; standard output if absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ResolveMethod {
    Cone,
    Generic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Oracle {
    Shelton,
    Closed,
}

fn parse_mode(s: &str) -> Result<SplitMode, String> {
    SplitMode::parse(s).ok_or_else(|| format!("unknown mode {s:?}; expected generic, labelled or canonical"))
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

/// Output of one command: text and a structured document.
struct Report {
    text: String,
    json: Value,
}

/// Runs the program on `argv` (including the program name) and returns the
/// exit code; output goes to standard output, errors to standard error.
pub fn run(argv: &[String]) -> i32 {
    let mut out = String::new();
    let code = run_to(argv, &mut out);
    print!("{out}");
    code
}

/// As [`run`], collecting standard output in `out`.
pub fn run_to(argv: &[String], out: &mut String) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    out.push_str(&e.to_string());
                    0
                }
                _ => {
                    eprint!("{e}");
                    2
                }
            };
        }
    };
    match execute(cli.cmd, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

fn execute(cmd: Command, out: &mut String) -> Result<(), CliError> {
    if let Command::Render { diagram, x, y, output } = cmd {
        let svg = render(diagram, x, y)?;
        match output {
            Some(p) => std::fs::write(&p, svg).map_err(|e| CliError::Domain(format!("cannot write {}: {e}", p.display())))?,
            None => out.push_str(&svg),
        }
        return Ok(());
    }
    let (format, report) = match cmd {
        Command::Basis { c, w } => (c.format, basis(&c, &w)?),
        Command::Multiply { c, x, y } => (c.format, multiply(&c, &x, &y)?),
        Command::Klpoly { c, w } => (c.format, klpoly(&c, &w)?),
        Command::Decomp { c, w } => (c.format, decomp(&c, &w)?),
        Command::Cartan { c } => (c.format, cartan(&c)?),
        Command::Resolve { c, w, method } => (c.format, resolve(&c, &w, method)?),
        Command::Extdim { c, w, all, oracle } => (c.format, extdim(&c, &w, all, oracle)?),
        Command::Extbasis { c, w } => (c.format, extbasis(&c, &w)?),
        Command::Multtable { c } => (c.format, multtable(&c)?),
        Command::Ainfty { c, mode, max_arity, stasheff, seed, mult3 } => {
            (c.format, ainfty(&c, mode, max_arity, stasheff, seed, mult3)?)
        }
        Command::Quiver { c } => (c.format, quiver(&c)?),
        Command::Render { .. } => unreachable!("handled above"),
    };
    match format {
        Format::Text => {
            out.push_str(&report.text);
            if !report.text.ends_with('\n') {
                out.push('\n');
            }
        }
        Format::Json => {
            out.push_str(&serde_json::to_string_pretty(&report.json).expect("json values serialize"));
            out.push('\n');
        }
    }
    Ok(())
}

fn block(c: &Common) -> Arc<Block> {
    Block::get(c.m, c.n)
}

fn cache(c: &Common) -> Result<ResolutionCache, CliError> {
    match &c.cache {
        Some(d) => ResolutionCache::with_dir(d).map_err(domain),
        None => Ok(ResolutionCache::in_memory()),
    }
}

/// Parses a weight string or index shorthand and checks it lies in the block.
fn weight(s: &str, blk: &Block) -> Result<usize, CliError> {
    let s = s.trim();
    let w = if !s.is_empty() && s.chars().all(|c| c == '^' || c == 'v') {
        s.parse::<Weight>().map_err(|e| CliError::Usage(e.to_string()))?
    } else if let Some((k, l)) = s.split_once(',') {
        let k: usize = k.trim().parse().map_err(|_| CliError::Usage(format!("malformed weight {s:?}")))?;
        let l: usize = l.trim().parse().map_err(|_| CliError::Usage(format!("malformed weight {s:?}")))?;
        if blk.n != 2 {
            return Err(CliError::Domain(format!("index shorthand {s:?} needs n = 2, the block has n = {}", blk.n)));
        }
        Weight::from_kl(blk.m, k, l).map_err(domain)?
    } else if let Ok(j) = s.parse::<usize>() {
        if blk.n != 1 {
            return Err(CliError::Domain(format!("index shorthand {s:?} needs n = 1, the block has n = {}", blk.n)));
        }
        Weight::from_j(blk.m, j).map_err(domain)?
    } else {
        return Err(CliError::Usage(format!("malformed weight {s:?}: expected a string over '^' and 'v' or an index")));
    };
    blk.require(&w).map_err(domain)
}

impl Pair {
    fn first(&self, blk: &Block) -> Result<Option<usize>, CliError> {
        let given = [self.lambda.is_some(), self.j.is_some(), self.kl.is_some()].iter().filter(|&&b| b).count();
        if given > 1 {
            return Err(CliError::Usage("give only one of --lambda, --j, --kl".into()));
        }
        if let Some(s) = &self.lambda {
            return weight(s, blk).map(Some);
        }
        if let Some(j) = self.j {
            return weight(&j.to_string(), blk).map(Some);
        }
        if let Some(kl) = &self.kl {
            if !kl.contains(',') {
                return Err(CliError::Usage(format!("--kl expects k,l, got {kl:?}")));
            }
            return weight(kl, blk).map(Some);
        }
        Ok(None)
    }

    fn second(&self, blk: &Block) -> Result<Option<usize>, CliError> {
        self.mu.as_deref().map(|s| weight(s, blk)).transpose()
    }

    fn both(&self, blk: &Block) -> Result<(usize, usize), CliError> {
        match (self.first(blk)?, self.second(blk)?) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(CliError::Usage("this command needs two weights (--lambda or --j/--kl, and --mu)".into())),
        }
    }
}

fn diagram(s: &str) -> Result<OrientedCircleDiagram, CliError> {
    OrientedCircleDiagram::parse(s).map_err(|e| CliError::Usage(e.to_string()))
}

fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().map(|r| r.get(c).map_or(0, |x| x.chars().count())).max().unwrap_or(0)).collect();
    let mut s = String::new();
    for r in rows {
        let cells: Vec<String> =
            r.iter().enumerate().map(|(i, x)| format!("{x}{}", " ".repeat(widths[i] - x.chars().count()))).collect();
        let _ = writeln!(s, "{}", cells.join("  ").trim_end());
    }
    s
}

fn basis(c: &Common, w: &Pair) -> Result<Report, CliError> {
    let blk = block(c);
    let a = w.first(&blk)?;
    let b = w.second(&blk)?;
    let mut rows = vec![vec!["degree".to_string(), "diagram".to_string()]];
    let mut items = Vec::new();
    for v in blk.basis() {
        if a.is_some_and(|a| a != v.left) || b.is_some_and(|b| b != v.right) {
            continue;
        }
        let d = blk.diagram(v).to_text();
        rows.push(vec![blk.degree(v).to_string(), d.clone()]);
        items.push(json!({"degree": blk.degree(v), "diagram": d}));
    }
    let mut text = table(&rows);
    let _ = writeln!(text, "{} basis vectors", items.len());
    Ok(Report { text, json: json!({"block": [c.m, c.n], "count": items.len(), "basis": items}) })
}

fn multiply(c: &Common, x: &str, y: &str) -> Result<Report, CliError> {
    let blk = block(c);
    let x = blk.from_diagram(&diagram(x)?).map_err(domain)?;
    let y = blk.from_diagram(&diagram(y)?).map_err(domain)?;
    let p = blk.multiply(&AlgebraElement::basis(x), &AlgebraElement::basis(y));
    let terms: Vec<Value> = p
        .terms()
        .iter()
        .map(|(v, k)| json!({"coefficient": k.to_string(), "diagram": blk.diagram(*v).to_text()}))
        .collect();
    Ok(Report { text: p.to_text(&blk), json: json!({"block": [c.m, c.n], "product": terms}) })
}

fn klpoly(c: &Common, w: &Pair) -> Result<Report, CliError> {
    let blk = block(c);
    let (a, b) = w.both(&blk)?;
    let (la, mu) = (blk.weight(a), blk.weight(b));
    let rec = kl_poly_recursive(la, mu);
    let closed = kl_poly_closed(la, mu);
    if rec != closed {
        return Err(CliError::Domain(format!("recursive {rec} and closed {closed} definitions disagree")));
    }
    Ok(Report {
        text: rec.to_string(),
        json: json!({"lambda": la.to_string(), "mu": mu.to_string(), "recursive": rec.to_string(), "closed": closed.to_string()}),
    })
}

fn matrix_report(blk: &Block, name: &str, m: &[Vec<crate::QPoly>]) -> Report {
    let mut rows = vec![std::iter::once(String::new()).chain(blk.weights().iter().map(|w| w.to_string())).collect::<Vec<_>>()];
    for (i, r) in m.iter().enumerate() {
        rows.push(std::iter::once(blk.weight(i).to_string()).chain(r.iter().map(|p| p.to_string())).collect());
    }
    let entries: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(|p| p.to_string()).collect()).collect();
    let weights: Vec<String> = blk.weights().iter().map(|w| w.to_string()).collect();
    Report { text: table(&rows), json: json!({"block": [blk.m, blk.n], "weights": weights, name: entries}) }
}

fn decomp(c: &Common, w: &Pair) -> Result<Report, CliError> {
    let blk = block(c);
    let m = decomposition_matrix(&blk);
    if let (Some(a), Some(b)) = (w.first(&blk)?, w.second(&blk)?) {
        let p = &m[a][b];
        return Ok(Report { text: p.to_string(), json: json!({"lambda": blk.weight(a).to_string(), "mu": blk.weight(b).to_string(), "d": p.to_string()}) });
    }
    Ok(matrix_report(&blk, "decomposition", &m))
}

fn cartan(c: &Common) -> Result<Report, CliError> {
    let blk = block(c);
    Ok(matrix_report(&blk, "cartan", &cartan_matrix(&blk)))
}

fn resolve(c: &Common, w: &Pair, method: ResolveMethod) -> Result<Report, CliError> {
    let blk = block(c);
    let lambda = w.first(&blk)?.ok_or_else(|| CliError::Usage("resolve needs a weight (--lambda, --j or --kl)".into()))?;
    let cx = match method {
        ResolveMethod::Cone => resolve_cone(&blk, lambda, &cache(c)?).map_err(domain)?,
        ResolveMethod::Generic => Arc::new(resolve_generic(&blk, lambda).map_err(domain)?),
    };
    let rep = verify_resolution(&cx, lambda);
    let mut text = cx.to_text();
    let _ = writeln!(text, "verified: {}", if rep.ok() { "yes" } else { "no" });
    for f in &rep.failures {
        let _ = writeln!(text, "  {f}");
    }
    let terms: Vec<Vec<Value>> = cx
        .terms()
        .iter()
        .map(|t| t.iter().map(|s| json!({"weight": blk.weight(s.weight).to_string(), "shift": s.shift, "tag": s.tag.map(|t| format!("{t:?}"))})).collect())
        .collect();
    let json = json!({
        "block": [c.m, c.n],
        "lambda": blk.weight(lambda).to_string(),
        "method": format!("{method:?}").to_lowercase(),
        "terms": terms,
        "report": rep,
    });
    if !rep.ok() {
        return Err(CliError::Domain(format!("resolution failed verification:\n{text}")));
    }
    Ok(Report { text, json })
}

fn algebra(c: &Common) -> Result<Arc<HomAlgebra>, CliError> {
    Ok(Arc::new(HomAlgebra::new(block(c), &cache(c)?).map_err(domain)?))
}

fn dims_text(d: &std::collections::BTreeMap<i64, i64>) -> String {
    if d.is_empty() {
        return "0".into();
    }
    d.iter().map(|(k, v)| format!("{k}:{v}")).collect::<Vec<_>>().join(" ")
}

fn extdim(c: &Common, w: &Pair, all: bool, oracle: Option<Oracle>) -> Result<Report, CliError> {
    let blk = block(c);
    if oracle == Some(Oracle::Closed) && blk.n != 1 {
        return Err(CliError::Domain("the closed formula oracle needs n = 1".into()));
    }
    let pairs: Vec<(usize, usize)> = if all {
        (0..blk.size()).flat_map(|a| (0..blk.size()).map(move |b| (a, b))).collect()
    } else {
        vec![w.both(&blk)?]
    };
    let alg = algebra(c)?;
    let mut header = vec!["lambda".to_string(), "mu".to_string(), "ext".to_string()];
    if let Some(o) = oracle {
        header.push(format!("{o:?}").to_lowercase());
    }
    let mut rows = vec![header];
    let mut items = Vec::new();
    let mut total = 0i64;
    let mut agree = true;
    for (a, b) in pairs {
        let got: std::collections::BTreeMap<i64, i64> =
            alg.ext_dims(a, b).into_iter().filter(|&(_, v)| v != 0).map(|(k, v)| (k, v as i64)).collect();
        total += got.values().sum::<i64>();
        let mut row = vec![blk.weight(a).to_string(), blk.weight(b).to_string(), dims_text(&got)];
        let mut item = json!({"lambda": blk.weight(a).to_string(), "mu": blk.weight(b).to_string(), "dims": got});
        if let Some(o) = oracle {
            let want: std::collections::BTreeMap<i64, i64> = match o {
                Oracle::Shelton => shelton_dims(blk.weight(a), blk.weight(b)),
                Oracle::Closed => n1_closed_dims(blk.weight(a).j_index().unwrap_or(0), blk.weight(b).j_index().unwrap_or(0)),
            }
            .into_iter()
            .filter(|&(_, v)| v != 0)
            .collect();
            agree &= want == got;
            row.push(dims_text(&want));
            item["oracle"] = json!(want);
        }
        rows.push(row);
        items.push(item);
    }
    let mut text = table(&rows);
    let _ = writeln!(text, "total dimension: {total}");
    if oracle.is_some() {
        let _ = writeln!(text, "oracle agrees: {}", if agree { "yes" } else { "no" });
    }
    let json = json!({"block": [c.m, c.n], "pairs": items, "total": total, "oracle_agrees": oracle.map(|_| agree)});
    if !agree {
        return Err(CliError::Domain(format!("oracle disagrees:\n{text}")));
    }
    Ok(Report { text, json })
}

fn extbasis(c: &Common, w: &Pair) -> Result<Report, CliError> {
    let blk = block(c);
    let (a, b) = w.both(&blk)?;
    let alg = algebra(c)?;
    let classes = alg.ext_basis(a, b).map_err(domain)?;
    let mut rows = vec![vec!["class".to_string(), "k".to_string(), "shift".to_string(), "support".to_string()]];
    let mut items = Vec::new();
    for cl in &classes {
        rows.push(vec![cl.label.name().to_string(), cl.k().to_string(), cl.j().to_string(), cl.rep.support().to_string()]);
        items.push(json!({"label": cl.label.name(), "k": cl.k(), "shift": cl.j(), "support": cl.rep.support()}));
    }
    Ok(Report {
        text: table(&rows),
        json: json!({"lambda": blk.weight(a).to_string(), "mu": blk.weight(b).to_string(), "classes": items}),
    })
}

fn entry_text(e: &TableEntry) -> String {
    match e {
        TableEntry::Zero => "0".into(),
        TableEntry::Class { sign, label } => format!("{}{}", if *sign < 0 { "-" } else { "+" }, label.name()),
        TableEntry::Null { sign, label } => format!("{}{} (null)", if *sign < 0 { "-" } else { "+" }, label.name()),
    }
}

fn multtable(c: &Common) -> Result<Report, CliError> {
    if c.n != 2 {
        return Err(CliError::Domain(format!("the multiplication table needs n = 2, got n = {}", c.n)));
    }
    let alg = algebra(c)?;
    let checks = alg.product_checks().map_err(domain)?;
    let mut fam: std::collections::BTreeMap<(String, String), (usize, usize, usize, usize)> = Default::default();
    for ch in &checks {
        let e = fam.entry((ch.x.name().to_string(), ch.y.name().to_string())).or_default();
        e.0 += 1;
        e.1 += usize::from(ch.product_nonzero);
        e.2 += usize::from(!ch.defined);
        e.3 += usize::from(ch.defined && !ch.matches);
    }
    let mut rows = vec![vec!["x".into(), "y".into(), "instances".into(), "nonzero".into(), "undefined".into(), "mismatches".into()]];
    for ((x, y), (n, nz, und, bad)) in &fam {
        rows.push(vec![x.clone(), y.clone(), n.to_string(), nz.to_string(), und.to_string(), bad.to_string()]);
    }
    let mismatches: usize = fam.values().map(|v| v.3).sum();
    let mut text = table(&rows);
    let _ = writeln!(text, "mismatches: {mismatches}");
    let blk = alg.block();
    let items: Vec<Value> = checks
        .iter()
        .map(|ch| {
            json!({
                "x": ch.x.name(), "y": ch.y.name(),
                "weights": ch.weights.iter().map(|&i| blk.weight(i).to_string()).collect::<Vec<_>>(),
                "expected": entry_text(&ch.expected), "defined": ch.defined,
                "nonzero": ch.product_nonzero, "sign_ok": ch.sign_ok, "matches": ch.matches,
            })
        })
        .collect();
    Ok(Report { text, json: json!({"block": [c.m, c.n], "mismatches": mismatches, "products": items}) })
}

fn ainfty(c: &Common, mode: SplitMode, max_arity: usize, stasheff: usize, seed: Option<u64>, mult3: bool) -> Result<Report, CliError> {
    if max_arity < 2 {
        return Err(CliError::Usage("--max-arity must be at least 2".into()));
    }
    let alg = algebra(c)?;
    let split = Arc::new(Splitting::new(alg, mode, seed).map_err(domain)?);
    let ai = AInfinity::compute(split, max_arity).map_err(domain)?;
    let rep = ai.vanishing_report(stasheff.min(max_arity));
    let mut text = String::new();
    let line: Vec<String> = rep
        .arities
        .iter()
        .filter(|a| a.arity >= 3)
        .map(|a| if a.nonzero_m == 0 { format!("m{}: 0", a.arity) } else { format!("m{}: nonzero ({} tuples)", a.arity, a.nonzero_m) })
        .collect();
    let _ = writeln!(text, "{}", line.join(", "));
    let _ = writeln!(text, "{rep}");
    let mut json = serde_json::to_value(&rep).expect("report serializes");
    if mult3 {
        let cmp = ai.mult3_comparison().map_err(domain)?;
        let _ = writeln!(text, "m3 table rows never nonzero: {:?}", cmp.missing_rows());
        let _ = writeln!(text, "m3 table zero rows with nonzero values: {:?}", cmp.zero_row_violations());
        let _ = writeln!(text, "m3 nonzero on families outside the table: {:?}", cmp.unlisted_nonzero);
        json["mult3"] = serde_json::to_value(&cmp).expect("comparison serializes");
    }
    Ok(Report { text, json })
}

fn quiver(c: &Common) -> Result<Report, CliError> {
    let blk = block(c);
    let q = end_quiver(&blk);
    let mut text = String::new();
    let _ = writeln!(text, "{} vertices, {} arrows, {} relations", blk.size(), q.arrows.len(), q.relations.len());
    let name = |i: usize| {
        let v = q.arrows[i];
        format!("{}->{}", blk.weight(v.left), blk.weight(v.right))
    };
    for (i, _) in q.arrows.iter().enumerate() {
        let _ = writeln!(text, "a{i}: {}", name(i));
    }
    let mut rels = Vec::new();
    for (a, cc, r) in &q.relations {
        let terms: Vec<String> = r.iter().map(|((i, j), k)| format!("{k}*a{i}.a{j}")).collect();
        let _ = writeln!(text, "{} -> {}: {} = 0", blk.weight(*a), blk.weight(*cc), terms.join(" + "));
        rels.push(json!({"from": blk.weight(*a).to_string(), "to": blk.weight(*cc).to_string(), "terms": terms}));
    }
    let arrows: Vec<String> = (0..q.arrows.len()).map(name).collect();
    Ok(Report { text, json: json!({"block": [c.m, c.n], "arrows": arrows, "relations": rels}) })
}

fn render(diagram_arg: Option<String>, x: Option<String>, y: Option<String>) -> Result<String, CliError> {
    if let Some(d) = diagram_arg {
        return Ok(render_diagram(&diagram(&d)?));
    }
    let (Some(x), Some(y)) = (x, y) else {
        return Err(CliError::Usage("render needs --diagram, or --x and --y".into()));
    };
    let (dx, dy) = (diagram(&x)?, diagram(&y)?);
    let n = dx.weight.n();
    let m = dx.weight.m();
    let blk = Block::get(m, n);
    let bx = blk.from_diagram(&dx).map_err(domain)?;
    let by = blk.from_diagram(&dy).map_err(domain)?;
    if bx.right != by.left {
        return Err(CliError::Domain("the cap diagram of --x is not the mirror of the cup diagram of --y; the product is zero".into()));
    }
    Ok(render_trace(&blk.surgery_trace(bx, by)))
}
