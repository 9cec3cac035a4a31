//! `momentshape`: generate moments, recover boundaries and weights, extend
//! moment sequences and print rank diagnostics.

mod fixture;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use momentshape::contour::{level_set, write_contour_csv};
use momentshape::determinateness::{extend_moments, extend_moments_expglobal, ExtensionResult};
use momentshape::io::{fmt_f64, fmt_short, read_moment_file, to_json_string, MomentFile};
use momentshape::matrices::assemble_renorm;
use momentshape::recovery::{
    approx_boundary, kernel_solve, recover_boundary, recover_convex, recover_exp_weight, recover_min_order,
    recover_singular, ApproxMode, RecoveryReport, DEFAULT_RANK_TOL,
};
use momentshape::{enumerate_basis, CoordinateVariant, DensePolynomial, Error, MomentSequence, MultiIndex};
use serde::Serialize;

use fixture::{Fixture, MomentMethodArg};
use run::{Failure, Run};

#[derive(Parser)]
#[command(name = "momentshape", version, about = "Shape and weight recovery from moments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the moments of a named fixture.
    Gen(GenArgs),
    /// Recover a boundary polynomial from indicator moments.
    Recover(RecoverArgs),
    /// Recover a global weight exp(-g) from its moments.
    RecoverExp(RecoverExpArgs),
    /// Extend a moment sequence to higher orders and check it.
    Extend(ExtendArgs),
    /// Rank, singular value and eigenvalue tables of M^d_k for k = d..2d.
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Serialize, Clone)]
struct InputArgs {
    /// Named fixture, e.g. "annulus:s=0.6667", "simplex", "disk:cx=1", "exp-curve", "gaussian".
    #[arg(long, conflicts_with = "moments")]
    fixture: Option<String>,
    /// Moment JSON file.
    #[arg(long)]
    moments: Option<PathBuf>,
    /// Quadrature tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = MomentMethodArg::Auto)]
    moment_method: MomentMethodArg,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct GenArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    max_order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum Strategy {
    /// Kernel of M^d_2d.
    Boundary,
    /// Smallest k in d..2d with a unique solution.
    MinOrder,
    /// Solve in the centroid frame.
    Convex,
    /// Stacked coordinate matrices, for an origin on the boundary.
    Singular,
    /// Eigenvector or singular vector of M^d_d.
    Approx,
}

#[derive(Args, Serialize)]
struct RecoverArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    d: usize,
    /// Solve M^d_k directly instead of running a strategy.
    #[arg(long, conflicts_with = "method")]
    k: Option<usize>,
    /// Order of fixture moments, or truncation order for a moment file.
    #[arg(long)]
    max_order: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    rank_tol: f64,
    /// Defaults to singular with --variant, approx with --mode, convex with --recenter.
    #[arg(long, value_enum)]
    method: Option<Strategy>,
    /// paper-literal or derived.
    #[arg(long)]
    variant: Option<String>,
    /// eigen or svd.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    recenter: bool,
    /// Write a CSV of the boundary level set (n = 2).
    #[arg(long)]
    emit_contour: Option<PathBuf>,
    /// Contour box "x1min,x1max,x2min,x2max"; defaults to the centroid +- 4.5 sigma.
    #[arg(long)]
    bbox: Option<String>,
    #[arg(long, default_value_t = 256)]
    resolution: usize,
}

#[derive(Args, Serialize)]
struct RecoverExpArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    max_order: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum WeightArg {
    /// Indicator moments of {g < 1}.
    None,
    /// Moments of exp(-g) on R^n.
    Global,
}

#[derive(Args, Serialize)]
struct ExtendArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    d: usize,
    /// Every moment up to this order is produced.
    #[arg(long)]
    max_order: usize,
    /// Order of the fixture prefix (default 3d, or 2d for global weights).
    #[arg(long)]
    prefix_order: Option<usize>,
    /// Defaults to global for the gaussian fixture.
    #[arg(long, value_enum)]
    weight: Option<WeightArg>,
    /// Moment file to check the extension against; fixtures are their own oracle.
    #[arg(long)]
    oracle: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct DiagnoseArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    max_order: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    rank_tol: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, input, config) = match &cli.command {
        Command::Gen(a) => ("gen", &a.input, serde_json::to_value(a)),
        Command::Recover(a) => ("recover", &a.input, serde_json::to_value(a)),
        Command::RecoverExp(a) => ("recover-exp", &a.input, serde_json::to_value(a)),
        Command::Extend(a) => ("extend", &a.input, serde_json::to_value(a)),
        Command::Diagnose(a) => ("diagnose", &a.input, serde_json::to_value(a)),
    };
    let config = config.expect("arguments serialize");
    let mut run = match Run::new(name, &input.out, config) {
        Ok(r) => r,
        Err(e) => return run::report_fatal(&Failure::from(e)),
    };
    let result = match &cli.command {
        Command::Gen(a) => gen(a, &mut run),
        Command::Recover(a) => recover(a, &mut run),
        Command::RecoverExp(a) => recover_exp(a, &mut run),
        Command::Extend(a) => extend(a, &mut run),
        Command::Diagnose(a) => diagnose(a, &mut run),
    };
    run.finish(result)
}

fn parse_fixture(input: &InputArgs) -> Result<Option<Fixture>, Error> {
    input.fixture.as_deref().map(str::parse).transpose()
}

/// Fixture moments to `order`, or the moment file truncated to `order`.
fn load(input: &InputArgs, order: Option<usize>, default_order: usize, run: &mut Run) -> Result<MomentSequence, Error> {
    match (parse_fixture(input)?, &input.moments) {
        (Some(f), _) => {
            let order = order.unwrap_or(default_order);
            run.resolve("max_order", order);
            f.moments(order, input.moment_method, input.tol, input.samples, input.seed)
        }
        (None, Some(path)) => {
            let y = read_moment_file(path)?.to_sequence()?;
            match order {
                Some(o) if o < y.max_order() => y.truncate(o),
                _ => Ok(y),
            }
        }
        (None, None) => Err(Error::InvalidArgument("one of --fixture or --moments is required".into())),
    }
}

fn gen(a: &GenArgs, run: &mut Run) -> Result<(), Failure> {
    let f = parse_fixture(&a.input)?
        .ok_or_else(|| Error::InvalidArgument("gen needs --fixture".into()))?;
    let y = f.moments(a.max_order, a.input.moment_method, a.input.tol, a.input.samples, a.input.seed)?;
    run.write("moments.json", &to_json_string(&MomentFile::from_sequence(&y))?)?;
    println!("{} moments of {:?} up to order {}", y.values().len(), f, y.max_order());
    Ok(())
}

fn poly_text(p: &DensePolynomial) -> String {
    // drop rounding noise far below the largest coefficient
    let floor = 1e-12 * p.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let terms: Vec<String> = p
        .terms()
        .filter(|(_, c)| c.abs() > floor)
        .map(|(a, c)| {
            let mono: Vec<String> = a
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| if e == 1 { format!("x{}", i + 1) } else { format!("x{}^{e}", i + 1) })
                .collect();
            if mono.is_empty() {
                fmt_short(c)
            } else {
                format!("{} {}", fmt_short(c), mono.join(" "))
            }
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

fn print_report(r: &RecoveryReport) {
    println!("method: {}", r.method);
    for e in &r.rank_profile {
        println!("  {e}");
    }
    match r.boundary_level {
        Some(level) => println!("g(x) = {}, boundary at level {}", poly_text(&r.polynomial), fmt_short(level)),
        None => println!("g(x) = {}", poly_text(&r.polynomial)),
    }
    println!("residual {}, unique {}, consistent {}", fmt_short(r.residual), r.unique, r.consistent);
    for n in &r.notes {
        println!("note: {n}");
    }
}

fn parse_bbox(s: &str) -> Result<[[f64; 2]; 2], Error> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::InvalidArgument(format!("bbox '{s}' is not four numbers")))?;
    match v.as_slice() {
        &[a, b, c, d] => Ok([[a, b], [c, d]]),
        _ => Err(Error::InvalidArgument(format!("bbox '{s}' needs four numbers"))),
    }
}

/// Centroid plus or minus 4.5 standard deviations per coordinate.
fn default_bbox(y: &MomentSequence) -> Result<[[f64; 2]; 2], Error> {
    let c = y.centroid()?;
    let mut bbox = [[0.0; 2]; 2];
    for (i, b) in bbox.iter_mut().enumerate() {
        let e = MultiIndex::unit(2, i);
        let var = (y.get(&e.add(&e))? / y.mass() - c[i] * c[i]).max(0.0);
        let h = 4.5 * var.sqrt().max(1e-12);
        *b = [c[i] - h, c[i] + h];
    }
    Ok(bbox)
}

fn recover(a: &RecoverArgs, run: &mut Run) -> Result<(), Failure> {
    let d = a.d;
    let variant: Option<CoordinateVariant> = a.variant.as_deref().map(str::parse).transpose()?;
    let mode: Option<ApproxMode> = a.mode.as_deref().map(str::parse).transpose()?;
    let strategy = a.method.unwrap_or(if variant.is_some() {
        Strategy::Singular
    } else if mode.is_some() {
        Strategy::Approx
    } else if a.recenter {
        Strategy::Convex
    } else {
        Strategy::Boundary
    });
    let default_order = match (a.k, strategy) {
        (Some(k), _) => d + k,
        (None, Strategy::Approx) => 2 * d,
        (None, _) => 3 * d,
    };
    if a.k.is_none() {
        run.resolve("method", serde_json::to_value(strategy).expect("enum serializes"));
    }
    let y = load(&a.input, a.max_order, default_order, run)?;
    let report = match a.k {
        Some(k) => {
            let r = kernel_solve(&assemble_renorm(&y, d, k)?, a.rank_tol)?;
            RecoveryReport {
                decisive_k: Some(k),
                ..r
            }
        }
        None => match strategy {
            Strategy::Boundary => recover_boundary(&y, d, a.rank_tol)?,
            Strategy::MinOrder => recover_min_order(&y, d, a.rank_tol)?,
            Strategy::Convex => recover_convex(&y, d, a.recenter, a.rank_tol)?,
            Strategy::Singular => recover_singular(&y, d, variant.unwrap_or_default(), a.rank_tol)?,
            Strategy::Approx => approx_boundary(&y, d, mode.unwrap_or_default())?,
        },
    };
    run.write("report.json", &report.to_json()?)?;
    print_report(&report);
    if let Some(path) = &a.emit_contour {
        let bbox = match &a.bbox {
            Some(s) => parse_bbox(s)?,
            None => default_bbox(&y)?,
        };
        run.resolve("bbox", serde_json::to_value(bbox).expect("array serializes"));
        let segments = level_set(&report.polynomial, report.boundary_level.unwrap_or(0.0), bbox, a.resolution)?;
        let mut buf = Vec::new();
        write_contour_csv(&segments, &mut buf)?;
        run.write_path(path, &String::from_utf8(buf).expect("csv is utf-8"))?;
    }
    if a.k.is_some() && !(report.unique && report.consistent) {
        let why = if report.consistent { "solution not unique" } else { "no solution" };
        return Err(Failure::new("assumptions-violated", format!("M^{d}_{}: {why}", a.k.unwrap_or(0))));
    }
    Ok(())
}

fn recover_exp(a: &RecoverExpArgs, run: &mut Run) -> Result<(), Failure> {
    let y = load(&a.input, a.max_order, 2 * a.d, run)?;
    let report = recover_exp_weight(&y, a.d, a.input.tol)?;
    run.write("report.json", &report.to_json()?)?;
    print_report(&report);
    Ok(())
}

/// Largest `|extended - oracle| / max(1, |oracle|)` over the checked entries.
fn scaled_error(ext: &ExtensionResult) -> f64 {
    ext.checked
        .values()
        .map(|c| (c.extended - c.oracle).abs() / c.oracle.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn extend(a: &ExtendArgs, run: &mut Run) -> Result<(), Failure> {
    let d = a.d;
    let f = parse_fixture(&a.input)?;
    let weight = a.weight.unwrap_or(match f {
        Some(Fixture::Gaussian { .. }) => WeightArg::Global,
        _ => WeightArg::None,
    });
    run.resolve("weight", serde_json::to_value(weight).expect("enum serializes"));
    let default_prefix = if weight == WeightArg::Global { 2 * d } else { 3 * d };
    let y = load(&a.input, a.prefix_order, default_prefix, run)?;
    if a.max_order <= y.max_order() {
        return Err(Error::InvalidArgument(format!(
            "--max-order {} does not exceed the prefix order {}",
            a.max_order,
            y.max_order()
        ))
        .into());
    }
    let targets: Vec<MultiIndex> = enumerate_basis(y.n(), a.max_order)?
        .iter()
        .filter(|b| b.degree() > y.max_order())
        .cloned()
        .collect();
    let mut ext = match weight {
        WeightArg::None => extend_moments(&y, d, &targets, a.input.tol)?,
        WeightArg::Global => extend_moments_expglobal(&y, d, &targets, a.input.tol)?,
    };
    let oracle = match (&a.oracle, &f) {
        (Some(path), _) => Some(read_moment_file(path)?.to_sequence()?),
        (None, Some(f)) => Some(f.moments(
            a.max_order,
            a.input.moment_method,
            a.input.tol,
            a.input.samples,
            a.input.seed,
        )?),
        (None, None) => None,
    };
    if let Some(o) = &oracle {
        ext.check_against(o);
    }
    for w in &ext.warnings {
        run.warn(w.clone());
        println!("warning: {w}");
    }
    run.write("extended.json", &to_json_string(&MomentFile::from_table(&ext.prefix, &ext.table))?)?;
    run.write("report.json", &ext.recovered.to_json()?)?;
    print_report(&ext.recovered);
    println!("{} moments extended to order {}", targets.len(), a.max_order);
    if ext.checked.is_empty() {
        return Ok(());
    }
    let mut buf = Vec::new();
    ext.write_checked_csv(&mut buf)?;
    run.write("checked.csv", &String::from_utf8(buf).expect("csv is utf-8"))?;
    let err = scaled_error(&ext);
    let limit = 10.0 * a.input.tol;
    println!("checked {} entries: max |error| / max(1, |oracle|) = {}", ext.checked.len(), fmt_short(err));
    if err > limit {
        return Err(Failure::new(
            "tolerance-not-met",
            format!("extension error {} exceeds {}", fmt_f64(err), fmt_f64(limit)),
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct DiagnoseEntry {
    k: usize,
    rows: usize,
    cols: usize,
    rank: usize,
    singular_values: Vec<f64>,
    eigenvalues: Option<Vec<[f64; 2]>>,
    /// `(-1, g)` when the kernel is one-dimensional, otherwise a unit basis.
    kernel: Vec<Vec<f64>>,
    note: Option<String>,
}

#[derive(Serialize)]
struct Diagnosis {
    d: usize,
    rank_tol: f64,
    entries: Vec<DiagnoseEntry>,
}

fn listing(values: &[String]) -> String {
    let lines: Vec<String> = values.chunks(4).map(|c| c.join(", ")).collect();
    format!("  ({})", lines.join(",\n   "))
}

fn complex_text(z: [f64; 2]) -> String {
    if z[1] == 0.0 {
        fmt_short(z[0])
    } else {
        format!("{}{}{}i", fmt_short(z[0]), if z[1] < 0.0 { "-" } else { "+" }, fmt_short(z[1].abs()))
    }
}

fn diagnose(a: &DiagnoseArgs, run: &mut Run) -> Result<(), Failure> {
    let d = a.d;
    let y = load(&a.input, a.max_order, 3 * d, run)?;
    let top = (2 * d).min(y.max_order().saturating_sub(d));
    if top < d {
        let mut e = vec![0u32; y.n()];
        e[0] = (2 * d) as u32;
        return Err(Error::MissingMoment {
            alpha: MultiIndex::new(e)?,
            max_order: y.max_order(),
        }
        .into());
    }
    let mut entries = Vec::new();
    let mut text = format!("M^{d}_k(y) for k = {d}..{top}, rank tolerance {}\n", fmt_short(a.rank_tol));
    for k in d..=top {
        let m = assemble_renorm(&y, d, k)?;
        let mut csv = Vec::new();
        m.write_csv(&mut csv)?;
        run.write(&format!("renorm_d{d}_k{k}.csv"), &String::from_utf8(csv).expect("csv is utf-8"))?;
        let entry = match kernel_solve(&m, a.rank_tol) {
            Ok(r) => {
                let smax = r.spectrum.first().copied().unwrap_or(0.0);
                let rank = r.spectrum.iter().filter(|&&s| s > a.rank_tol * smax).count();
                let kernel = if !r.consistent {
                    Vec::new()
                } else if r.kernel.is_empty() {
                    vec![r.solution_vector.clone()]
                } else {
                    r.kernel.clone()
                };
                let mut eigenvalues = r.eigenvalues.clone();
                if let Some(ev) = eigenvalues.as_mut() {
                    ev.sort_by(|p, q| q[0].hypot(q[1]).total_cmp(&p[0].hypot(p[1])));
                }
                DiagnoseEntry {
                    k,
                    rows: m.nrows(),
                    cols: m.ncols(),
                    rank,
                    singular_values: r.spectrum,
                    eigenvalues,
                    kernel,
                    note: None,
                }
            }
            Err(e @ Error::DegenerateSystem(_)) => DiagnoseEntry {
                k,
                rows: m.nrows(),
                cols: m.ncols(),
                rank: 0,
                singular_values: Vec::new(),
                eigenvalues: None,
                kernel: Vec::new(),
                note: Some(e.to_string()),
            },
            Err(e) => return Err(e.into()),
        };
        text.push_str(&format!(
            "\nk = {k}: {} x {}, {}rank {}\n",
            entry.rows,
            entry.cols,
            if entry.rank == entry.rows.min(entry.cols) { "full " } else { "" },
            entry.rank
        ));
        if let Some(note) = &entry.note {
            text.push_str(&format!("note: {note}\n"));
        }
        if !entry.singular_values.is_empty() {
            let sv: Vec<String> = entry.singular_values.iter().map(|&s| fmt_short(s)).collect();
            text.push_str(&format!("singular values:\n{}\n", listing(&sv)));
        }
        if let Some(ev) = &entry.eigenvalues {
            let ev: Vec<String> = ev.iter().map(|&z| complex_text(z)).collect();
            text.push_str(&format!("eigenvalues:\n{}\n", listing(&ev)));
        }
        match entry.kernel.len() {
            0 => text.push_str("kernel: none\n"),
            1 => {
                let v: Vec<String> = entry.kernel[0].iter().map(|&x| fmt_short(x)).collect();
                text.push_str(&format!("kernel vector:\n{}\n", listing(&v)));
            }
            n => {
                text.push_str(&format!("kernel basis ({n} vectors):\n"));
                for v in &entry.kernel {
                    let v: Vec<String> = v.iter().map(|&x| fmt_short(x)).collect();
                    text.push_str(&format!("{}\n", listing(&v)));
                }
            }
        }
        entries.push(entry);
    }
    run.write("diagnose.txt", &text)?;
    run.write(
        "diagnose.json",
        &to_json_string(&Diagnosis {
            d,
            rank_tol: a.rank_tol,
            entries,
        })?,
    )?;
    print!("{text}");
    Ok(())
}
