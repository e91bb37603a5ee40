use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use jnbellman::candidates::{evaluate, CandidateKind};
use jnbellman::num::Num;
use jnbellman::optimizers::{averages, AverageTriple};
use jnbellman::scalar::{c_threshold, eps0, jn_bound_p1, jn_sharp_c, omega};
use jnbellman::verification::sampling::OptimizerKind;
use jnbellman::verification::scan::scan_ainfty;
use jnbellman::verification::suites::{run_suite, SuiteOptions};
use jnbellman::verification::{ScanConfig, VerificationReport};
use jnbellman::{DomainParams, FunctionKind, PieceKind, PiecewiseLogStep, Point, Tolerance};
use serde::Serialize;

use crate::output::{write_json, Cell, Format, Table};
use crate::{CandidateArg, Cli, Command, ExtraArgs, OptimizerArg, PointArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Io(_) => ExitCode::from(3),
        }
    }
}

impl From<jnbellman::Error> for CliError {
    fn from(e: jnbellman::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    let format = cli.format;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Constants { p, eps } => constants(&p, &eps, format.unwrap_or(Format::Text), &mut out),
        Command::Bellman { kind, point, extra } => bellman(kind, &point, &extra, format.unwrap_or(Format::Text), &mut out),
        Command::Optimizer { kind, point, lambda, average, depth, out: path } => {
            let doc = optimizer(kind, &point, lambda, average.as_deref(), depth)?;
            match path {
                Some(path) => {
                    let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                    let mut w = BufWriter::new(file);
                    doc.write(format.unwrap_or(Format::Json), &mut w)?;
                    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                }
                None => doc.write(format.unwrap_or(Format::Text), &mut out)?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, depth, tol, seed, samples } => {
            verify(&suite, depth, tol, seed, samples, format.unwrap_or(Format::Text), &mut out)
        }
        Command::Tabulate { kind, c, extra, x1, ratio } => {
            tabulate(kind, c, &extra, &x1, ratio.as_deref(), format.unwrap_or(Format::Csv), &mut out)
        }
    }
}

fn params(c: f64) -> Result<DomainParams> {
    Ok(DomainParams::new(c)?)
}

fn point(args: &PointArgs) -> Result<(DomainParams, Point)> {
    let params = params(args.c)?;
    Ok((params, Point::new(args.x[0], args.x[1])))
}

fn constants(ps: &[f64], eps: &[f64], format: Format, out: &mut dyn Write) -> Result<ExitCode> {
    for &p in ps {
        if !(1.0..=2.0).contains(&p) {
            return Err(usage(format!("p must be in [1, 2], got {p}")));
        }
    }
    let table = if eps.is_empty() {
        let mut t = Table::new(&["p", "eps0", "omega", "c_threshold"]);
        for &p in ps {
            t.push(vec![p.into(), eps0(p)?.into(), omega(p)?.into(), c_threshold(p).into()]);
        }
        t
    } else {
        let mut t = Table::new(&["p", "eps0", "eps", "C", "C_lower", "C_upper"]);
        for &p in ps {
            let e0 = eps0(p)?;
            for &e in eps {
                let row = if p == 1.0 {
                    let (lo, hi) = jn_bound_p1(e, &Tolerance::default())?;
                    vec![p.into(), e0.into(), e.into(), Cell::Empty, lo.into(), hi.into()]
                } else {
                    let c = jn_sharp_c(e, p)?;
                    vec![p.into(), e0.into(), e.into(), c.into(), Cell::Empty, Cell::Empty]
                };
                t.push(row);
            }
        }
        t
    };
    table.write(format, out)?;
    Ok(ExitCode::SUCCESS)
}

fn candidate(kind: CandidateArg, extra: &ExtraArgs) -> Result<CandidateKind> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| usage(format!("--{name} is required for this kind")));
    Ok(match kind {
        CandidateArg::BP => {
            let p = need(extra.p, "p")?;
            if !(1.0..=2.0).contains(&p) {
                return Err(usage(format!("p must be in [1, 2], got {p}")));
            }
            CandidateKind::LowerP(p)
        }
        CandidateArg::B1 => CandidateKind::LowerP(1.0),
        CandidateArg::BigB2 => CandidateKind::UpperSquare,
        CandidateArg::A => {
            let delta = need(extra.delta, "delta")?;
            if !(delta >= 1.0 && delta.is_finite()) {
                return Err(usage(format!("delta must be >= 1, got {delta}")));
            }
            CandidateKind::ExpDelta(delta)
        }
        CandidateArg::D => {
            let lambda = need(extra.lambda, "lambda")?;
            if !lambda.is_finite() {
                return Err(usage("lambda must be finite"));
            }
            CandidateKind::WeakType(lambda)
        }
    })
}

fn kind_label(kind: &CandidateKind) -> String {
    match *kind {
        CandidateKind::LowerP(p) if p == 1.0 => "b1".into(),
        CandidateKind::LowerP(p) => format!("b_p(p={p})"),
        CandidateKind::UpperSquare => "B2".into(),
        CandidateKind::ExpDelta(d) => format!("A(delta={d})"),
        CandidateKind::WeakType(l) => format!("D(lambda={l})"),
    }
}

const EVAL_COLUMNS: [&str; 7] = ["x1", "x2", "value", "region", "u_plus", "u_minus", "v"];

fn eval_row(kind: &CandidateKind, x: &Point, params: &DomainParams) -> Result<(Vec<Cell>, Vec<String>)> {
    let e = evaluate(kind, x, params)?;
    let row = vec![
        x.x1.into(),
        x.x2.into(),
        e.value.to_f64().into(),
        e.region.map_or(Cell::Empty, Cell::Text),
        e.u_plus.into(),
        e.u_minus.into(),
        e.v.into(),
    ];
    Ok((row, e.flags))
}

fn bellman(kind: CandidateArg, p: &PointArgs, extra: &ExtraArgs, format: Format, out: &mut dyn Write) -> Result<ExitCode> {
    let kind = candidate(kind, extra)?;
    let (params, x) = point(p)?;
    let (row, flags) = eval_row(&kind, &x, &params)?;
    let mut columns = vec!["kind", "C"];
    columns.extend(EVAL_COLUMNS);
    columns.extend(["xi_plus", "xi_minus", "below_threshold", "flags"]);
    let mut cells: Vec<Cell> = vec![kind_label(&kind).into(), params.c.into()];
    cells.extend(row);
    let below = match kind {
        CandidateKind::LowerP(p) => Cell::Bool(params.c < c_threshold(p)),
        _ => Cell::Empty,
    };
    cells.extend([params.xi_plus.into(), params.xi_minus.into(), below, flags.join("; ").into()]);
    let mut t = Table::new(&columns);
    t.push(cells);
    t.write_record(format, out)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_average(spec: &str) -> Result<FunctionKind> {
    let bad = || usage(format!("--average must be square, abs:P, exp:DELTA or above:LEVEL, got '{spec}'"));
    if spec == "square" {
        return Ok(FunctionKind::Square);
    }
    let (name, arg) = spec.split_once(':').ok_or_else(bad)?;
    let v: f64 = arg.parse().map_err(|_| bad())?;
    match name {
        "abs" => Ok(FunctionKind::AbsPow(v)),
        "exp" => Ok(FunctionKind::Exp(v)),
        "above" => Ok(FunctionKind::IndicatorAbove(v)),
        _ => Err(bad()),
    }
}

fn average_label(f: &FunctionKind) -> String {
    match *f {
        FunctionKind::Square => "square".into(),
        FunctionKind::AbsPow(p) => format!("abs:{p}"),
        FunctionKind::Exp(d) => format!("exp:{d}"),
        FunctionKind::IndicatorAbove(l) => format!("above:{l}"),
    }
}

#[derive(Serialize)]
pub struct Characteristic {
    value: Num,
    witness: [Num; 2],
    depth: u32,
}

#[derive(Serialize)]
pub struct OptimizerDoc {
    kind: String,
    #[serde(rename = "C")]
    c: Num,
    x: [Num; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<Num>,
    function: PiecewiseLogStep,
    average_of: String,
    averages: AverageTriple,
    characteristic: Characteristic,
}

impl OptimizerDoc {
    fn pieces(&self) -> Table {
        let mut t = Table::new(&["lo", "hi", "kind", "value", "u", "xi", "alpha"]);
        for p in self.function.pieces() {
            let row = match p.kind {
                PieceKind::Constant { value } => {
                    vec![p.lo.into(), p.hi.into(), "constant".into(), value.into(), Cell::Empty, Cell::Empty, Cell::Empty]
                }
                PieceKind::LogRamp { u, xi, alpha } => {
                    vec![p.lo.into(), p.hi.into(), "log_ramp".into(), Cell::Empty, u.into(), xi.into(), alpha.into()]
                }
            };
            t.push(row);
        }
        t
    }

    fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Json => write_json(self, out),
            Format::Csv => self.pieces().write(Format::Csv, out),
            Format::Text => {
                let mut s = Table::new(&["kind", "C", "x1", "x2", "average_of", "mean", "exp_mean", "f_mean", "characteristic"]);
                s.push(vec![
                    self.kind.as_str().into(),
                    self.c.0.into(),
                    self.x[0].0.into(),
                    self.x[1].0.into(),
                    self.average_of.as_str().into(),
                    self.averages.mean.into(),
                    self.averages.exp_mean.to_f64().into(),
                    self.averages.f_mean.to_f64().into(),
                    self.characteristic.value.0.into(),
                ]);
                s.write_record(Format::Text, out)?;
                writeln!(out)?;
                self.pieces().write(Format::Text, out)
            }
        }
    }
}

fn optimizer(kind: OptimizerArg, p: &PointArgs, lambda: Option<f64>, average: Option<&str>, depth: u32) -> Result<OptimizerDoc> {
    let (params, x) = point(p)?;
    let which = match kind {
        OptimizerArg::PhiPlus => OptimizerKind::PhiPlus,
        OptimizerArg::PhiMinus => OptimizerKind::PhiMinus,
        OptimizerArg::Psi => OptimizerKind::Psi,
        OptimizerArg::Eta => {
            let l = lambda.ok_or_else(|| usage("--lambda is required for eta"))?;
            if !l.is_finite() {
                return Err(usage("lambda must be finite"));
            }
            OptimizerKind::Eta(l)
        }
    };
    let phi = which.build(&x, &params)?;
    let f = match average {
        Some(s) => parse_average(s)?,
        None => match which {
            OptimizerKind::Psi => FunctionKind::AbsPow(1.0),
            OptimizerKind::Eta(l) => FunctionKind::IndicatorAbove(l),
            _ => FunctionKind::Square,
        },
    };
    let avg = averages(&phi, &f, 0.0, 1.0)?;
    let cfg = ScanConfig::with_depth(depth)?;
    let scan = scan_ainfty(&phi, &cfg)?;
    Ok(OptimizerDoc {
        kind: which.name().into(),
        c: Num(params.c),
        x: [Num(x.x1), Num(x.x2)],
        lambda: match which {
            OptimizerKind::Eta(l) => Some(Num(l)),
            _ => None,
        },
        function: phi,
        average_of: average_label(&f),
        averages: avg,
        characteristic: Characteristic { value: Num(scan.value), witness: [Num(scan.witness.0), Num(scan.witness.1)], depth },
    })
}

fn verify(
    suite: &str,
    depth: u32,
    tol: Option<f64>,
    seed: u64,
    samples: usize,
    format: Format,
    out: &mut dyn Write,
) -> Result<ExitCode> {
    let mut cfg = ScanConfig::with_depth(depth)?;
    if let Some(t) = tol {
        cfg.tol = Tolerance::new(t, t, cfg.tol.max_iter)?;
    }
    cfg.samples = samples;
    let reports = run_suite(suite, &SuiteOptions { cfg, seed })?;
    let passed = reports.iter().all(|r| r.passed);
    write_reports(&reports, format, out)?;
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn write_reports(reports: &[VerificationReport], format: Format, out: &mut dyn Write) -> io::Result<()> {
    match format {
        Format::Json => write_json(reports, out),
        Format::Csv => {
            let mut t = Table::new(&["name", "passed", "checks", "worst_residual", "tolerance_used", "flags"]);
            for r in reports {
                t.push(vec![
                    r.name.as_str().into(),
                    r.passed.into(),
                    Cell::Text(r.checks.to_string()),
                    r.worst_residual.into(),
                    r.tolerance_used.into(),
                    r.flags.join("; ").into(),
                ]);
            }
            t.write(Format::Csv, out)
        }
        Format::Text => {
            for r in reports {
                writeln!(out, "{r}")?;
            }
            let failed = reports.iter().filter(|r| !r.passed).count();
            writeln!(out, "{} reports, {failed} failed", reports.len())
        }
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || usage(format!("grid must be LO:HI:N with N >= 1, got '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else { return Err(bad()) };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    if n == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect())
}

fn tabulate(
    kind: CandidateArg,
    c: f64,
    extra: &ExtraArgs,
    x1: &str,
    ratio: Option<&str>,
    format: Format,
    out: &mut dyn Write,
) -> Result<ExitCode> {
    let kind = candidate(kind, extra)?;
    let params = params(c)?;
    let x1s = parse_grid(x1)?;
    let rs = match ratio {
        Some(s) => parse_grid(s)?,
        None => parse_grid(&format!("1:{c}:11"))?,
    };
    if let Some(r) = rs.iter().find(|&&r| !(1.0..=c).contains(&r)) {
        return Err(usage(format!("ratios must lie in [1, C], got {r}")));
    }
    let mut columns = vec!["ratio"];
    columns.extend(EVAL_COLUMNS);
    let mut t = Table::new(&columns);
    for &a in &x1s {
        for &r in &rs {
            let x = Point::on_gamma(r, a);
            let (row, _) = eval_row(&kind, &x, &params)?;
            let mut cells = vec![Cell::Num(r)];
            cells.extend(row);
            t.push(cells);
        }
    }
    t.write(format, out)?;
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("-1:1:1").unwrap(), vec![-1.0]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn averages_parse() {
        assert_eq!(parse_average("abs:1.5").unwrap(), FunctionKind::AbsPow(1.5));
        assert_eq!(parse_average("above:-2").unwrap(), FunctionKind::IndicatorAbove(-2.0));
        assert!(parse_average("cube").is_err());
    }
}
