//! Command-line front end. Argument parsing and output only.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{log_beads, Estimator, FitOptions, Precision, Reference};
use crate::config::{load_config, resolve_family, ParamOverrides};
use crate::energies::{energies, energies_at_tau, EnergyResult};
use crate::error::{Error, Result};
use crate::grid_oracle::{oracle_energies, GridSpec, OracleEnergies, Quadrature};
use crate::optimize::{ca_sixth_order_locus, solve_conditions, OptimizationResult, OptimizationTarget, Status};
use crate::propagator::{ContractedPropagator, Family, FamilyParams};
use crate::reports::{self, Kind, Table};

#[derive(Parser, Debug)]
#[command(name = "pimc-ho", version, about = "Analytic PIMC energies of the harmonic oscillator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// PA and TI thermodynamic energies at tau = 5.
    Table1(OutputArgs),
    /// CA1, CA2, BD' and BD* energies at tau = 5.
    Table2(OutputArgs),
    /// N-bead energies of one propagator.
    Energies(EnergiesArgs),
    /// Figure data, one CSV per panel.
    Figures(FiguresArgs),
    /// Error sweep and fitted convergence order.
    Convergence(ConvergenceArgs),
    /// Solve for family parameters.
    Optimize(OptimizeArgs),
    /// Compare analytic energies with the grid-kernel oracle.
    Oracle(OracleArgs),
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct PropagatorArgs {
    /// Family or preset: pa_ti, 4a, bda, acb, exact, pa, ti, 4a', bd, bd', bd*, ca1, ca2.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub t1: Option<f64>,
    #[arg(long)]
    pub a1: Option<f64>,
    /// Propagator definition file.
    #[arg(long, conflicts_with = "family")]
    pub config: Option<PathBuf>,
}

impl PropagatorArgs {
    fn overrides(&self) -> ParamOverrides {
        ParamOverrides { alpha: self.alpha, t0: self.t0, t1: self.t1, a1: self.a1 }
    }

    pub fn propagator(&self) -> Result<ContractedPropagator> {
        if let Some(path) = &self.config {
            if self.overrides() != ParamOverrides::default() {
                return Err(Error::InvalidArgument("parameters cannot be combined with --config".into()));
            }
            return load_config(path)?.into_propagator();
        }
        let name = self
            .family
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("one of --family or --config is required".into()))?;
        let (label, params) = resolve_family(name, self.overrides())?;
        Ok(ContractedPropagator::from_family(&params)?.with_label(label))
    }
}

#[derive(Args, Debug, Clone)]
pub struct TimeArgs {
    /// Total imaginary time; eps = tau/N.
    #[arg(long, conflicts_with = "eps")]
    pub tau: Option<f64>,
    /// Fixed step per bead; tau = N eps.
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Time {
    Tau(f64),
    Eps(f64),
}

impl TimeArgs {
    pub fn time(&self) -> Result<Time> {
        match (self.tau, self.eps) {
            (Some(t), None) if t > 0.0 && t.is_finite() => Ok(Time::Tau(t)),
            (None, Some(e)) if e > 0.0 && e.is_finite() => Ok(Time::Eps(e)),
            (None, None) => Err(Error::InvalidArgument("one of --tau or --eps is required".into())),
            (Some(_), Some(_)) => Err(Error::InvalidArgument("give only one of --tau and --eps".into())),
            (t, e) => Err(Error::InvalidArgument(format!(
                "time must be positive, got {}",
                t.or(e).unwrap_or(f64::NAN)
            ))),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct EnergiesArgs {
    #[command(flatten)]
    pub prop: PropagatorArgs,
    #[command(flatten)]
    pub time: TimeArgs,
    /// Bead numbers: `2,4,8`, `2..16` or `2..1024*2`.
    #[arg(long)]
    pub n: String,
    #[arg(long, default_value = "both")]
    pub kind: Kind,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct FiguresArgs {
    /// Figure number, 1 to 4; all when omitted.
    #[arg(long)]
    pub figure: Option<u8>,
    /// Directory for the CSV files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub prop: PropagatorArgs,
    #[arg(long, default_value_t = 10.0)]
    pub tau: f64,
    /// Bead numbers of the sweep; defaults to 41 log-spaced values in 10..1000.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long, default_value = "thermo")]
    pub kind: Estimator,
    #[arg(long, default_value = "universal")]
    pub reference: Reference,
    /// `double` or `extended`; overrides PIMC_HO_PRECISION.
    #[arg(long)]
    pub precision: Option<Precision>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetName {
    /// PA_TI with delta_4 = 1.
    Fourth,
    /// 4A with delta_6 = 1.
    Sixth,
    /// BDA with delta_6 = 1 and maximal delta_8.
    MaxDelta8,
    /// BDA or ACB with delta_6 = 1 and delta'_5 = 1.
    Twelfth,
    /// ACB roots of delta_6 = 1 along a1.
    Locus,
}

#[derive(Args, Debug, Clone)]
pub struct OptimizeArgs {
    /// pa_ti, 4a, bda or acb.
    #[arg(long)]
    pub family: String,
    #[arg(long, value_enum)]
    pub target: Option<TargetName>,
    /// a1 values for the locus; defaults to 0, 0.05, ..., 0.5.
    #[arg(long, value_delimiter = ',')]
    pub a1: Vec<f64>,
    #[arg(long)]
    pub precision: Option<Precision>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct OracleArgs {
    #[command(flatten)]
    pub prop: PropagatorArgs,
    #[command(flatten)]
    pub time: TimeArgs,
    #[arg(long)]
    pub n: String,
    /// Grid half width.
    #[arg(long = "grid-L")]
    pub grid_l: Option<f64>,
    /// Number of grid points (odd for Simpson).
    #[arg(long = "grid-M")]
    pub grid_m: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Bead list from `a,b,c`, `a..b` or `a..b*r` (also `a..bxr`).
pub fn parse_beads(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("cannot read bead list {spec:?}"));
    let int = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let out: Vec<usize> = if let Some((lo, rest)) = spec.split_once("..") {
        let (hi, ratio) = match rest.split_once(['*', 'x']) {
            Some((h, r)) => (h, Some(r.trim().parse::<f64>().map_err(|_| bad())?)),
            None => (rest, None),
        };
        let (lo, hi) = (int(lo)?, int(hi)?);
        if lo == 0 || hi < lo {
            return Err(bad());
        }
        match ratio {
            None => (lo..=hi).collect(),
            Some(r) if r > 1.0 => {
                let mut v = Vec::new();
                let mut x = lo as f64;
                while x.round() as usize <= hi {
                    let k = x.round() as usize;
                    if v.last() != Some(&k) {
                        v.push(k);
                    }
                    x *= r;
                }
                v
            }
            Some(_) => return Err(bad()),
        }
    } else {
        spec.split(',').map(int).collect::<Result<_>>()?
    };
    if out.is_empty() {
        return Err(bad());
    }
    if out.contains(&0) {
        return Err(Error::InvalidArgument("bead numbers must be at least 1".into()));
    }
    Ok(out)
}

fn precision(flag: Option<Precision>) -> Result<Precision> {
    flag.map_or_else(Precision::from_env, Ok)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)
            .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut s = io::stdout().lock();
            // A closed pipe is not an error worth reporting.
            let _ = s.write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn emit_table(t: &Table, o: &OutputArgs) -> Result<()> {
    let text = match o.format {
        Format::Table => t.render_text(),
        Format::Csv => t.render_csv()?,
    };
    emit(&text, o.out.as_deref())
}

fn energy_results(prop: &ContractedPropagator, beads: &[usize], time: Time) -> Result<Vec<EnergyResult>> {
    beads
        .iter()
        .map(|&n| match time {
            Time::Tau(t) => energies_at_tau(prop, n, t),
            Time::Eps(e) => energies(prop, n, e),
        })
        .collect()
}

fn family_of(name: &str) -> Result<Family> {
    match name.trim().to_ascii_lowercase().as_str() {
        "pa_ti" | "pati" | "pa-ti" | "pa" | "ti" => Ok(Family::PaTi),
        "4a" | "foura" | "4a'" => Ok(Family::FourA),
        "bda" | "bd" | "bd'" | "bd*" => Ok(Family::Bda),
        "acb" | "ca" | "ca1" | "ca2" => Ok(Family::Acb),
        other => Err(Error::InvalidArgument(format!(
            "cannot optimize family {other:?}; expected pa_ti, 4a, bda or acb"
        ))),
    }
}

fn target_for(family: Family, target: Option<TargetName>) -> Result<OptimizationTarget> {
    use TargetName::*;
    let t = target.unwrap_or(match family {
        Family::PaTi => Fourth,
        Family::FourA => Sixth,
        Family::Bda | Family::Acb => Twelfth,
        Family::Exact => Fourth,
    });
    match (family, t) {
        (Family::PaTi, Fourth) => Ok(OptimizationTarget::ti()),
        (Family::FourA, Sixth) => Ok(OptimizationTarget::four_a_prime()),
        (Family::Bda, MaxDelta8) => Ok(OptimizationTarget::bd_prime()),
        (Family::Bda, Twelfth) => Ok(OptimizationTarget::bd_star()),
        (Family::Acb, Twelfth) => Ok(OptimizationTarget::ca_twelfth()),
        (f, t) => Err(Error::InvalidArgument(format!(
            "target {} does not apply to family {}",
            t.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default(),
            f.name()
        ))),
    }
}

fn param_text(p: &FamilyParams) -> String {
    match *p {
        FamilyParams::PaTi { alpha } | FamilyParams::FourA { alpha } => format!("alpha = {alpha:.12}"),
        FamilyParams::Bda { t1, alpha } => format!("t1 = {t1:.12}\nalpha = {alpha:.12}"),
        FamilyParams::Acb { t0, a1 } => format!("t0 = {t0:.12}\na1 = {a1:.12}"),
        FamilyParams::Exact => String::new(),
    }
}

fn optimization_text(r: &OptimizationResult, format: Format) -> String {
    let mut lines = Vec::new();
    match (r.status, &r.params) {
        (Status::Solved, Some(p)) => {
            lines.push(format!("{}: solved", r.label));
            lines.extend(param_text(p).lines().map(String::from));
            for (c, v) in &r.achieved {
                lines.push(format!("{c} = {v:.12}"));
            }
            if let Some(prof) = &r.profile {
                lines.push(format!("zeta matches through eps^{}, kappa through eps^{}", 2 * prof.n, 2 * prof.m - 1));
                lines.push(format!("thermo order {}, C = {:.9e}", prof.thermo_order, prof.c));
                match prof.hamiltonian_order {
                    Some(o) => lines.push(format!(
                        "hamiltonian order {o}, D = {:.9e}, D^2/2 = {:.9e}",
                        prof.d, prof.half_d_squared
                    )),
                    None => lines.push("hamiltonian error vanishes through the truncation".into()),
                }
            }
        }
        _ => lines.push(format!("{}: no real solution", r.label)),
    }
    match format {
        Format::Table => lines.join("\n") + "\n",
        Format::Csv => {
            let mut s = String::from("key,value\n");
            s.push_str(&format!("label,{}\n", r.label));
            s.push_str(&format!("status,{}\n", if r.status == Status::Solved { "solved" } else { "no_real_solution" }));
            if let Some(p) = &r.params {
                for l in param_text(p).lines() {
                    if let Some((k, v)) = l.split_once(" = ") {
                        let v: f64 = v.parse().unwrap_or(f64::NAN);
                        s.push_str(&format!("{k},{}\n", reports::format_csv(v)));
                    }
                }
            }
            for (c, v) in &r.achieved {
                s.push_str(&format!("{c},{}\n", reports::format_csv(*v)));
            }
            s
        }
    }
}

fn locus_table(points: &[(f64, f64)]) -> Table {
    use reports::Cell;
    Table {
        title: "ACB parameters with delta_6 = 1".into(),
        headers: vec!["a1".into(), "t0".into()],
        rows: points.iter().map(|&(t0, a1)| vec![Cell::Number(a1, 8), Cell::Number(t0, 8)]).collect(),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Table1(o) => emit_table(&reports::table1()?, &o),
        Command::Table2(o) => emit_table(&reports::table2()?, &o),
        Command::Energies(a) => {
            let prop = a.prop.propagator()?;
            let beads = parse_beads(&a.n)?;
            let results = energy_results(&prop, &beads, a.time.time()?)?;
            emit_table(&reports::energy_table(&results, a.kind), &a.output)
        }
        Command::Figures(a) => {
            let which: Vec<u8> = a.figure.map_or_else(|| vec![1, 2, 3, 4], |f| vec![f]);
            fs::create_dir_all(&a.out)
                .map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", a.out.display())))?;
            for f in which {
                for panel in reports::figure(f)? {
                    let path = a.out.join(format!("{}.csv", panel.name));
                    let file = fs::File::create(&path)
                        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))?;
                    panel.write_csv(io::BufWriter::new(file))?;
                    eprintln!("wrote {}", path.display());
                }
            }
            Ok(())
        }
        Command::Convergence(a) => {
            let prop = a.prop.propagator()?;
            let prec = precision(a.precision)?;
            let mut opts = FitOptions { tau: a.tau, reference: a.reference, ..FitOptions::default() }.with_precision(prec);
            if let Some(n) = &a.n {
                opts.beads = parse_beads(n)?;
            } else {
                opts.beads = log_beads(10, 1000, 41);
            }
            let (table, fit) = reports::convergence_report(&prop, a.kind, &opts)?;
            let mut text = match a.output.format {
                Format::Table => table.render_text(),
                Format::Csv => table.render_csv()?,
            };
            let prefix = if a.output.format == Format::Csv { "# " } else { "" };
            text.push_str(&format!(
                "{prefix}fitted order {:.3} over eps in [{:.4e}, {:.4e}] from {} points, nominal {}\n",
                fit.slope,
                fit.window.0,
                fit.window.1,
                fit.points,
                fit.nominal.map_or("unknown".into(), |n| n.to_string())
            ));
            emit(&text, a.output.out.as_deref())
        }
        Command::Optimize(a) => {
            let family = family_of(&a.family)?;
            let prec = precision(a.precision)?;
            if a.target == Some(TargetName::Locus) {
                if family != Family::Acb {
                    return Err(Error::InvalidArgument("the locus target needs family acb".into()));
                }
                let grid: Vec<f64> =
                    if a.a1.is_empty() { (0..=10).map(|i| 0.05 * i as f64).collect() } else { a.a1.clone() };
                return emit_table(&locus_table(&ca_sixth_order_locus(&grid, prec)?), &a.output);
            }
            if !a.a1.is_empty() {
                return Err(Error::InvalidArgument("--a1 applies only to the locus target".into()));
            }
            let r = solve_conditions(&target_for(family, a.target)?, prec)?;
            emit(&optimization_text(&r, a.output.format), a.output.out.as_deref())
        }
        Command::Oracle(a) => {
            let prop = a.prop.propagator()?;
            let beads = parse_beads(&a.n)?;
            let d = GridSpec::default();
            let grid = GridSpec::new(
                a.grid_l.unwrap_or(d.half_width()),
                a.grid_m.unwrap_or(d.points()),
                Quadrature::Simpson,
            )?;
            let time = a.time.time()?;
            let pairs: Vec<(EnergyResult, OracleEnergies)> = match time {
                Time::Tau(t) => reports::oracle_check(&prop, &beads, &[t], grid)?,
                Time::Eps(e) => beads
                    .iter()
                    .map(|&n| Ok((energies(&prop, n, e)?, oracle_energies(&prop, n, e, grid)?)))
                    .collect::<Result<_>>()?,
            };
            emit_table(&reports::oracle_table(&pairs), &a.output)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bead_lists() {
        assert_eq!(parse_beads("2,4,8").unwrap(), vec![2, 4, 8]);
        assert_eq!(parse_beads("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_beads("2..1024*2").unwrap().len(), 10);
        assert_eq!(parse_beads("1..10x3").unwrap(), vec![1, 3, 9]);
        assert!(parse_beads("0,2").is_err());
        assert!(parse_beads("5..2").is_err());
        assert!(parse_beads("a").is_err());
        assert!(parse_beads("2..8*1").is_err());
    }

    #[test]
    fn time_is_exclusive() {
        let t = |tau, eps| TimeArgs { tau, eps }.time();
        assert_eq!(t(Some(5.0), None).unwrap(), Time::Tau(5.0));
        assert!(t(None, None).is_err());
        assert!(t(Some(5.0), Some(1.0)).is_err());
        assert!(t(Some(-1.0), None).is_err());
    }

    #[test]
    fn targets() {
        assert_eq!(target_for(Family::Bda, Some(TargetName::Twelfth)).unwrap().label, "BD*");
        assert_eq!(target_for(Family::PaTi, None).unwrap().label, "TI");
        assert!(target_for(Family::PaTi, Some(TargetName::Twelfth)).is_err());
        assert!(family_of("exact").is_err());
    }
}
