//! Tables and figure data assembled from the library calls.
//!
//! Nothing here computes; each cell comes from `energies`, `analysis`,
//! `optimize`, or `grid_oracle`. Tables print 8 decimals and CSV prints
//! 10 significant digits.

use std::io::Write;

use crate::analysis::{fit_order, log_beads, sweep, Estimator, FitOptions, OrderFit, Reference};
use crate::energies::{energies_at_tau, EnergyResult};
use crate::error::{Error, Result};
use crate::grid_oracle::{oracle_energies_at_tau, GridSpec, OracleEnergies};
use crate::propagator::{presets, ContractedPropagator};

pub const TABLE_TAU: f64 = 5.0;
pub const TABLE1_BEADS: [usize; 10] = [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024];
pub const TABLE2_BEADS: [usize; 6] = [2, 3, 4, 5, 6, 7];

/// Monte Carlo energies at τ = 5 published by Sakkos, Casulleras and
/// Boronat (J. Chem. Phys. 130, 204109 (2009)).
pub mod sakkos {
    pub const PA: [Option<f64>; 10] = [
        Some(0.30755),
        Some(0.43162),
        Some(0.48424),
        Some(0.50085),
        Some(0.50528),
        Some(0.50641),
        Some(0.50669),
        Some(0.50676),
        Some(0.50678),
        None,
    ];
    pub const TI: [Option<f64>; 10] = [
        Some(0.44702),
        Some(0.50053),
        Some(0.50630),
        Some(0.50675),
        Some(0.50678),
        Some(0.50678),
        None,
        None,
        None,
        None,
    ];
    pub const CA1: [Option<f64>; 6] =
        [Some(0.50444), Some(0.50649), Some(0.50673), Some(0.50677), Some(0.50678), Some(0.50678)];
    pub const CA2: [Option<f64>; 6] =
        [Some(0.50643), Some(0.50675), Some(0.50677), Some(0.50678), Some(0.50678), None];
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Text(String),
    /// Printed with the given number of decimals in text tables.
    Number(f64, usize),
    Empty,
}

impl Cell {
    fn fixed(v: f64) -> Self {
        Cell::Number(v, 8)
    }

    fn opt(v: Option<f64>, decimals: usize) -> Self {
        v.map_or(Cell::Empty, |v| Cell::Number(v, decimals))
    }

    fn text(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Number(v, d) => format!("{v:.d$}"),
            Cell::Empty => String::new(),
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Number(v, _) => format_csv(*v),
            Cell::Empty => String::new(),
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Number(v, _) => Some(*v),
            _ => None,
        }
    }
}

/// Ten significant digits.
pub fn format_csv(v: f64) -> String {
    format!("{v:.9e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn render_text(&self) -> String {
        let cols = self.headers.len();
        let cells: Vec<Vec<String>> =
            self.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
        let widths: Vec<usize> = (0..cols)
            .map(|c| {
                cells.iter().map(|r| r[c].len()).chain([self.headers[c].len()]).max().unwrap_or(0)
            })
            .collect();
        let mut out = format!("{}\n", self.title);
        let line = |row: &[String]| {
            row.iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        out.push_str(&line(&self.headers));
        out.push('\n');
        out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        out.push('\n');
        for r in &cells {
            out.push_str(line(r).trim_end());
            out.push('\n');
        }
        out
    }

    pub fn render_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record(&self.headers).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    /// Column by header name.
    pub fn column(&self, header: &str) -> Option<Vec<Cell>> {
        let c = self.headers.iter().position(|h| h == header)?;
        Some(self.rows.iter().map(|r| r[c].clone()).collect())
    }
}

fn preset(name: &str) -> ContractedPropagator {
    presets::propagator(name).expect("built-in preset")
}

/// PA and TI thermodynamic energies at τ = 5 next to the Monte Carlo values.
pub fn table1() -> Result<Table> {
    let (pa, ti) = (preset("PA"), preset("TI"));
    let mut rows = Vec::new();
    for (i, &n) in TABLE1_BEADS.iter().enumerate() {
        rows.push(vec![
            Cell::Text(n.to_string()),
            Cell::opt(sakkos::PA[i], 5),
            Cell::fixed(energies_at_tau(&pa, n, TABLE_TAU)?.thermo),
            Cell::opt(sakkos::TI[i], 5),
            Cell::fixed(energies_at_tau(&ti, n, TABLE_TAU)?.thermo),
        ]);
    }
    let exact = energies_at_tau(&ContractedPropagator::exact(), 1, TABLE_TAU)?.thermo;
    rows.push(vec![Cell::Text("inf".into()), Cell::Empty, Cell::fixed(exact), Cell::Empty, Cell::Empty]);
    Ok(Table {
        title: "Thermodynamic energies at tau = 5".into(),
        headers: ["N", "Sakkos PA", "PA", "Sakkos TI", "TI"].map(String::from).to_vec(),
        rows,
    })
}

/// CA₁, CA₂ and BD′ thermodynamic and BD★ Hamiltonian energies at τ = 5.
pub fn table2() -> Result<Table> {
    let (ca1, ca2, bdp, bds) = (preset("CA1"), preset("CA2"), preset("BD'"), preset("BD*"));
    let mut rows = Vec::new();
    for (i, &n) in TABLE2_BEADS.iter().enumerate() {
        rows.push(vec![
            Cell::Text(n.to_string()),
            Cell::opt(sakkos::CA1[i], 5),
            Cell::fixed(energies_at_tau(&ca1, n, TABLE_TAU)?.thermo),
            Cell::opt(sakkos::CA2[i], 5),
            Cell::fixed(energies_at_tau(&ca2, n, TABLE_TAU)?.thermo),
            Cell::fixed(energies_at_tau(&bdp, n, TABLE_TAU)?.thermo),
            Cell::fixed(energies_at_tau(&bds, n, TABLE_TAU)?.hamiltonian),
        ]);
    }
    let exact = energies_at_tau(&ContractedPropagator::exact(), 1, TABLE_TAU)?.thermo;
    rows.push(vec![
        Cell::Text("inf".into()),
        Cell::Empty,
        Cell::fixed(exact),
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
    ]);
    Ok(Table {
        title: "Higher-order propagators at tau = 5".into(),
        headers: ["N", "Sakkos CA1", "CA1", "Sakkos CA2", "CA2", "BD'", "H BD*"]
            .map(String::from)
            .to_vec(),
        rows,
    })
}

/// Which energies a report includes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Thermo,
    Hamiltonian,
    Both,
}

impl std::str::FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "thermo" | "t" => Ok(Kind::Thermo),
            "hamiltonian" | "h" => Ok(Kind::Hamiltonian),
            "both" => Ok(Kind::Both),
            other => Err(Error::InvalidArgument(format!("unknown kind {other:?}"))),
        }
    }
}

/// One row per result with the requested energy columns.
pub fn energy_table(results: &[EnergyResult], kind: Kind) -> Table {
    let mut headers = vec!["N", "tau", "eps", "E_N"];
    match kind {
        Kind::Thermo => headers.push("E_T"),
        Kind::Hamiltonian => headers.push("E_H"),
        Kind::Both => headers.extend(["E_T", "E_H"]),
    }
    headers.push("Z_N");
    let rows = results
        .iter()
        .map(|r| {
            let mut row = vec![
                Cell::Text(r.n.to_string()),
                Cell::fixed(r.tau),
                Cell::fixed(r.eps),
                Cell::fixed(r.universal),
            ];
            match kind {
                Kind::Thermo => row.push(Cell::fixed(r.thermo)),
                Kind::Hamiltonian => row.push(Cell::fixed(r.hamiltonian)),
                Kind::Both => row.extend([Cell::fixed(r.thermo), Cell::fixed(r.hamiltonian)]),
            }
            row.push(Cell::Number(r.partition, 8));
            row
        })
        .collect();
    let label = results.first().map(|r| r.label.as_str()).unwrap_or("");
    Table { title: format!("Energies for {label}"), headers: headers.into_iter().map(String::from).collect(), rows }
}

/// Analytic and oracle values side by side.
pub fn oracle_table(pairs: &[(EnergyResult, OracleEnergies)]) -> Table {
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let rows = pairs
        .iter()
        .flat_map(|(a, o)| {
            [
                ("Z_N", a.partition, o.partition),
                ("E_T", a.thermo, o.thermo),
                ("E_H", a.hamiltonian, o.hamiltonian),
            ]
            .into_iter()
            .map(move |(q, x, y)| {
                vec![
                    Cell::Text(a.n.to_string()),
                    Cell::fixed(a.tau),
                    Cell::Text(q.into()),
                    Cell::fixed(x),
                    Cell::fixed(y),
                    Cell::Number(rel(y, x), 2),
                ]
            })
        })
        .map(|mut r| {
            if let Cell::Number(v, _) = r[5] {
                r[5] = Cell::Text(format!("{v:.2e}"));
            }
            r
        })
        .collect();
    let label = pairs.first().map(|p| p.0.label.as_str()).unwrap_or("");
    Table {
        title: format!("Grid oracle check for {label}"),
        headers: ["N", "tau", "quantity", "analytic", "oracle", "rel diff"].map(String::from).to_vec(),
        rows,
    }
}

/// Oracle and analytic energies for each `(N, τ)`.
pub fn oracle_check(
    prop: &ContractedPropagator,
    beads: &[usize],
    taus: &[f64],
    grid: GridSpec,
) -> Result<Vec<(EnergyResult, OracleEnergies)>> {
    let mut out = Vec::new();
    for &tau in taus {
        for &n in beads {
            out.push((energies_at_tau(prop, n, tau)?, oracle_energies_at_tau(prop, n, tau, grid)?));
        }
    }
    Ok(out)
}

/// A figure panel as long-format rows `(x, series label, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FigurePanel {
    /// File stem, e.g. `fig1_pa`.
    pub name: String,
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub rows: Vec<(f64, String, f64)>,
}

impl FigurePanel {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record([self.x_label, "label", self.y_label]).map_err(io)?;
        for (x, l, y) in &self.rows {
            w.write_record([format_csv(*x), l.clone(), format_csv(*y)]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(())
    }
}

fn file_stem(label: &str) -> String {
    label.to_ascii_lowercase().replace('\'', "_prime").replace('*', "_star")
}

/// τ grid of the energy figures, `0.05, 0.10, …, 10`.
pub fn tau_grid() -> Vec<f64> {
    (1..=200).map(|i| 0.05 * i as f64).collect()
}

fn energy_rows(prop: &ContractedPropagator, beads: &[usize], label: &str) -> Result<Vec<(f64, String, f64)>> {
    let mut rows = Vec::new();
    for &n in beads {
        for &tau in &tau_grid() {
            match energies_at_tau(prop, n, tau) {
                Ok(r) => {
                    rows.push((tau, format!("{label}T{n}"), r.thermo));
                    rows.push((tau, format!("{label}H{n}"), r.hamiltonian));
                }
                // Non-physical contractions at large ε leave gaps.
                Err(Error::SubunityZeta(_)) | Err(Error::ContractionSingularity(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(rows)
}

pub const FIG1_PROPAGATORS: [&str; 6] = ["PA", "TI", "4A", "4A'", "BD", "BD'"];
pub const FIG1_BEADS: [usize; 4] = [2, 4, 8, 16];
pub const FIG3_PROPAGATORS: [&str; 8] = ["PA", "TI", "4A", "4A'", "BD", "BD'", "BD*", "CA1"];
pub const FIG4_PROPAGATORS: [&str; 6] = ["PA", "TI", "4A", "4A'", "BD'", "BD*"];

/// Data for figure `which` (1 to 4), one panel per CSV.
pub fn figure(which: u8) -> Result<Vec<FigurePanel>> {
    match which {
        1 => FIG1_PROPAGATORS
            .iter()
            .map(|&name| {
                Ok(FigurePanel {
                    name: format!("fig1_{}", file_stem(name)),
                    x_label: "tau",
                    y_label: "energy",
                    rows: energy_rows(&preset(name), &FIG1_BEADS, "")?,
                })
            })
            .collect(),
        2 => Ok(vec![FigurePanel {
            name: "fig2_bd_star".into(),
            x_label: "tau",
            y_label: "energy",
            rows: energy_rows(&preset("BD*"), &[2, 3, 4], "")?,
        }]),
        3 => {
            let mut rows = Vec::new();
            for name in FIG3_PROPAGATORS {
                rows.extend(energy_rows(&preset(name), &[3], &format!("{name} "))?);
            }
            Ok(vec![FigurePanel { name: "fig3_n3".into(), x_label: "tau", y_label: "energy", rows }])
        }
        4 => {
            let opts = FitOptions { beads: log_beads(4, 1000, 60), ..FitOptions::default() };
            let mut rows = Vec::new();
            for name in FIG4_PROPAGATORS {
                for (est, tag) in [(Estimator::Thermo, "T"), (Estimator::Hamiltonian, "H")] {
                    for p in sweep(&preset(name), est, &opts)? {
                        rows.push((p.eps, format!("{name} {tag}"), p.rel_error));
                    }
                }
            }
            Ok(vec![FigurePanel {
                name: "fig4_convergence".into(),
                x_label: "eps",
                y_label: "relative_error",
                rows,
            }])
        }
        other => Err(Error::InvalidArgument(format!("no figure {other}; expected 1 to 4"))),
    }
}

/// Sweep rows plus the fitted slope.
pub fn convergence_report(
    prop: &ContractedPropagator,
    est: Estimator,
    opts: &FitOptions,
) -> Result<(Table, OrderFit)> {
    let pts = sweep(prop, est, opts)?;
    let fit = fit_order(prop, est, opts)?;
    let mut rows = Vec::with_capacity(pts.len());
    for p in &pts {
        let reference = match opts.reference {
            Reference::Universal => energies_at_tau(prop, p.n, opts.tau)?.universal,
            Reference::ClosedForm => energies_at_tau(&ContractedPropagator::exact(), 1, opts.tau)?.thermo,
        };
        rows.push(vec![
            Cell::Text(p.n.to_string()),
            Cell::Number(p.eps, 8),
            Cell::Text(format!("{:.6e}", p.rel_error * reference.abs())),
            Cell::Text(format!("{:.6e}", p.rel_error)),
        ]);
    }
    Ok((
        Table {
            title: format!("Relative error of {} at tau = {}", prop.label(), opts.tau),
            headers: ["N", "eps", "abs_error", "rel_error"].map(String::from).to_vec(),
            rows,
        },
        fit,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_cells() {
        let t = table1().unwrap();
        let pa = t.column("PA").unwrap();
        assert_eq!(pa[3].text(), "0.50084554");
        assert_eq!(t.column("TI").unwrap()[5].text(), "0.50678353");
        assert_eq!(pa[10].text(), "0.50678365");
        let txt = t.render_text();
        assert!(txt.contains("Sakkos PA") && txt.lines().count() == 14);
    }

    #[test]
    fn table2_cells() {
        let t = table2().unwrap();
        assert_eq!(t.column("BD'").unwrap()[2].text(), "0.50678043");
        assert_eq!(t.column("H BD*").unwrap()[0].text(), "0.50679042");
        let csv = t.render_csv().unwrap();
        assert!(csv.starts_with("N,Sakkos CA1,CA1"));
        assert!(csv.contains("5.066094592e-1"));
    }

    #[test]
    fn figures_are_deterministic() {
        let a = figure(2).unwrap();
        let b = figure(2).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        a[0].write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("tau,label,energy\n"));
        assert_eq!(s.lines().count(), 1 + 3 * 2 * 200);
        assert!(figure(5).is_err());
        assert_eq!(figure(1).unwrap().len(), 6);
    }
}
