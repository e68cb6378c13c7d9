//! Command-line front end.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::asymptotics::{RateReport, SimulationSpec};
use crate::bayes_factors::{
    bf_mixture_vs_advocate, bf_replication, bf_skeptical_vs_advocate, bf_zero_vs_mixture,
    bf_zero_vs_skeptical, classify_evidence, EvidenceLabel, MixtureHyperparams, StudyPair,
};
use crate::conflict::{component_pvalues, conflict_grid};
use crate::error::{Error, Result};
use crate::ingest::{build_study, load_studies, InputFormat, RawStudyRecord};
use crate::skeptic_solver::{
    solve_skeptical_bf, solve_skeptical_mixture_bf, u_gamma_trace, InfimumKind, MixtureStatus,
    ScanConfig, DEFAULT_H_MAX,
};
use crate::stats_kernel::{Bracket, SolverConfig};

pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "repbf", version, about = "Replication Bayes factors with prior-data conflict control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// BF_R, BF_S and BF_SM(alpha) for every study of a table.
    Analyze(AnalyzeArgs),
    /// Bayes factors over a grid of relative variances, as CSV.
    Curves(CurvesArgs),
    /// Conflict p-value grid and U_gamma trace, written to two CSV files.
    Contours(ContoursArgs),
    /// BF_SM(alpha) over a grid of conflict levels, as CSV.
    BfVsAlpha(BfVsAlphaArgs),
    /// Monte Carlo consistency run from a TOML scenario file.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Upper cap on the mixture relative variance h.
    #[arg(long, default_value_t = DEFAULT_H_MAX)]
    pub h_max: f64,
    /// Number of gamma grid points scanned before bisection.
    #[arg(long, default_value_t = 400)]
    pub gamma_grid: usize,
    /// Absolute solver tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

impl SolverArgs {
    fn scan(&self) -> Result<ScanConfig> {
        let defaults = ScanConfig::default();
        let solver = SolverConfig::new(self.tol, 0.0, defaults.solver.max_iter)?;
        Ok(ScanConfig {
            solver,
            gamma_points: self.gamma_grid,
            ..defaults
        })
    }
}

/// An inline study `z_o,z_r,c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InlineStudy {
    pub z_o: f64,
    pub z_r: f64,
    pub c: f64,
}

fn parse_inline(s: &str) -> std::result::Result<InlineStudy, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err("expected z_o,z_r,c".into());
    }
    let num = |p: &str| p.parse::<f64>().map_err(|_| format!("not a number: {p:?}"));
    Ok(InlineStudy {
        z_o: num(parts[0])?,
        z_r: num(parts[1])?,
        c: num(parts[2])?,
    })
}

#[derive(Debug, Clone, Args)]
pub struct StudySource {
    /// Study table (CSV).
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Inline study as `z_o,z_r,c`.
    #[arg(long, value_parser = parse_inline, conflicts_with = "input")]
    pub study: Option<InlineStudy>,
    /// Row label to pick from --input.
    #[arg(long, requires = "input")]
    pub label: Option<String>,
}

impl StudySource {
    fn studies(&self) -> Result<Vec<StudyPair>> {
        match (&self.study, &self.input) {
            (Some(s), _) => Ok(vec![StudyPair::from_z("inline", s.z_o, s.z_r, s.c)?]),
            (None, Some(path)) => {
                let records = load_studies(path, InputFormat::Csv)?;
                let records: Vec<&RawStudyRecord> = match &self.label {
                    Some(l) => records.iter().filter(|r| &r.label == l).collect(),
                    None => records.iter().collect(),
                };
                if records.is_empty() {
                    return Err(Error::domain(format!(
                        "no study labelled {:?}",
                        self.label.as_deref().unwrap_or_default()
                    )));
                }
                records.into_iter().map(build_study).collect()
            }
            (None, None) => Err(Error::domain("provide --input FILE or --study z_o,z_r,c")),
        }
    }

    fn single(&self) -> Result<StudyPair> {
        let mut all = self.studies()?;
        if all.len() != 1 {
            return Err(Error::domain("this command needs a single study; use --label"));
        }
        Ok(all.remove(0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Jsonl,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: StudySource,
    /// Conflict level; repeat for several.
    #[arg(long = "alpha", default_values_t = [0.01, 0.05, 0.1])]
    pub alphas: Vec<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
    /// Include infimum kinds and fixed-point / dual-root residuals.
    #[arg(long)]
    pub diagnostics: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Args)]
pub struct CurvesArgs {
    #[command(flatten)]
    pub source: StudySource,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    pub grid_min: f64,
    #[arg(long, default_value_t = 20.0)]
    pub grid_max: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Linear)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Args)]
pub struct ContoursArgs {
    #[arg(long)]
    pub z_o: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = crate::conflict::DEFAULT_H_RANGE.0)]
    pub h_min: f64,
    #[arg(long, default_value_t = crate::conflict::DEFAULT_H_RANGE.1)]
    pub h_max: f64,
    #[arg(long, default_value_t = 0.0)]
    pub psi_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub psi_max: f64,
    #[arg(long, default_value_t = crate::conflict::DEFAULT_GRID_RESOLUTION)]
    pub resolution: usize,
    /// Points sampled along U_gamma.
    #[arg(long, default_value_t = 400)]
    pub trace_points: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Directory receiving conflict_grid.csv and u_gamma.csv.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BfVsAlphaArgs {
    #[command(flatten)]
    pub source: StudySource,
    /// Explicit conflict levels; overrides the generated grid.
    #[arg(long = "alpha")]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Scenario file (TOML).
    pub scenario: PathBuf,
    /// Overrides the seed in the scenario file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
}

/// Per-study result with every Bayes factor and its evidence class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub label: String,
    pub z_o: f64,
    pub z_r: f64,
    pub c: f64,
    pub d: f64,
    pub bf_r: f64,
    pub bf_r_class: EvidenceLabel,
    pub skeptical: SkepticalOutcome,
    pub mixtures: Vec<MixtureReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum SkepticalOutcome {
    Exists {
        bf_s: f64,
        class: EvidenceLabel,
        g_s: f64,
        p_s: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        diagnostics: Option<Diagnostics>,
    },
    Nonexistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureReport {
    pub alpha: f64,
    pub result: MixtureOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum MixtureOutcome {
    Exists {
        bf_sm: f64,
        class: EvidenceLabel,
        status: MixtureStatus,
        psi: f64,
        h: f64,
        p_realized: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        diagnostics: Option<Diagnostics>,
    },
    Nonexistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub infimum: InfimumKind,
    /// `|BF(γ) − γ|` at the returned level.
    pub fixed_point_residual: f64,
    /// `|BF_S:A(g_γ) − BF_S:A(g_γ^JL)|`; skeptical prior only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_root_residual: Option<f64>,
}

impl AnalysisReport {
    pub fn bf_s(&self) -> Option<f64> {
        match self.skeptical {
            SkepticalOutcome::Exists { bf_s, .. } => Some(bf_s),
            SkepticalOutcome::Nonexistent => None,
        }
    }
}

pub fn analyze_study(
    study: &StudyPair,
    alphas: &[f64],
    h_max: f64,
    scan: &ScanConfig,
    diagnostics: bool,
) -> Result<AnalysisReport> {
    let bf_r = bf_replication(study);
    let skeptical = match solve_skeptical_bf(study, scan)? {
        None => SkepticalOutcome::Nonexistent,
        Some(s) => SkepticalOutcome::Exists {
            bf_s: s.bf(),
            class: classify_evidence(s.bf())?.label,
            g_s: s.solution.g_small,
            p_s: s.solution.p_conflict,
            diagnostics: diagnostics.then(|| Diagnostics {
                infimum: s.infimum,
                fixed_point_residual: (s.solution.bf_value.unwrap_or(f64::NAN) - s.bf()).abs(),
                dual_root_residual: Some(s.dual_root_residual),
            }),
        },
    };
    let mixtures = alphas
        .iter()
        .map(|&alpha| {
            let result = match solve_skeptical_mixture_bf(study, alpha, h_max, scan)? {
                None => MixtureOutcome::Nonexistent,
                Some(m) => MixtureOutcome::Exists {
                    bf_sm: m.bf(),
                    class: classify_evidence(m.bf())?.label,
                    status: m.solution.status,
                    psi: m.solution.hyperparams.psi(),
                    h: m.solution.hyperparams.h(),
                    p_realized: m.solution.p_realized,
                    diagnostics: diagnostics.then(|| Diagnostics {
                        infimum: m.infimum,
                        fixed_point_residual: (m.bf_value - m.bf()).abs(),
                        dual_root_residual: None,
                    }),
                },
            };
            Ok(MixtureReport { alpha, result })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalysisReport {
        label: study.label().to_string(),
        z_o: study.z_o(),
        z_r: study.z_r(),
        c: study.c(),
        d: study.d(),
        bf_r,
        bf_r_class: classify_evidence(bf_r)?.label,
        skeptical,
        mixtures,
    })
}

/// Fixed-point rendering with trailing zeros removed.
pub fn fmt_fixed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// Like [`fmt_fixed`], but nonnegative values that would round to zero at
/// three decimals print as `<0.001`, and values below `10^-decimals` get
/// three decimals instead of collapsing to 0.
pub fn fmt_small(x: f64, decimals: usize) -> String {
    if (0.0..0.0005).contains(&x) {
        "<0.001".into()
    } else if x.abs() < 10f64.powi(-(decimals as i32)) {
        fmt_fixed(x, 3)
    } else {
        fmt_fixed(x, decimals)
    }
}

const DASH: &str = "-";

/// Text table in the layout of the published summary table: one block per
/// conflict level.
pub fn render_text(reports: &[AnalysisReport], alphas: &[f64], diagnostics: bool) -> String {
    let mut header = vec![
        "Study", "z_o", "z_r", "c", "d", "g_S", "P_S", "P_SM", "psi", "h", "BF_S", "BF_R", "BF_SM", "status",
    ];
    if diagnostics {
        header.extend(["inf_S", "res_S", "dual_S", "inf_SM", "res_SM"]);
    }
    let mut out = String::new();
    for (k, &alpha) in alphas.iter().enumerate() {
        let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for r in reports {
            let (g_s, p_s, bf_s) = match &r.skeptical {
                SkepticalOutcome::Exists { bf_s, g_s, p_s, .. } => {
                    (fmt_fixed(*g_s, 2), fmt_small(*p_s, 3), fmt_small(*bf_s, 3))
                }
                SkepticalOutcome::Nonexistent => (DASH.into(), DASH.into(), DASH.into()),
            };
            let mix = r.mixtures.get(k).map(|m| &m.result);
            let (p_sm, psi, h, bf_sm, status) = match mix {
                Some(MixtureOutcome::Exists {
                    bf_sm,
                    status,
                    psi,
                    h,
                    p_realized,
                    ..
                }) => (
                    fmt_small(*p_realized, 3),
                    fmt_small(*psi, 3),
                    fmt_fixed(*h, 2),
                    fmt_small(*bf_sm, 3),
                    status.as_str().to_string(),
                ),
                _ => (DASH.into(), DASH.into(), DASH.into(), DASH.into(), "nonexistent".into()),
            };
            let mut row = vec![
                r.label.clone(),
                fmt_fixed(r.z_o, 2),
                fmt_fixed(r.z_r, 2),
                fmt_fixed(r.c, 2),
                fmt_fixed(r.d, 2),
                g_s,
                p_s,
                p_sm,
                psi,
                h,
                bf_s,
                fmt_small(r.bf_r, 2),
                bf_sm,
                status,
            ];
            if diagnostics {
                match &r.skeptical {
                    SkepticalOutcome::Exists { diagnostics: Some(d), .. } => {
                        row.push(infimum_str(d.infimum).into());
                        row.push(format!("{:.1e}", d.fixed_point_residual));
                        row.push(format!("{:.1e}", d.dual_root_residual.unwrap_or(f64::NAN)));
                    }
                    _ => row.extend([DASH.into(), DASH.into(), DASH.into()]),
                }
                match mix {
                    Some(MixtureOutcome::Exists { diagnostics: Some(d), .. }) => {
                        row.push(infimum_str(d.infimum).into());
                        row.push(format!("{:.1e}", d.fixed_point_residual));
                    }
                    _ => row.extend([DASH.into(), DASH.into()]),
                }
            }
            rows.push(row);
        }
        if k > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "alpha = {}", fmt_fixed(alpha, 4));
        out.push_str(&align(&rows));
    }
    out
}

fn infimum_str(k: InfimumKind) -> &'static str {
    match k {
        InfimumKind::FixedPoint => "fixed-point",
        InfimumKind::AttainabilityBoundary => "boundary",
        InfimumKind::Jump => "jump",
    }
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|j| rows.iter().filter_map(|r| r.get(j)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (j, cell) in row.iter().enumerate() {
            if j == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[0]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[j]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::domain("at least one alpha is required"));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {a}")));
    }
    Ok(())
}

pub fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<Vec<AnalysisReport>> {
    check_alphas(&args.alphas)?;
    let scan = args.solver.scan()?;
    let studies = args.source.studies()?;
    let reports = studies
        .iter()
        .map(|s| analyze_study(s, &args.alphas, args.solver.h_max, &scan, args.diagnostics))
        .collect::<Result<Vec<_>>>()?;
    match args.format {
        ReportFormat::Text => out.write_all(render_text(&reports, &args.alphas, args.diagnostics).as_bytes())?,
        ReportFormat::Jsonl => {
            for r in &reports {
                // Serialization of these plain structs cannot fail.
                let line = serde_json::to_string(r).map_err(|e| Error::domain(e.to_string()))?;
                writeln!(out, "{line}")?;
            }
        }
    }
    Ok(reports)
}

fn cell(x: Option<f64>) -> String {
    x.filter(|v| v.is_finite()).map(|v| format!("{v}")).unwrap_or_default()
}

/// `ψ` on the `α` contour of the unconstrained conflict p-value at `h`.
///
/// `None` when `α` lies below the point-mass p-value (no `ψ ≤ 1` reaches
/// it); `Some(0)` when even `ψ = 0` is already below `α`.
pub fn psi_on_alpha_contour(z_o: f64, h: f64, alpha: f64) -> Option<f64> {
    let (p0, p1) = component_pvalues(z_o, h);
    if p1 <= alpha {
        return Some(0.0);
    }
    if p0 > alpha {
        return None;
    }
    Some(((p1 - alpha) / (p1 - p0)).clamp(0.0, 1.0))
}

pub fn cmd_curves(args: &CurvesArgs, out: &mut dyn Write) -> Result<()> {
    check_alphas(&[args.alpha])?;
    let study = args.source.single()?;
    let grid = Bracket::new(args.grid_min, args.grid_max)?;
    if !(args.grid_min > 0.0) {
        return Err(Error::domain("relative variance grid must be positive"));
    }
    let hs = match args.spacing {
        Spacing::Linear => grid.linspace(args.points),
        Spacing::Log => grid.logspace(args.points)?,
    };
    let z_o = study.z_o();
    let bf_r = bf_replication(&study);
    writeln!(out, "g,bf_0s,bf_sa,bf_r,psi,bf_0sm,bf_sma")?;
    for g in hs {
        let b0s = bf_zero_vs_skeptical(z_o, g)?;
        let bsa = bf_skeptical_vs_advocate(&study, g)?;
        let (psi, b0sm, bsma) = match psi_on_alpha_contour(z_o, g, args.alpha) {
            Some(psi) => {
                let hp = MixtureHyperparams::new(psi, g)?;
                (Some(psi), Some(bf_zero_vs_mixture(z_o, &hp)), Some(bf_mixture_vs_advocate(&study, &hp)))
            }
            None => (None, None, None),
        };
        writeln!(
            out,
            "{g},{b0s},{bsa},{bf_r},{},{},{}",
            cell(psi),
            cell(b0sm),
            cell(bsma)
        )?;
    }
    Ok(())
}

/// Writes `conflict_grid.csv` and `u_gamma.csv` into `out_dir` and returns
/// a one-line status for each.
pub fn cmd_contours(args: &ContoursArgs) -> Result<Vec<String>> {
    let grid = conflict_grid(
        args.z_o,
        Bracket::new(args.h_min, args.h_max)?,
        Bracket::new(args.psi_min, args.psi_max)?,
        args.resolution,
    )?;
    std::fs::create_dir_all(&args.out_dir)?;
    let grid_path = args.out_dir.join("conflict_grid.csv");
    let mut text = String::from("h,psi,p_conflict\n");
    for (i, h) in grid.h_values.iter().enumerate() {
        for (j, psi) in grid.psi_values.iter().enumerate() {
            let _ = writeln!(text, "{h},{psi},{}", grid.get(i, j));
        }
    }
    std::fs::write(&grid_path, text)?;

    let trace_path = args.out_dir.join("u_gamma.csv");
    let cfg = SolverConfig::new(args.tol, 0.0, SolverConfig::default().max_iter)?;
    let mut text = String::from("h,psi,p_conflict\n");
    let status = match u_gamma_trace(args.z_o, args.gamma, args.trace_points, &cfg) {
        Ok(points) => {
            for p in &points {
                let _ = writeln!(text, "{},{},{}", p.h, p.psi, p.p_conflict);
            }
            format!("{}: {} points", trace_path.display(), points.len())
        }
        Err(Error::GammaNotAttainable { min_bf, .. }) => format!(
            "{}: empty, gamma not attainable (minimum BF_0:S = {min_bf})",
            trace_path.display()
        ),
        Err(e) => return Err(e),
    };
    std::fs::write(&trace_path, text)?;
    Ok(vec![
        format!("{}: {} cells", grid_path.display(), grid.h_values.len() * grid.psi_values.len()),
        status,
    ])
}

pub fn cmd_bf_vs_alpha(args: &BfVsAlphaArgs, out: &mut dyn Write) -> Result<()> {
    let alphas = if args.alphas.is_empty() {
        Bracket::new(args.alpha_min, args.alpha_max)?.linspace(args.points)
    } else {
        args.alphas.clone()
    };
    check_alphas(&alphas)?;
    let study = args.source.single()?;
    let scan = args.solver.scan()?;
    let bf_s = solve_skeptical_bf(&study, &scan)?.map(|s| s.bf());
    writeln!(out, "alpha,bf_sm,status,psi,h,p_realized,bf_s")?;
    for alpha in alphas {
        match solve_skeptical_mixture_bf(&study, alpha, args.solver.h_max, &scan)? {
            Some(m) => writeln!(
                out,
                "{alpha},{},{},{},{},{},{}",
                m.bf(),
                m.solution.status.as_str(),
                m.solution.hyperparams.psi(),
                m.solution.hyperparams.h(),
                m.solution.p_realized,
                cell(bf_s)
            )?,
            None => writeln!(out, "{alpha},,nonexistent,,,,{}", cell(bf_s))?,
        }
    }
    Ok(())
}

pub fn rate_report_csv(report: &RateReport) -> String {
    let mut s = String::from("n_r,mean_log_bf,se_log_bf,mean_bf,se_bf\n");
    for i in 0..report.n_values.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            report.n_values[i], report.mean_log_bf[i], report.se_log_bf[i], report.mean_bf[i], report.se_bf[i]
        );
    }
    s
}

pub fn load_simulation(path: &Path) -> Result<SimulationSpec> {
    let text = std::fs::read_to_string(path)?;
    SimulationSpec::from_toml(&text)
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<RateReport> {
    let mut spec = load_simulation(&args.scenario)?;
    if let Some(seed) = args.seed {
        spec.scenario.seed = seed;
    }
    let report = spec.run()?;
    match args.format {
        TableFormat::Csv => out.write_all(rate_report_csv(&report).as_bytes())?,
        TableFormat::Jsonl => {
            let line = serde_json::to_string(&report).map_err(|e| Error::domain(e.to_string()))?;
            writeln!(out, "{line}")?;
        }
    }
    Ok(report)
}

/// Runs a parsed command, writing results to `out` and notes to `err`.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a, out).map(|_| ()),
        Command::Curves(a) => cmd_curves(a, out),
        Command::Contours(a) => {
            for line in cmd_contours(a)? {
                writeln!(err, "{line}")?;
            }
            Ok(())
        }
        Command::BfVsAlpha(a) => cmd_bf_vs_alpha(a, out),
        Command::Simulate(a) => {
            let r = cmd_simulate(a, out)?;
            writeln!(err, "{}", r.target_description)?;
            writeln!(err, "fitted slope: {}", r.fitted_slope)?;
            if let Some(z) = r.final_z_score() {
                writeln!(err, "final mean vs limit: {z:.3} standard errors")?;
            }
            Ok(())
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoConvergence { .. } | Error::NoRootInBracket { .. } => EXIT_NONCONVERGENCE,
        _ => EXIT_INPUT,
    }
}
