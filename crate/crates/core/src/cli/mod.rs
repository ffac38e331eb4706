//! Command-line front end: every subcommand writes CSV tables (and optional
//! SVG plots) into `--out` and prints a JSON summary on stdout.

#[macro_use]
pub mod output;
mod plot;

use crate::conditions::scattering_matrix_of_condition;
use crate::description::{parse_graph, ConditionSpec, MatrixDesc};
use crate::effpot::{bound_states, compare_to_target, forward_scattering_matrix, BoundStateOptions, MatrixPotential};
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::heat::{decay_rate, heat_solve, HeatConfig};
use crate::linalg::{c, unitary_symmetric_defects, CMat};
use crate::model1d::{classify_gc, tr_convergence, GcClass, Potential1D, Resolvent1dConfig};
use crate::solver::{eigenvalues_in_disk, green_function, scattering_matrix, EigenMethod, EigenOptions, GraphPoint, SpectralWindow};
use crate::waveguide::{
    cross_section_modes, cylinder_spectrum_fd, junction_field, junction_sweep, threshold_limit_t, CrossSectionProblem,
    JunctionDomain2D, WallBc,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use output::{config_hash, Table};
use plot::Series;
use serde::Deserialize;
use serde_json::json;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "thinfiber", version, about = "Thin-fiber network limits on metric graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
}

// The output directory is left out so the config hash only sees settings.
impl std::fmt::Debug for Common {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Common").field("plot", &self.plot).finish()
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues of the graph problem inside a disk of the μ-plane.
    GraphSpectrum {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        disk: f64,
        /// Comma list of ε values.
        #[arg(long, default_value = "0")]
        eps: String,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[command(flatten)]
        common: Common,
    },
    /// Green function with a point source, sampled along every edge.
    GraphGreen {
        #[arg(long)]
        graph: PathBuf,
        /// Real part of μ.
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 0.0)]
        mu_im: f64,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Source as `edge:t`.
        #[arg(long)]
        source: String,
        /// Samples per edge (infinite edges are sampled on [0, 10]).
        #[arg(long, default_value_t = 201)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Scattering matrix of a graph with infinite edges over a μ grid.
    GraphScatter {
        #[arg(long)]
        graph: PathBuf,
        /// Value or start:stop:count.
        #[arg(long)]
        mu: String,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Weighted heat flow on a compact graph.
    Heat {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long = "grid-h", default_value_t = 0.01)]
        grid_h: f64,
        #[arg(long, default_value_t = 1e-3)]
        dtau: f64,
        #[arg(long, default_value_t = 1.0)]
        tau_end: f64,
        /// Edge carrying the initial sin² bump.
        #[arg(long, default_value_t = 0)]
        init_edge: usize,
        /// Snapshot interval in steps.
        #[arg(long, default_value_t = 100)]
        record_every: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Limiting gluing condition of a thin potential on the line.
    Model1dClassify {
        #[arg(long)]
        potential: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Resolvent convergence of the thin-potential line to its limit graph.
    Model1dTrConverge {
        #[arg(long)]
        potential: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda_im: f64,
        /// Comma list of ε values.
        #[arg(long, default_value = "0.1,0.05,0.025,0.0125")]
        eps: String,
        /// Support of the bump source as `a,b`.
        #[arg(long, default_value = "1,2")]
        support: String,
        #[command(flatten)]
        common: Common,
    },
    /// Cross-section modes and, with --eps, the finite-cylinder spectrum.
    WaveguideModes {
        #[arg(long, value_enum, default_value = "dirichlet")]
        wall: WallArg,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long = "grid-h", default_value_t = 1.0 / 64.0)]
        grid_h: f64,
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        /// Cylinder diameter ε; enables the cylinder spectrum.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long, value_enum, default_value = "dirichlet")]
        ends: WallArg,
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Numerical junction scattering matrices over a λ grid.
    WaveguideScatter {
        #[arg(long)]
        domain: PathBuf,
        /// Value or start:stop:count.
        #[arg(long)]
        lambda: String,
        #[arg(long = "grid-h", default_value_t = 1.0 / 64.0)]
        grid_h: f64,
        #[arg(long, default_value_t = 4)]
        n_evanescent: usize,
        /// Also write the field for this incident channel at the first λ.
        #[arg(long)]
        field: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Threshold limit T(λ₀) of a junction and its snapped projection.
    WaveguideThreshold {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long = "grid-h", default_value_t = 1.0 / 64.0)]
        grid_h: f64,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, default_value_t = 0.4)]
        z_max: f64,
        #[arg(long, default_value_t = 0.7)]
        z_ratio: f64,
        #[arg(long, default_value_t = 6)]
        count: usize,
        #[arg(long, default_value_t = 4)]
        n_evanescent: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Forward scattering and bound states of a matrix potential on the half-line.
    EffpotVerify {
        #[arg(long)]
        potential: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        lambda0: f64,
        /// Value or start:stop:count, above λ₀.
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        lambda_min: Option<f64>,
        /// Target description to compare against.
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long = "tol-target", default_value_t = 1e-6)]
        tol_target: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    RealScan,
    Contour,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WallArg {
    Dirichlet,
    Neumann,
    Robin,
}

fn wall_bc(w: WallArg, alpha: f64) -> WallBc {
    match w {
        WallArg::Dirichlet => WallBc::Dirichlet,
        WallArg::Neumann => WallBc::Neumann,
        WallArg::Robin => WallBc::Robin { alpha },
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind as K;
            let code = match e.kind() {
                K::DisplayHelp | K::DisplayVersion => {
                    let _ = e.print();
                    return EXIT_OK;
                }
                K::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                K::InvalidSubcommand | K::MissingSubcommand => EXIT_USAGE,
                _ => EXIT_INVALID,
            };
            emit_error("usage", &e.to_string(), code);
            return code;
        }
    };
    limit_threads();
    match dispatch(&cli.command) {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            let code = if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INVALID
            };
            emit_error(e.kind(), &e.to_string(), code);
            code
        }
    }
}

fn emit_error(kind: &str, message: &str, code: i32) {
    eprintln!(
        "{}",
        json!({"error": kind, "message": message.trim(), "exit_code": code})
    );
}

fn limit_threads() {
    if let Some(n) = std::env::var("THINFIBER_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// `x`, `a:b:n` (n points including both ends).
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::invalid(format!("cannot parse \"{t}\" as a number")))
    };
    match parts.as_slice() {
        [x] => Ok(vec![num(x)?]),
        [a, b, n] => {
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("cannot parse count \"{n}\"")))?;
            match n {
                0 => Err(Error::invalid("range count must be positive")),
                1 => Ok(vec![a]),
                _ => Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()),
            }
        }
        _ => Err(Error::invalid(format!("\"{s}\" is neither a value nor start:stop:count"))),
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("cannot parse \"{t}\" as a number")))
        })
        .collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(Error::invalid("empty list"));
    }
    Ok(v)
}

fn load_graph(p: &Path) -> Result<MetricGraph> {
    parse_graph(&std::fs::read_to_string(p)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialFile {
    values: Vec<f64>,
}

fn load_potential(p: &Path) -> Result<Potential1D> {
    let f: PotentialFile =
        serde_json::from_str(&std::fs::read_to_string(p)?).map_err(|e| Error::Schema(e.to_string()))?;
    Potential1D::new(f.values)
}

/// `{"breaks": [0, …], "values": [matrix, …]}` or `{"breaks": …, "scalar": [...]}`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixPotentialFile {
    breaks: Vec<f64>,
    #[serde(default)]
    values: Option<Vec<MatrixDesc>>,
    #[serde(default)]
    scalar: Option<Vec<f64>>,
}

fn load_matrix_potential(p: &Path) -> Result<MatrixPotential> {
    let f: MatrixPotentialFile =
        serde_json::from_str(&std::fs::read_to_string(p)?).map_err(|e| Error::Schema(e.to_string()))?;
    match (f.values, f.scalar) {
        (Some(v), None) => {
            let ms = v.iter().map(MatrixDesc::to_matrix).collect::<Result<Vec<_>>>()?;
            MatrixPotential::piecewise(f.breaks, ms)
        }
        (None, Some(s)) => MatrixPotential::scalar_piecewise(f.breaks, &s),
        _ => Err(Error::Schema("give exactly one of \"values\" and \"scalar\"".into())),
    }
}

/// Target for effpot-verify: sampled matrices or a vertex condition, plus
/// bound-state energies.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetFile {
    #[serde(default)]
    samples: Vec<TargetSample>,
    #[serde(default)]
    condition: Option<ConditionSpec>,
    #[serde(default)]
    eigenvalues: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetSample {
    lambda: f64,
    #[serde(rename = "T")]
    t: MatrixDesc,
}

fn push_matrix(t: &mut Table, x: f64, m: &CMat) {
    for p in 0..m.nrows() {
        for j in 0..m.ncols() {
            t.push(row![x, p, j, m[(p, j)].re, m[(p, j)].im]);
        }
    }
}

fn maybe_plot(common: &Common, name: &str, x: &str, y: &str, series: &[Series]) -> Option<String> {
    if !common.plot {
        return None;
    }
    let path = common.out.join(name);
    match plot::chart(&path, x, y, series) {
        Ok(()) => Some(path.display().to_string()),
        Err(e) => {
            eprintln!("{}", json!({"warning": "plot", "message": e}));
            None
        }
    }
}

fn dispatch(cmd: &Command) -> Result<String> {
    let repr = format!("{cmd:?}");
    match cmd {
        Command::GraphSpectrum {
            graph,
            disk,
            eps,
            method,
            common,
        } => {
            let hash = config_hash(&repr, &[graph])?;
            let g = load_graph(graph)?;
            let opts = EigenOptions {
                method: method.map(|m| match m {
                    MethodArg::RealScan => EigenMethod::RealScan,
                    MethodArg::Contour => EigenMethod::Contour,
                }),
                ..EigenOptions::default()
            };
            let mut t = Table::new(&["eps", "mu_re", "mu_im", "multiplicity"]);
            let mut ladder = Vec::new();
            let mut counts = Vec::new();
            for e in parse_list(eps)? {
                let ev = eigenvalues_in_disk(&g, SpectralWindow::disk(*disk), e, &opts)?;
                counts.push(ev.iter().map(|v| v.multiplicity).sum::<usize>());
                for v in &ev {
                    t.push(row![e, v.mu.re, v.mu.im, v.multiplicity]);
                    ladder.push((e, v.mu.re));
                }
            }
            let path = t.write(&common.out, "spectrum.csv", &hash)?;
            let plot = maybe_plot(common, "spectrum.svg", "eps", "Re mu", &[Series::dots("eigenvalues", ladder)]);
            Ok(json!({"csv": path, "counts": counts, "plot": plot, "config_hash": hash}).to_string())
        }
        Command::GraphGreen {
            graph,
            mu,
            mu_im,
            eps,
            source,
            samples,
            common,
        } => {
            let hash = config_hash(&repr, &[graph])?;
            let g = load_graph(graph)?;
            let (se, st) = source
                .split_once(':')
                .ok_or_else(|| Error::invalid("source must be edge:t"))?;
            let se: usize = se.trim().parse().map_err(|_| Error::invalid("bad source edge"))?;
            let st: f64 = st.trim().parse().map_err(|_| Error::invalid("bad source position"))?;
            let gf = green_function(&g, c(*mu, *mu_im), *eps, GraphPoint::new(se, st))?;
            let n = (*samples).max(2);
            let mut t = Table::new(&["edge", "t", "re", "im"]);
            for (k, e) in g.edges().iter().enumerate() {
                let l = e.length.value().unwrap_or(10.0);
                for i in 0..n {
                    let x = l * i as f64 / (n - 1) as f64;
                    let v = gf.eval(GraphPoint::new(k, x));
                    t.push(row![k, x, v.re, v.im]);
                }
            }
            let path = t.write(&common.out, "green.csv", &hash)?;
            Ok(json!({"csv": path, "config_hash": hash}).to_string())
        }
        Command::GraphScatter {
            graph,
            mu,
            eps,
            common,
        } => {
            let hash = config_hash(&repr, &[graph])?;
            let g = load_graph(graph)?;
            let mus = parse_range(mu)?;
            let mut t = Table::new(&["mu", "p", "j", "re", "im"]);
            let mut d = Table::new(&["mu", "unitarity_defect", "symmetry_defect"]);
            let mut curves: Vec<Vec<(f64, f64)>> = Vec::new();
            let mut worst = 0.0f64;
            for &m in &mus {
                let s = scattering_matrix(&g, c(m, 0.0), *eps)?;
                push_matrix(&mut t, m, &s);
                let (u, sy) = unitary_symmetric_defects(&s);
                worst = worst.max(u).max(sy);
                d.push(row![m, u, sy]);
                if curves.is_empty() {
                    curves = vec![Vec::new(); s.ncols()];
                }
                for (j, cv) in curves.iter_mut().enumerate() {
                    cv.push((m, s[(0, j)].norm()));
                }
            }
            let p1 = t.write(&common.out, "scatter.csv", &hash)?;
            let p2 = d.write(&common.out, "scatter_defects.csv", &hash)?;
            let series: Vec<Series> = curves
                .into_iter()
                .enumerate()
                .map(|(j, cv)| Series::line(format!("|t_0{j}|"), cv))
                .collect();
            let plot = maybe_plot(common, "scatter.svg", "mu", "|t|", &series);
            Ok(json!({"csv": [p1, p2], "max_defect": worst, "plot": plot, "config_hash": hash}).to_string())
        }
        Command::Heat {
            graph,
            grid_h,
            dtau,
            tau_end,
            init_edge,
            record_every,
            common,
        } => {
            let hash = config_hash(&repr, &[graph])?;
            let g = load_graph(graph)?;
            if *init_edge >= g.edges().len() {
                return Err(Error::invalid(format!("edge {init_edge} does not exist")));
            }
            let le = g.edges()[*init_edge]
                .length
                .value()
                .ok_or_else(|| Error::invalid("heat needs a compact graph"))?;
            let cfg = HeatConfig {
                record_every: (*record_every).max(1),
                ..HeatConfig::new(*dtau, *grid_h, *tau_end)
            };
            let ie = *init_edge;
            let tr = heat_solve(
                &g,
                |e, x| {
                    if e == ie {
                        (std::f64::consts::PI * x / le).sin().powi(2)
                    } else {
                        0.0
                    }
                },
                &cfg,
            )?;
            let mut snaps = Table::new(&["tau", "edge", "t", "w"]);
            let mut mass = Table::new(&["tau", "weighted_mass"]);
            let mut series = Vec::new();
            for s in &tr.states {
                mass.push(row![s.tau, tr.mass(s)]);
                for (k, vals) in s.values.iter().enumerate() {
                    for (i, v) in vals.iter().enumerate() {
                        snaps.push(row![s.tau, k, tr.grids[k].t(i), *v]);
                    }
                }
                let pts: Vec<(f64, f64)> = s.values[ie]
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (tr.grids[ie].t(i), *v))
                    .collect();
                series.push(Series::line(format!("tau={}", s.tau), pts));
            }
            let conservative = g.vertices().iter().all(|v| {
                !matches!(v.condition, Some(crate::conditions::VertexCondition::Dirichlet))
            });
            let fit = decay_rate(&tr, conservative);
            let m0 = tr.mass(&tr.states[0]);
            let m1 = tr.mass(tr.last());
            let p1 = snaps.write(&common.out, "heat.csv", &hash)?;
            let p2 = mass.write(&common.out, "heat_mass.csv", &hash)?;
            let plot = maybe_plot(common, "heat.svg", "t", "w", &series);
            Ok(json!({
                "csv": [p1, p2],
                "mass_initial": m0,
                "mass_final": m1,
                "decay_rate": fit.rate,
                "fit_residual": fit.residual,
                "low_signal": fit.low_signal,
                "plot": plot,
                "config_hash": hash
            })
            .to_string())
        }
        Command::Model1dClassify { potential, common } => {
            let hash = config_hash(&repr, &[potential])?;
            let v = load_potential(potential)?;
            let cls = classify_gc(&v)?;
            let mut t = Table::new(&["class", "rho_minus", "rho_plus", "neumann_side"]);
            let (name, rm, rp, side) = match cls.class {
                GcClass::DirichletGeneric => ("DirichletGeneric", f64::NAN, f64::NAN, ""),
                GcClass::MixedDN { neumann_side } => (
                    "MixedDN",
                    f64::NAN,
                    f64::NAN,
                    match neumann_side {
                        crate::model1d::Side::Left => "left",
                        crate::model1d::Side::Right => "right",
                    },
                ),
                GcClass::GeneralizedKirchhoff {
                    rho_minus,
                    rho_plus,
                } => ("GeneralizedKirchhoff", rho_minus, rho_plus, ""),
            };
            t.push(row![name, rm, rp, side]);
            let path = t.write(&common.out, "classify.csv", &hash)?;
            Ok(json!({"csv": path, "classification": cls, "config_hash": hash}).to_string())
        }
        Command::Model1dTrConverge {
            potential,
            lambda,
            lambda_im,
            eps,
            support,
            common,
        } => {
            let hash = config_hash(&repr, &[potential])?;
            let v = load_potential(potential)?;
            let sup = parse_list(support)?;
            if sup.len() != 2 {
                return Err(Error::invalid("support must be a,b"));
            }
            let r = tr_convergence(
                &v,
                c(*lambda, *lambda_im),
                &parse_list(eps)?,
                (sup[0], sup[1]),
                &Resolvent1dConfig::default(),
            )?;
            let mut t = Table::new(&["eps", "error", "norm_f", "rel_error"]);
            for p in &r.points {
                t.push(row![p.eps, p.error, p.norm_f, p.rel_error]);
            }
            let path = t.write(&common.out, "tr_converge.csv", &hash)?;
            let pts: Vec<(f64, f64)> = r.points.iter().map(|p| (p.eps.ln(), p.rel_error.ln())).collect();
            let plot = maybe_plot(common, "tr_converge.svg", "ln eps", "ln rel error", &[Series::dots("error", pts)]);
            Ok(json!({"csv": path, "class": r.class, "slope": r.slope, "plot": plot, "config_hash": hash}).to_string())
        }
        Command::WaveguideModes {
            wall,
            alpha,
            grid_h,
            n_max,
            eps,
            length,
            ends,
            count,
            common,
        } => {
            let hash = config_hash(&repr, &[])?;
            let bc = wall_bc(*wall, *alpha);
            let p = CrossSectionProblem::with_step(bc, *grid_h)?;
            let modes = cross_section_modes(&p, *n_max)?;
            let mut t = Table::new(&["n", "lambda"]);
            for (n, m) in modes.iter().enumerate() {
                t.push(row![n, m.lambda]);
            }
            let mut hdr = vec!["y".to_string()];
            hdr.extend((0..modes.len()).map(|n| format!("phi_{n}")));
            let hdr_ref: Vec<&str> = hdr.iter().map(String::as_str).collect();
            let mut ph = Table::new(&hdr_ref);
            for k in 0..=p.cells {
                let mut cells = vec![output::Cell::F(k as f64 * p.h())];
                cells.extend(modes.iter().map(|m| output::Cell::F(m.phi[k])));
                ph.push(&cells);
            }
            let mut paths = vec![
                t.write(&common.out, "modes.csv", &hash)?,
                ph.write(&common.out, "modes_phi.csv", &hash)?,
            ];
            let mut cyl = None;
            if let Some(e) = eps {
                let vals = cylinder_spectrum_fd(*length, *e, bc, wall_bc(*ends, *alpha), *grid_h, *count)?;
                let mut ct = Table::new(&["k", "lambda"]);
                for (k, v) in vals.iter().enumerate() {
                    ct.push(row![k, *v]);
                }
                paths.push(ct.write(&common.out, "cylinder.csv", &hash)?);
                cyl = Some(vals);
            }
            let lams: Vec<f64> = modes.iter().map(|m| m.lambda).collect();
            Ok(json!({"csv": paths, "lambda": lams, "cylinder": cyl, "config_hash": hash}).to_string())
        }
        Command::WaveguideScatter {
            domain,
            lambda,
            grid_h,
            n_evanescent,
            field,
            common,
        } => {
            let hash = config_hash(&repr, &[domain])?;
            let d = JunctionDomain2D::from_path(domain)?;
            let lams = parse_range(lambda)?;
            let pts = junction_sweep(&d, &lams, *grid_h, *n_evanescent)?;
            let mut t = Table::new(&["lambda", "p", "j", "re", "im"]);
            let mut diag = Table::new(&["lambda", "unitarity_defect", "symmetry_defect", "residual", "rejected"]);
            let mut curves: Vec<Vec<(f64, f64)>> = vec![Vec::new(); d.degree()];
            for p in &pts {
                match &p.result {
                    Some(r) => {
                        if p.rejected.is_none() {
                            push_matrix(&mut t, p.lambda, &r.t);
                            for (j, cv) in curves.iter_mut().enumerate() {
                                cv.push((p.lambda, r.t[(0, j)].norm()));
                            }
                        }
                        diag.push(row![
                            p.lambda,
                            r.unitarity_defect,
                            r.symmetry_defect,
                            r.residual,
                            p.rejected.clone().unwrap_or_default()
                        ]);
                    }
                    None => diag.push(row![
                        p.lambda,
                        f64::NAN,
                        f64::NAN,
                        f64::NAN,
                        p.rejected.clone().unwrap_or_default()
                    ]),
                }
            }
            let accepted = pts.iter().filter(|p| p.rejected.is_none()).count();
            if accepted == 0 {
                return Err(Error::Resonance(format!(
                    "every λ point was rejected: {}",
                    pts.iter().filter_map(|p| p.rejected.clone()).collect::<Vec<_>>().join("; ")
                )));
            }
            let mut paths = vec![
                t.write(&common.out, "waveguide_scatter.csv", &hash)?,
                diag.write(&common.out, "waveguide_defects.csv", &hash)?,
            ];
            if let Some(p) = field {
                let f = junction_field(&d, lams[0], *grid_h, *n_evanescent, *p)?;
                let mut ft = Table::new(&["x", "y", "re", "im"]);
                for s in &f {
                    ft.push(row![s.x, s.y, s.re, s.im]);
                }
                paths.push(ft.write(&common.out, "waveguide_field.csv", &hash)?);
            }
            let series: Vec<Series> = curves
                .into_iter()
                .enumerate()
                .map(|(j, cv)| Series::line(format!("|t_0{j}|"), cv))
                .collect();
            let plot = maybe_plot(common, "waveguide_scatter.svg", "lambda", "|t|", &series);
            let worst = pts
                .iter()
                .filter(|p| p.rejected.is_none())
                .filter_map(|p| p.result.as_ref())
                .map(|r| r.unitarity_defect.max(r.symmetry_defect))
                .fold(0.0, f64::max);
            Ok(json!({
                "csv": paths,
                "accepted": accepted,
                "rejected": pts.len() - accepted,
                "max_defect": worst,
                "plot": plot,
                "config_hash": hash
            })
            .to_string())
        }
        Command::WaveguideThreshold {
            domain,
            grid_h,
            order,
            z_max,
            z_ratio,
            count,
            n_evanescent,
            common,
        } => {
            let hash = config_hash(&repr, &[domain])?;
            let d = JunctionDomain2D::from_path(domain)?;
            if !(*z_ratio > 0.0 && *z_ratio < 1.0) {
                return Err(Error::invalid("z ratio must lie in (0, 1)"));
            }
            let zs: Vec<f64> = (0..*count).map(|k| z_max * z_ratio.powi(k as i32)).collect();
            let r = threshold_limit_t(&d, &zs, *grid_h, *order, *n_evanescent)?;
            let mut t = Table::new(&["z", "p", "j", "re", "im"]);
            push_matrix(&mut t, 0.0, &r.t0);
            for (z, m) in r.zs.iter().zip(&r.samples) {
                push_matrix(&mut t, *z, m);
            }
            let mut paths = vec![t.write(&common.out, "threshold.csv", &hash)?];
            let mut rank = None;
            if let Some(p) = &r.projection {
                let mut pt = Table::new(&["p", "j", "projection"]);
                for i in 0..p.dim() {
                    for j in 0..p.dim() {
                        pt.push(row![i, j, p.projection[(i, j)]]);
                    }
                }
                paths.push(pt.write(&common.out, "projection.csv", &hash)?);
                rank = Some(p.rank);
            }
            Ok(json!({
                "csv": paths,
                "lambda0": r.lambda0,
                "extrapolation_residual": r.extrapolation_residual,
                "unitarity_defect": r.unitarity_defect,
                "symmetry_defect": r.symmetry_defect,
                "projection_rank": rank,
                "snap_error": r.snap_error,
                "config_hash": hash
            })
            .to_string())
        }
        Command::EffpotVerify {
            potential,
            lambda0,
            lambda,
            lambda_min,
            target,
            tol_target,
            common,
        } => {
            let mut inputs: Vec<&Path> = vec![potential];
            if let Some(t) = target {
                inputs.push(t);
            }
            let hash = config_hash(&repr, &inputs)?;
            let v = load_matrix_potential(potential)?;
            let lams = parse_range(lambda)?;
            let mut st = Table::new(&["lambda", "p", "j", "re", "im"]);
            for &l in &lams {
                push_matrix(&mut st, l, &forward_scattering_matrix(&v, *lambda0, l)?);
            }
            let lmin = lambda_min.unwrap_or(lambda0 + v.lower_bound() - 1.0);
            let mut paths = vec![st.write(&common.out, "effpot_s.csv", &hash)?];
            let mut report = serde_json::Value::Null;
            let bs = if lmin < *lambda0 {
                Some(bound_states(&v, *lambda0, lmin, &BoundStateOptions::default())?)
            } else {
                None
            };
            let mut bt = Table::new(&["lambda", "multiplicity"]);
            if let Some(b) = &bs {
                for s in &b.states {
                    bt.push(row![s.lambda, s.multiplicity]);
                }
            }
            paths.push(bt.write(&common.out, "effpot_bound_states.csv", &hash)?);
            if let Some(tp) = target {
                let tf: TargetFile = serde_json::from_str(&std::fs::read_to_string(tp)?)
                    .map_err(|e| Error::Schema(e.to_string()))?;
                let mut samples: Vec<(f64, CMat)> = tf
                    .samples
                    .iter()
                    .map(|s| Ok((s.lambda, s.t.to_matrix()?)))
                    .collect::<Result<_>>()?;
                if let Some(cs) = &tf.condition {
                    let cond = cs.to_condition()?;
                    for &l in &lams {
                        let m: Complex64 = c(l - lambda0, 0.0);
                        samples.push((l, scattering_matrix_of_condition(&cond, v.dim(), m, 0.0)?));
                    }
                }
                let rep = compare_to_target(&v, *lambda0, &samples, &tf.eigenvalues, lmin, *tol_target)?;
                let mut rt = Table::new(&["lambda", "defect"]);
                for (l, dfx) in &rep.defects {
                    rt.push(row![*l, *dfx]);
                }
                paths.push(rt.write(&common.out, "effpot_target.csv", &hash)?);
                report = serde_json::to_value(&rep)?;
            }
            Ok(json!({
                "csv": paths,
                "bound_states": bs.as_ref().map(|b| b.states.iter().map(|s| (s.lambda, s.multiplicity)).collect::<Vec<_>>()),
                "floor_may_hide_states": bs.as_ref().map(|b| b.floor_may_hide_states),
                "target": report,
                "config_hash": hash
            })
            .to_string())
        }
    }
}
