use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use xychain::chain::{
    correlators_with_error, ChainParams, ChainPoint, Param, TwoSpinXState, POSITIVITY_TOL,
};
use xychain::error::{Error, Result};
use xychain::fisher::{saturation_from, FisherPoint};
use xychain::multiparam::MultiparamPoint;
use xychain::protocol::{
    crb_report, run_ensemble, EstimatorGrid, Orientation, ProtocolConfig, RoundRecord,
};
use xychain::quadrature::QuadratureConfig;
use xychain::report::{
    detect_d_loss, feature_report, figure_bundle, fmt17, sweep, AxisRange, Figure, Quantity,
    SweepSpec,
};

#[derive(Parser)]
#[command(
    name = "xychain",
    version,
    about = "Fisher information of XY chains with DM interaction"
)]
#[command(allow_negative_numbers = true)]
struct Cli {
    /// Absolute and relative quadrature tolerance (1e-10; 1e-13 for figure).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone, Copy)]
struct Point {
    #[arg(long = "J", allow_negative_numbers = true)]
    j: f64,
    #[arg(long, allow_negative_numbers = true)]
    gamma: f64,
    #[arg(long = "D", default_value_t = 0.0, allow_negative_numbers = true)]
    d: f64,
}

impl Point {
    fn params(self) -> Result<ChainParams> {
        ChainParams::new(self.j, self.gamma, self.d)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Correlators and the two-spin reduced state.
    State(Point),
    /// F, H and S for one or more parameters.
    Fisher {
        #[command(flatten)]
        point: Point,
        #[arg(long, value_delimiter = ',', default_value = "J")]
        wrt: Vec<String>,
    },
    /// Tabulate quantities along one parameter axis.
    Sweep {
        #[arg(long)]
        axis: String,
        /// lo:hi:n
        #[arg(long, allow_hyphen_values = true)]
        range: String,
        /// Fixed values; the swept one is ignored.
        #[arg(long = "J", default_value_t = 0.0, allow_negative_numbers = true)]
        j: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long = "D", default_value_t = 0.0, allow_negative_numbers = true)]
        d: f64,
        #[arg(long, value_delimiter = ',', default_value = "J")]
        wrt: Vec<String>,
        /// Any of F, H, S, QFIM, U, det.
        #[arg(long, value_delimiter = ',', default_value = "F,H,S")]
        quantities: Vec<String>,
    },
    /// QFI matrix, Uhlmann matrix and sloppiness at one point.
    Qfim(Point),
    /// Simulate the adaptive estimation of J.
    Protocol {
        /// True coupling.
        #[arg(long = "J", allow_negative_numbers = true)]
        j: f64,
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long = "D", default_value_t = 0.0, allow_negative_numbers = true)]
        d: f64,
        /// Initial guess; sets the first field.
        #[arg(long, allow_negative_numbers = true)]
        guess: f64,
        #[arg(long, default_value_t = 10_000)]
        shots: u64,
        #[arg(long, default_value_t = 3)]
        rounds: usize,
        #[arg(long)]
        seed: u64,
        /// Independent runs with seeds seed, seed+1, ...
        #[arg(long, default_value_t = 1)]
        runs: u64,
        /// Grid of |J/B| searched by the estimator, lo:hi:n.
        #[arg(long, default_value = "0:3:301")]
        grid: String,
        #[arg(long, value_enum, default_value = "aligned")]
        orientation: OrientationArg,
        #[arg(long)]
        sign_switch: bool,
    },
    /// Classify H(J) on -1 < J < 0 and locate D thresholds.
    Features {
        #[arg(long)]
        gamma: f64,
        #[arg(
            long = "D",
            value_delimiter = ',',
            default_value = "0,0.02,0.1,0.2,0.3",
            allow_negative_numbers = true
        )]
        d: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// D range for D_loss, lo:hi:n.
        #[arg(long, default_value = "0:0.3:31")]
        d_loss_range: String,
        #[arg(long, default_value_t = 161)]
        j_points: usize,
    },
    /// Regenerate figure data (fig1..fig6 or all) into a directory.
    Figure { name: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum OrientationArg {
    Aligned,
    Opposed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn quad(cli: &Cli) -> Result<QuadratureConfig> {
    match cli.tol {
        Some(t) => QuadratureConfig::with_tol(t),
        None => Ok(QuadratureConfig::default()),
    }
}

fn sink(cli: &Cli) -> Result<Box<dyn Write>> {
    Ok(match &cli.out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn parse_params(names: &[String]) -> Result<Vec<Param>> {
    names.iter().map(|s| s.trim().parse()).collect()
}

/// One flat record; CSV puts the keys in the header.
fn emit_record(cli: &Cli, fields: &[(String, f64)], extra: serde_json::Value) -> Result<()> {
    let mut w = sink(cli)?;
    match cli.format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut out = csv::Writer::from_writer(&mut w);
            out.write_record(fields.iter().map(|f| f.0.as_str()))?;
            out.write_record(fields.iter().map(|f| fmt17(f.1)))?;
            out.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &extra)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn emit_json<T: Serialize>(cli: &Cli, value: &T) -> Result<()> {
    if cli.format == Some(Format::Csv) {
        return Err(Error::InvalidInput(
            "this subcommand only writes JSON".into(),
        ));
    }
    let mut w = sink(cli)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let q = quad(cli)?;
    match &cli.cmd {
        Cmd::State(p) => {
            // values stay finite at |J| = 1, where derivatives do not
            let params = p.params()?;
            let (c, abs_error) = correlators_with_error(&params, &q)?;
            let s = TwoSpinXState::from_correlators(&c);
            s.check_positivity(POSITIVITY_TOL)?;
            let fields: Vec<(String, f64)> = [
                ("J", p.j),
                ("gamma", p.gamma),
                ("D", p.d),
                ("mz", c.mz),
                ("gxx", c.gxx),
                ("gyy", c.gyy),
                ("gzz", c.gzz),
                ("a_plus", s.a_plus),
                ("a_minus", s.a_minus),
                ("b_plus", s.b_plus),
                ("b_minus", s.b_minus),
                ("c", s.c),
                ("abs_error", abs_error),
            ]
            .map(|(k, v)| (k.to_string(), v))
            .to_vec();
            let extra = json!({
                "params": params,
                "correlators": c,
                "state": s,
                "abs_error": abs_error,
            });
            emit_record(cli, &fields, extra)
        }
        Cmd::Fisher { point, wrt } => {
            let params = point.params()?;
            let pt = ChainPoint::evaluate(&params, &q)?;
            let mut fields: Vec<(String, f64)> = vec![
                ("J".into(), point.j),
                ("gamma".into(), point.gamma),
                ("D".into(), point.d),
            ];
            let mut entries = Vec::new();
            for w in parse_params(wrt)? {
                let fp = FisherPoint::at(&pt, w)?;
                let s = saturation_from(&params, &fp, w, &q)?;
                fields.extend([
                    (format!("F_{w}"), fp.f),
                    (format!("H_{w}"), fp.h),
                    (format!("S_{w}"), s.value),
                ]);
                entries.push(json!({
                    "wrt": w,
                    "F": fp.f,
                    "H": fp.h,
                    "H1": fp.h1,
                    "H2": fp.h2,
                    "S": s.value,
                    "S_from_limit": s.from_limit,
                    "singular": fp.singular,
                }));
            }
            emit_record(cli, &fields, json!({ "params": params, "fisher": entries }))
        }
        Cmd::Sweep {
            axis,
            range,
            j,
            gamma,
            d,
            wrt,
            quantities,
        } => {
            let spec = SweepSpec {
                axis: axis.parse()?,
                range: range.parse::<AxisRange>()?,
                fixed: ChainParams {
                    j: *j,
                    gamma: *gamma,
                    d: *d,
                },
                quantities: quantities
                    .iter()
                    .map(|s| s.trim().parse::<Quantity>())
                    .collect::<Result<_>>()?,
                wrt: parse_params(wrt)?,
            };
            let table = sweep(&spec, &q)?;
            for w in &table.warnings {
                eprintln!("warning: {w}");
            }
            let mut w = sink(cli)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => table.write_csv(&mut w)?,
                Format::Json => {
                    serde_json::to_writer_pretty(
                        &mut w,
                        &json!({ "spec": spec, "quadrature": q, "table": table }),
                    )?;
                    writeln!(w)?;
                }
            }
            w.flush()?;
            Ok(())
        }
        Cmd::Qfim(p) => {
            let params = p.params()?;
            let m = MultiparamPoint::at(&ChainPoint::evaluate(&params, &q)?)?;
            let inverse = m.qfim.inverse().ok().map(|inv| {
                (0..3)
                    .map(|i| (0..3).map(|j| inv[(i, j)]).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            });
            let h = &m.qfim.entries;
            let u = &m.uhlmann.entries;
            let s = &m.sloppiness;
            let fields: Vec<(String, f64)> = [
                ("J", p.j),
                ("gamma", p.gamma),
                ("D", p.d),
                ("H_JJ", h[0][0]),
                ("H_Jgamma", h[0][1]),
                ("H_JD", h[0][2]),
                ("H_gammagamma", h[1][1]),
                ("H_gammaD", h[1][2]),
                ("H_DD", h[2][2]),
                ("U_Jgamma", u[0][1].abs()),
                ("U_JD", u[0][2].abs()),
                ("U_gammaD", u[1][2].abs()),
                ("det", s.det),
                ("relative_det", s.relative_det),
                ("eig_1", s.eigenvalues[0]),
                ("eig_2", s.eigenvalues[1]),
                ("eig_3", s.eigenvalues[2]),
                ("condition", s.condition),
            ]
            .map(|(k, v)| (k.to_string(), v))
            .to_vec();
            emit_record(
                cli,
                &fields,
                json!({
                    "params": params,
                    "qfim": m.qfim,
                    "uhlmann": m.uhlmann,
                    "sloppiness": m.sloppiness,
                    "inverse": inverse,
                }),
            )
        }
        Cmd::Protocol {
            j,
            gamma,
            d,
            guess,
            shots,
            rounds,
            seed,
            runs,
            grid,
            orientation,
            sign_switch,
        } => {
            let g: AxisRange = grid.parse()?;
            let cfg = ProtocolConfig {
                j_true: *j,
                gamma: *gamma,
                d: *d,
                j_guess: *guess,
                shots: *shots,
                rounds: *rounds,
                grid: EstimatorGrid::new(g.lo, g.hi, g.points)?,
                seed: *seed,
                orientation: match orientation {
                    OrientationArg::Aligned => Orientation::Aligned,
                    OrientationArg::Opposed => Orientation::Opposed,
                },
                sign_switch: *sign_switch,
            };
            cfg.validate()?;
            if *runs == 0 {
                return Err(Error::InvalidInput("--runs must be at least 1".into()));
            }
            let model = cfg.model(&q)?;
            let seeds: Vec<u64> = (0..*runs).map(|k| seed.wrapping_add(k)).collect();
            let traces = run_ensemble(&model, &cfg, &seeds)?;
            let report = crb_report(&traces, &cfg, &model)?;
            let mut w = sink(cli)?;
            match cli.format {
                Some(Format::Csv) => {
                    return Err(Error::InvalidInput("protocol traces are JSON".into()));
                }
                Some(Format::Json) => {
                    serde_json::to_writer_pretty(
                        &mut w,
                        &json!({ "config": cfg, "traces": traces, "crb": report }),
                    )?;
                    writeln!(w)?;
                }
                None => {
                    #[derive(Serialize)]
                    struct Line<'a> {
                        seed: u64,
                        #[serde(flatten)]
                        round: &'a RoundRecord,
                    }
                    for t in &traces {
                        for r in &t.rounds {
                            serde_json::to_writer(
                                &mut w,
                                &Line {
                                    seed: t.seed,
                                    round: r,
                                },
                            )?;
                            writeln!(w)?;
                        }
                    }
                    let converged = traces.iter().filter(|t| t.converged).count();
                    eprintln!(
                        "{converged}/{} runs converged; static bound {}",
                        traces.len(),
                        fmt17(report.static_crb)
                    );
                }
            }
            w.flush()?;
            Ok(())
        }
        Cmd::Features {
            gamma,
            d,
            points,
            d_loss_range,
            j_points,
        } => {
            let mut report = feature_report(*gamma, d, *points, &q)?;
            let range: AxisRange = d_loss_range.parse()?;
            report.d_loss = match detect_d_loss(*gamma, &range, *j_points, &q) {
                Ok(l) => Some(l),
                Err(Error::FlatProfile { variation }) => {
                    eprintln!("warning: integrated QFI profile is flat ({variation:e}); no D_loss");
                    None
                }
                Err(e) => return Err(e),
            };
            emit_json(cli, &report)
        }
        Cmd::Figure { name } => {
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let figs: Vec<Figure> = if name == "all" {
                Figure::ALL.to_vec()
            } else {
                vec![name.parse()?]
            };
            let q = if cli.tol.is_some() {
                q
            } else {
                QuadratureConfig::precise()
            };
            for f in figs {
                let (csv, manifest) = figure_bundle(f, &dir, &q)?;
                println!("{}\n{}", csv.display(), manifest.display());
            }
            Ok(())
        }
    }
}
