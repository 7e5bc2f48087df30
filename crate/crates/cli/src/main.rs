mod parse;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lattice_gramian::metrics::{
    bound_neg_log_det, bound_trace_inverse, energy_report, neg_log_det_scaled, trace_inverse, VolumeExponent,
};
use lattice_gramian::nn1d::{
    asymptotic_diagonal, diagonal_recursion, entry_contour, entry_quadrature, nn1d_output_gramian, ContourConfig,
    NN1DParams,
};
use lattice_gramian::oracle::{gramian_ode, lyapunov_steady, min_energy_control, truncate, FiniteSystem};
use lattice_gramian::placement::{rank_candidates, PlacementLattice, PlacementMetric, PlacementProblem};
use lattice_gramian::{
    DriverSet, GramianMode, LatticeSpec, NodeIndex, OutputGramian, QuadratureConfig, SpectralGramian, TargetSet,
};

use crate::parse::{node_field, num, parse_floats, parse_nodes, parse_range};

#[derive(Parser)]
#[command(name = "lattice-gramian", version, about = "Controllability Gramians of infinite lattice networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct LatticeArgs {
    /// Self-loop weight of the nearest-neighbor chain (negative).
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    /// Neighbor coupling of the chain.
    #[arg(long, allow_negative_numbers = true)]
    s: Option<f64>,
    /// JSON lattice spec: {"d": .., "offsets": [[..], ..], "weights": [..]}.
    #[arg(long, conflicts_with_all = ["p", "s"])]
    spec: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
struct OutArgs {
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Gramian entries.
    Entry {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Diagonal entries (i, i) for i in the range, e.g. 0..5.
        #[arg(long, conflicts_with_all = ["i", "j"])]
        diag: Option<String>,
        /// Row nodes; every pair with --j is evaluated.
        #[arg(long, requires = "j", allow_hyphen_values = true)]
        i: Option<String>,
        /// Column nodes.
        #[arg(long, requires = "i", allow_hyphen_values = true)]
        j: Option<String>,
        /// Steady-state Gramian (the default).
        #[arg(long, conflicts_with = "tf")]
        steady: bool,
        /// Finite-time Gramian at this time.
        #[arg(long)]
        tf: Option<f64>,
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// Driver nodes (default: the origin).
        #[arg(long, allow_hyphen_values = true)]
        drivers: Option<String>,
        #[arg(long)]
        quad_points: Option<usize>,
        /// Truncation radius for the oracle method.
        #[arg(long, default_value_t = 100)]
        radius: usize,
    },
    /// Diagonal decay of the chain with its calibrated asymptote.
    Fig2 {
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, default_value = "1.5,2,3.5,10")]
        alpha: String,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 20)]
        max_index: usize,
        /// Index where the asymptote equals the computed value.
        #[arg(long, default_value_t = 10)]
        calibration: usize,
        #[arg(long, value_enum, default_value_t = DiagMethod::Contour)]
        method: DiagMethod,
    },
    /// Energy metrics and their lower bounds over all small target sets.
    Fig3 {
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        /// Candidate target nodes.
        #[arg(long, default_value = "0..7")]
        nodes: String,
        /// Largest target set size.
        #[arg(long, default_value_t = 3)]
        max_targets: usize,
    },
    /// Cross-checks against the finite-lattice oracle; nonzero exit on failure.
    OracleCheck {
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long)]
        quad_points: Option<usize>,
        #[arg(long, default_value_t = 100)]
        radius: usize,
        #[arg(long, default_value_t = 5.0)]
        tf: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol_entry: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol_2d: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol_energy: f64,
    },
    /// Ranks single-driver candidates for a target set.
    Placement {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, allow_hyphen_values = true)]
        targets: String,
        #[arg(long, allow_hyphen_values = true)]
        candidates: String,
        #[arg(long, default_value = "trace_inverse")]
        metric: String,
        #[arg(long)]
        quad_points: Option<usize>,
        /// Box radius for hop distances on general lattices.
        #[arg(long, default_value_t = 32)]
        hop_window: i64,
    },
    /// Energy metrics of one output Gramian.
    Metrics {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, allow_hyphen_values = true)]
        targets: String,
        #[arg(long, allow_hyphen_values = true)]
        drivers: Option<String>,
        /// Target displacement b (default all ones).
        #[arg(long, allow_hyphen_values = true)]
        b: Option<String>,
        #[arg(long)]
        tf: Option<f64>,
        #[arg(long)]
        quad_points: Option<usize>,
        /// Use (det W)^(1/2) in the ellipsoid volume.
        #[arg(long)]
        volume_half: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Quadrature,
    Contour,
    Recursion,
    Spectral,
    Oracle,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum DiagMethod {
    Contour,
    Quadrature,
    Recursion,
}

enum Lattice {
    Chain(NN1DParams),
    Spec(LatticeSpec),
}

impl Lattice {
    fn spec(&self) -> LatticeSpec {
        match self {
            Lattice::Chain(params) => params.lattice(),
            Lattice::Spec(spec) => spec.clone(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Lattice::Chain(_) => 1,
            Lattice::Spec(spec) => spec.dim(),
        }
    }
}

impl LatticeArgs {
    fn resolve(&self) -> Result<Lattice> {
        if let Some(path) = &self.spec {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            return Ok(Lattice::Spec(LatticeSpec::from_json(&text)?));
        }
        match (self.p, self.s) {
            (Some(p), Some(s)) => Ok(Lattice::Chain(NN1DParams::new(p, s)?)),
            _ => bail!("give either --spec or both --p and --s"),
        }
    }
}

impl OutArgs {
    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout())),
        })
    }
}

fn quadrature(points: Option<usize>, d: usize) -> Result<QuadratureConfig> {
    Ok(match points {
        Some(n) => QuadratureConfig::new(n, lattice_gramian::Scheme::GaussLegendre)?,
        None if d == 1 => QuadratureConfig::gauss(64),
        None => QuadratureConfig::default_for_dim(d),
    })
}

fn drivers_or_origin(text: &Option<String>, d: usize) -> Result<DriverSet> {
    Ok(match text {
        Some(t) => DriverSet::new(parse_nodes(t, d)?)?,
        None => DriverSet::new(vec![NodeIndex::origin(d)])?,
    })
}

fn oracle_entries(sys: &FiniteSystem, tf: Option<f64>) -> Result<nalgebra::DMatrix<f64>> {
    Ok(match tf {
        None => lyapunov_steady(sys)?,
        Some(t) => gramian_ode(sys, t, 64)?.w,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_entry(
    lattice: &LatticeArgs,
    out: &OutArgs,
    diag: &Option<String>,
    i: &Option<String>,
    j: &Option<String>,
    tf: Option<f64>,
    method: Option<Method>,
    drivers: &Option<String>,
    quad_points: Option<usize>,
    radius: usize,
) -> Result<()> {
    let lattice = lattice.resolve()?;
    let d = lattice.dim();
    let pairs: Vec<(NodeIndex, NodeIndex)> = match (diag, i, j) {
        (Some(range), _, _) => {
            if d != 1 {
                bail!("--diag needs a one-dimensional lattice");
            }
            parse_range(range)?
                .into_iter()
                .map(|k| (NodeIndex::scalar(k), NodeIndex::scalar(k)))
                .collect()
        }
        (None, Some(i), Some(j)) => {
            let (rows, cols) = (parse_nodes(i, d)?, parse_nodes(j, d)?);
            rows.iter()
                .flat_map(|r| cols.iter().map(move |c| (r.clone(), c.clone())))
                .collect()
        }
        _ => bail!("give --diag or both --i and --j"),
    };
    let drivers = drivers_or_origin(drivers, d)?;
    let mode = tf.map_or(GramianMode::Steady, GramianMode::AtTime);
    let method = method.unwrap_or(match (&lattice, tf) {
        (Lattice::Chain(_), None) => Method::Quadrature,
        _ => Method::Spectral,
    });

    let values: Vec<f64> = match method {
        Method::Quadrature | Method::Contour | Method::Recursion => {
            let Lattice::Chain(params) = &lattice else {
                bail!("{method:?} needs the chain (--p, --s)");
            };
            if tf.is_some() {
                bail!("{method:?} is steady-state only");
            }
            let shifts = |n: &NodeIndex, a: &NodeIndex| n.coords()[0] - a.coords()[0];
            match method {
                Method::Recursion => {
                    if drivers.len() != 1 {
                        bail!("recursion takes a single driver");
                    }
                    let a = &drivers.nodes()[0];
                    let idx: Vec<usize> = pairs
                        .iter()
                        .map(|(i, j)| {
                            let (si, sj) = (shifts(i, a), shifts(j, a));
                            if si.abs() != sj.abs() {
                                Err(anyhow!("recursion gives diagonal entries only"))
                            } else {
                                Ok(si.unsigned_abs() as usize)
                            }
                        })
                        .collect::<Result<_>>()?;
                    let max = idx.iter().copied().max().unwrap_or(0);
                    let series = diagonal_recursion(params, max.max(1))?;
                    idx.iter()
                        .map(|&k| series.get(k).ok_or_else(|| anyhow!("diagonal entry {k} is not resolvable")))
                        .collect::<Result<_>>()?
                }
                _ => {
                    let q = quadrature(quad_points, 1)?;
                    let eval = |si: i64, sj: i64| match method {
                        Method::Quadrature => entry_quadrature(params, si, sj, q),
                        _ => entry_contour(params, si, sj, ContourConfig::default()),
                    };
                    pairs
                        .iter()
                        .map(|(i, j)| {
                            drivers
                                .iter()
                                .map(|a| eval(shifts(i, a), shifts(j, a)))
                                .sum::<lattice_gramian::Result<f64>>()
                                .map_err(anyhow::Error::from)
                        })
                        .collect::<Result<_>>()?
                }
            }
        }
        Method::Spectral => {
            let mut sg = SpectralGramian::new(&lattice.spec(), quadrature(quad_points, d)?)?;
            pairs
                .iter()
                .map(|(i, j)| sg.entry(&drivers, i, j, mode).map_err(anyhow::Error::from))
                .collect::<Result<_>>()?
        }
        Method::Oracle => {
            let sys = truncate(&lattice.spec(), radius, &drivers)?;
            let w = oracle_entries(&sys, tf)?;
            pairs
                .iter()
                .map(|(i, j)| {
                    let r = sys.position(i).ok_or_else(|| anyhow!("node {i} outside the oracle window"))?;
                    let c = sys.position(j).ok_or_else(|| anyhow!("node {j} outside the oracle window"))?;
                    Ok(w[(r, c)])
                })
                .collect::<Result<_>>()?
        }
    };

    let label = format!("{method:?}").to_lowercase();
    let mut w = out.writer()?;
    writeln!(w, "i,j,value,method")?;
    for ((i, j), v) in pairs.iter().zip(values) {
        writeln!(w, "{},{},{},{label}", node_field(i), node_field(j), num(v))?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_fig2(out: &OutArgs, alpha: &str, s: f64, max_index: usize, calibration: usize, method: DiagMethod) -> Result<()> {
    if calibration > max_index {
        bail!("calibration index {calibration} exceeds --max-index {max_index}");
    }
    let mut rows = Vec::new();
    for a in parse_floats(alpha)? {
        let params = NN1DParams::from_alpha(a, s)?;
        let diag: Vec<f64> = match method {
            DiagMethod::Recursion => {
                let series = diagonal_recursion(&params, max_index.max(1))?;
                if series.trusted_through < max_index {
                    bail!("recursion resolved only {} entries for alpha {a}", series.trusted_through + 1);
                }
                series.values[..=max_index].to_vec()
            }
            DiagMethod::Contour => (0..=max_index as i64)
                .map(|k| entry_contour(&params, k, k, ContourConfig::default()))
                .collect::<lattice_gramian::Result<_>>()?,
            DiagMethod::Quadrature => (0..=max_index as i64)
                .map(|k| entry_quadrature(&params, k, k, QuadratureConfig::gauss(64)))
                .collect::<lattice_gramian::Result<_>>()?,
        };
        for (k, g) in diag.iter().enumerate() {
            let asym = asymptotic_diagonal(&params, calibration, diag[calibration], k);
            rows.push(format!("{},{k},{},{}", a, num(*g), num(asym)));
        }
    }
    let mut w = out.writer()?;
    writeln!(w, "alpha,index,G_diag,asymptote")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    Ok(())
}

/// All `k`-element subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in start..n {
            cur.push(x);
            rec(x + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn cmd_fig3(out: &OutArgs, p: f64, s: f64, nodes: &str, max_targets: usize) -> Result<()> {
    let params = NN1DParams::new(p, s)?;
    let nodes = parse_nodes(nodes, 1)?;
    let driver = DriverSet::scalars([0])?;
    let full = nn1d_output_gramian(&params, &driver, &TargetSet::new(nodes.clone())?, ContourConfig::default())?;
    let g00 = entry_contour(&params, 0, 0, ContourConfig::default())?;
    let mut w = out.writer()?;
    writeln!(w, "metric,n_t,target_set,ell,value,bound")?;
    for metric in [PlacementMetric::TraceInverse, PlacementMetric::NegLogDetScaled] {
        for n_t in 1..=max_targets.min(nodes.len()) {
            for set in combinations(nodes.len(), n_t) {
                let sub = full.submatrix(&set)?;
                let ell = set.iter().map(|&k| nodes[k].coords()[0].unsigned_abs() as usize).max().unwrap_or(0);
                let (value, bound) = match metric {
                    PlacementMetric::TraceInverse => (trace_inverse(&sub)?, bound_trace_inverse(ell, &params)?.exact),
                    PlacementMetric::NegLogDetScaled => (
                        neg_log_det_scaled(&sub, g00)?,
                        bound_neg_log_det(ell, &params, n_t)?.exact,
                    ),
                };
                let label: Vec<String> = set.iter().map(|&k| node_field(&nodes[k])).collect();
                writeln!(w, "{metric},{n_t},{},{ell},{},{}", label.join(";"), num(value), num(bound))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

struct CheckRow {
    name: String,
    error: f64,
    tolerance: f64,
}

impl CheckRow {
    fn pass(&self) -> bool {
        self.error <= self.tolerance
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_oracle_check(
    out: &OutArgs,
    p: f64,
    s: f64,
    quad_points: Option<usize>,
    radius: usize,
    tf: f64,
    tol_entry: f64,
    tol_2d: f64,
    tol_energy: f64,
) -> Result<bool> {
    let params = NN1DParams::new(p, s)?;
    let q1 = quadrature(quad_points, 1)?;
    let q2 = quadrature(quad_points, 2)?;
    let origin = DriverSet::scalars([0])?;
    let mut rows = Vec::new();
    let mut record = |name: String, tolerance: f64, result: Result<f64>| {
        let error = result.unwrap_or_else(|e| {
            eprintln!("{name}: {e:#}");
            f64::NAN
        });
        rows.push(CheckRow { name, error, tolerance });
    };

    record("recursion_vs_quadrature".into(), tol_entry, (|| {
        let series = diagonal_recursion(&params, 10)?;
        let mut worst = 0.0f64;
        for k in 0..=10usize {
            let g = series.get(k).ok_or_else(|| anyhow!("recursion truncated at {k}"))?;
            let quad = entry_quadrature(&params, k as i64, k as i64, q1)?;
            worst = worst.max((g / quad - 1.0).abs());
        }
        Ok(worst)
    })());

    let chain = truncate(&params.lattice(), radius, &origin)?;
    let chain_check = |mode: GramianMode| -> Result<f64> {
        let w = oracle_entries(&chain, match mode {
            GramianMode::Steady => None,
            GramianMode::AtTime(t) => Some(t),
        })?;
        let mut sg = SpectralGramian::new(&params.lattice(), q1)?;
        let mut worst = 0.0f64;
        for i in -5..=5 {
            for j in -5..=5 {
                let (ni, nj) = (NodeIndex::scalar(i), NodeIndex::scalar(j));
                let r = chain.position(&ni).ok_or_else(|| anyhow!("radius too small"))?;
                let c = chain.position(&nj).ok_or_else(|| anyhow!("radius too small"))?;
                worst = worst.max((sg.entry(&origin, &ni, &nj, mode)? - w[(r, c)]).abs());
            }
        }
        Ok(worst)
    };
    record("spectral_vs_lyapunov".into(), tol_entry, chain_check(GramianMode::Steady));
    record(format!("spectral_vs_rk4_t{tf}"), tol_entry, chain_check(GramianMode::AtTime(tf)));

    record("minimum_energy_simulation".into(), tol_energy, (|| {
        let sys = truncate(&params.lattice(), 10, &origin)?;
        let run = min_energy_control(&sys, &vec![0.0; sys.n()], &[NodeIndex::scalar(2)], &[1.0], 5.0, 512)?;
        if run.final_error > 1e-4 {
            bail!("final target error {:e}", run.final_error);
        }
        Ok((run.energy / run.predicted_energy - 1.0).abs())
    })());

    record("lattice_2d_vs_oracle".into(), tol_2d, (|| {
        let spec = LatticeSpec::nearest_neighbor(2, -5.0, 1.0);
        let drivers = DriverSet::new(vec![NodeIndex::origin(2)])?;
        let nodes: Vec<NodeIndex> = (-2..=2)
            .flat_map(|x| (-2..=2).map(move |y| NodeIndex::new(vec![x, y])))
            .collect();
        let gram = lattice_gramian::output_gramian(&spec, &drivers, &TargetSet::new(nodes.clone())?, GramianMode::Steady, q2)?;
        let sys = truncate(&spec, 8, &drivers)?;
        let w = lyapunov_steady(&sys)?;
        let pos: Vec<usize> = nodes.iter().map(|n| sys.position(n).expect("inside window")).collect();
        let mut worst = 0.0f64;
        for r in 0..nodes.len() {
            for c in 0..nodes.len() {
                worst = worst.max((gram.matrix()[(r, c)] - w[(pos[r], pos[c])]).abs());
            }
        }
        Ok(worst)
    })());

    let mut w = out.writer()?;
    writeln!(w, "check,max_error,tolerance,pass")?;
    for row in &rows {
        writeln!(w, "{},{},{},{}", row.name, num(row.error), num(row.tolerance), row.pass())?;
    }
    w.flush()?;
    Ok(rows.iter().all(CheckRow::pass))
}

fn cmd_placement(
    lattice: &LatticeArgs,
    out: &OutArgs,
    targets: &str,
    candidates: &str,
    metric: &str,
    quad_points: Option<usize>,
    hop_window: i64,
) -> Result<()> {
    let lattice = lattice.resolve()?;
    let d = lattice.dim();
    let metric: PlacementMetric = metric.parse()?;
    let problem = PlacementProblem {
        lattice: match lattice {
            Lattice::Chain(params) => PlacementLattice::Chain(params),
            Lattice::Spec(spec) => PlacementLattice::General {
                spec,
                quadrature: quadrature(quad_points, d)?,
                hop_window,
            },
        },
        targets: TargetSet::new(parse_nodes(targets, d)?)?,
        candidates: parse_nodes(candidates, d)?,
        metric,
    };
    let report = rank_candidates(&problem)?;
    let mut w = out.writer()?;
    writeln!(w, "candidate,max_distance,value,bound,rank")?;
    let opt = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), num);
    for c in &report.candidates {
        writeln!(w, "{},{},{},{},{}", node_field(&c.node), c.max_distance, opt(c.value), opt(c.bound), c.rank)?;
    }
    w.flush()?;
    eprintln!(
        "metric {}: exact winner {}, heuristic winner {}, spearman {}",
        report.metric,
        report.exact_winner,
        report.heuristic_winner,
        report.spearman.map_or_else(|| "undefined".to_string(), |r| format!("{r:.6}"))
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_metrics(
    lattice: &LatticeArgs,
    out: &OutArgs,
    targets: &str,
    drivers: &Option<String>,
    b: &Option<String>,
    tf: Option<f64>,
    quad_points: Option<usize>,
    volume_half: bool,
) -> Result<()> {
    let lattice = lattice.resolve()?;
    let d = lattice.dim();
    let targets = TargetSet::new(parse_nodes(targets, d)?)?;
    let drivers = drivers_or_origin(drivers, d)?;
    let mode = tf.map_or(GramianMode::Steady, GramianMode::AtTime);
    let (gram, g00): (OutputGramian, f64) = match (&lattice, mode) {
        (Lattice::Chain(params), GramianMode::Steady) => (
            nn1d_output_gramian(params, &drivers, &targets, ContourConfig::default())?,
            entry_contour(params, 0, 0, ContourConfig::default())?,
        ),
        _ => {
            let mut sg = SpectralGramian::new(&lattice.spec(), quadrature(quad_points, d)?)?;
            let origin = NodeIndex::origin(d);
            let g00 = sg.shifted_entry(&origin, &origin, mode)?;
            (sg.output_gramian(&drivers, &targets, mode)?, g00)
        }
    };
    let b = match b {
        Some(text) => parse_floats(text)?,
        None => vec![1.0; targets.len()],
    };
    let exponent = if volume_half {
        VolumeExponent::Half
    } else {
        VolumeExponent::InverseDimension
    };
    let report = energy_report(&gram, &b, g00, exponent)?;
    let eig = &report.eigenvalues;
    let mut w = out.writer()?;
    writeln!(w, "quantity,value")?;
    for (name, v) in [
        ("j_star", report.j_star),
        ("trace_inverse", report.trace_inverse),
        ("neg_log_det_scaled", report.neg_log_det_scaled),
        ("ellipsoid_volume", report.ellipsoid_volume),
        ("gerschgorin_upper", report.gerschgorin_upper),
        ("corollary_upper", report.corollary_upper),
        ("lambda_min", eig[0]),
        ("lambda_max", eig[eig.len() - 1]),
        ("condition_number", report.condition_number),
        ("g00", g00),
    ] {
        writeln!(w, "{name},{}", num(v))?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Entry {
            lattice,
            out,
            diag,
            i,
            j,
            steady: _,
            tf,
            method,
            drivers,
            quad_points,
            radius,
        } => cmd_entry(lattice, out, diag, i, j, *tf, *method, drivers, *quad_points, *radius)?,
        Command::Fig2 {
            out,
            alpha,
            s,
            max_index,
            calibration,
            method,
        } => cmd_fig2(out, alpha, *s, *max_index, *calibration, *method)?,
        Command::Fig3 {
            out,
            p,
            s,
            nodes,
            max_targets,
        } => cmd_fig3(out, *p, *s, nodes, *max_targets)?,
        Command::OracleCheck {
            out,
            p,
            s,
            quad_points,
            radius,
            tf,
            tol_entry,
            tol_2d,
            tol_energy,
        } => {
            return cmd_oracle_check(out, *p, *s, *quad_points, *radius, *tf, *tol_entry, *tol_2d, *tol_energy);
        }
        Command::Placement {
            lattice,
            out,
            targets,
            candidates,
            metric,
            quad_points,
            hop_window,
        } => cmd_placement(lattice, out, targets, candidates, metric, *quad_points, *hop_window)?,
        Command::Metrics {
            lattice,
            out,
            targets,
            drivers,
            b,
            tf,
            quad_points,
            volume_half,
        } => cmd_metrics(lattice, out, targets, drivers, b, *tf, *quad_points, *volume_half)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
