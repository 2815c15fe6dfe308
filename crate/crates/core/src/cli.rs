//! Command-line drivers. Every command builds a [`RunReport`] that depends
//! only on its inputs, seed and scalar domain.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::framed::{
    flat_local_dimension, random_flat_bundle, subspace_flags, vertex_relation_residual, zero_section, apply_gauge,
    Framing, GaugeTransform,
};
use crate::graph::{catalog_graph, random_trivalent, spanning_tree, TrivalentGraph, CATALOG};
use crate::higgs::{
    gauge_transform_higgs, higgs_residual, higgs_space, is_higgs_field, random_higgs_field, residue_parameterization,
    HiggsField, HiggsSpace,
};
use crate::hitchin::{bires_det_identity, hitchin_image, hitchin_in_he_coords, hitchin_jacobian, is_regular, jacobian_fd_error};
use crate::io;
use crate::mat2::RandomSl2;
use crate::scalar::{Complex, Domain, Scalar};
use crate::sections::{bires_coordinate_matrix, canonical_space, double_canonical_space};
use crate::spectral::{
    anti_invariant_rank, build_spectral_curve, line_bundle_lphi, prym_report, reconstruct_higgs, relative_error,
    spectral_data, SpectralData,
};

/// Finite-difference step for the Jacobian check.
const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-6;
const ROUNDTRIP_TOL: f64 = 1e-8;
const REGULAR_ATTEMPTS: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "llcurve", version, about = "Hitchin systems on graph-shaped nodal curves")]
pub struct Cli {
    /// Include wall-clock time in the report (makes output nondeterministic).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a catalog, random or file graph and report its cardinalities.
    Graph(GraphArgs),
    /// Dimensions and ranks of the canonical and double-canonical systems.
    Sections(CommonArgs),
    /// Higgs field spaces over random framings.
    Higgs(ModelArgs),
    /// Hitchin map coordinates, Jacobian rank and regularity.
    Hitchin(ModelArgs),
    /// Spectral curve, Prym dimension and reconstruction round trip.
    Spectral(ModelArgs),
    /// Linearized flat bundles at the zero section.
    Flat(ModelArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Graph(_) => "graph",
            Command::Sections(_) => "sections",
            Command::Higgs(_) => "higgs",
            Command::Hitchin(_) => "hitchin",
            Command::Spectral(_) => "spectral",
            Command::Flat(_) => "flat",
        }
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
pub struct GraphSource {
    /// One of theta, dumbbell, k4, k33, prism.
    #[arg(long)]
    pub catalog: Option<String>,
    /// A random connected trivalent graph with this many vertices.
    #[arg(long)]
    pub random: Option<usize>,
    /// A graph JSON file.
    #[arg(long)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the graph JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Catalog name or path to a graph JSON file.
    #[arg(long, default_value = "theta")]
    pub graph: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scalar domain (default: exact, float for `spectral`).
    #[arg(long, value_enum)]
    pub domain: Option<Domain>,
    /// Write the computed objects as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Use this framing JSON instead of random framings.
    #[arg(long)]
    pub framing: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs_digest: String,
    pub domain: Domain,
    pub seed: u64,
    pub results: Map<String, Value>,
    pub checks: BTreeMap<String, bool>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl RunReport {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).unwrap_or(Value::Null)
    }
}

/// Accumulates results and named pass/fail checks for one command.
#[derive(Default)]
struct Findings {
    results: Map<String, Value>,
    checks: BTreeMap<String, bool>,
}

impl Findings {
    fn put(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    fn check(&mut self, key: &str, ok: bool) {
        let entry = self.checks.entry(key.to_string()).or_insert(true);
        *entry &= ok;
    }
}

/// Catalog name, or else a path to graph JSON.
pub fn resolve_graph(name: &str) -> Result<TrivalentGraph> {
    if CATALOG.contains(&name) {
        return catalog_graph(name);
    }
    let path = Path::new(name);
    if path.exists() {
        return io::graph_from_value(&io::read_json(path)?);
    }
    Err(Error::UnknownName(name.to_string()))
}

fn digest(command: &str, inputs: &Value) -> String {
    let text = json!({ "command": command, "inputs": inputs }).to_string();
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn run(cli: &Cli) -> Result<RunReport> {
    let name = cli.command.name();
    let (findings, inputs, domain, seed) = match &cli.command {
        Command::Graph(args) => {
            let (f, inputs) = cmd_graph(args)?;
            (f, inputs, Domain::Exact, args.seed)
        }
        Command::Sections(args) => {
            let g = resolve_graph(&args.graph)?;
            let domain = args.domain.unwrap_or(Domain::Exact);
            let f = match domain {
                Domain::Exact => cmd_sections::<crate::scalar::Rational>(&g, args)?,
                Domain::Float => cmd_sections::<Complex>(&g, args)?,
            };
            (f, model_inputs(&g, args, None)?, domain, args.seed)
        }
        Command::Higgs(args) | Command::Hitchin(args) | Command::Spectral(args) | Command::Flat(args) => {
            let c = &args.common;
            let g = resolve_graph(&c.graph)?;
            let default = if name == "spectral" { Domain::Float } else { Domain::Exact };
            let domain = c.domain.unwrap_or(default);
            let f = match domain {
                Domain::Exact => run_model::<crate::scalar::Rational>(name, &g, args)?,
                Domain::Float => run_model::<Complex>(name, &g, args)?,
            };
            (f, model_inputs(&g, c, args.framing.as_deref())?, domain, c.seed)
        }
    };
    let pass = findings.checks.values().all(|&ok| ok);
    Ok(RunReport {
        command: name.to_string(),
        inputs_digest: digest(name, &inputs),
        domain,
        seed,
        results: findings.results,
        checks: findings.checks,
        pass,
        wall_time_ms: None,
    })
}

fn model_inputs(g: &TrivalentGraph, c: &CommonArgs, framing: Option<&Path>) -> Result<Value> {
    let framing = framing.map(io::read_json).transpose()?;
    Ok(json!({ "graph": io::graph_to_value(g), "trials": c.trials, "framing": framing }))
}

fn run_model<T: RandomSl2>(name: &str, g: &TrivalentGraph, args: &ModelArgs) -> Result<Findings> {
    let fixed = args
        .framing
        .as_deref()
        .map(|p| io::framing_from_json::<T>(g, &io::read_json(p)?))
        .transpose()?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.common.seed);
    let mut framings = move |rng: &mut ChaCha8Rng| fixed.clone().unwrap_or_else(|| Framing::random(g, rng));
    match name {
        "higgs" => cmd_higgs(g, &args.common, &mut framings, &mut rng),
        "hitchin" => cmd_hitchin(g, &args.common, &mut framings, &mut rng),
        "spectral" => cmd_spectral(g, &args.common, &mut framings, &mut rng),
        _ => cmd_flat(g, &args.common, &mut framings, &mut rng),
    }
}

fn cmd_graph(args: &GraphArgs) -> Result<(Findings, Value)> {
    let s = &args.source;
    let (g, inputs) = if let Some(name) = &s.catalog {
        (catalog_graph(name)?, json!({ "catalog": name }))
    } else if let Some(n) = s.random {
        (random_trivalent(n, args.seed)?, json!({ "random": n }))
    } else if let Some(path) = &s.file {
        let v = io::read_json(path)?;
        (io::graph_from_value(&v)?, json!({ "file": v }))
    } else {
        return Err(Error::InvalidInput("no graph source given".into()));
    };
    let tree = spanning_tree(&g);
    let mut f = Findings::default();
    f.put("genus", g.genus());
    f.put("vertices", g.vertex_count());
    f.put("edges", g.edge_count());
    f.put("darts", g.dart_count());
    f.put("tree_edges", tree.tree_edges.len());
    f.put("cotree_edges", tree.cotree_edges.len());
    f.put("canonical_hash", g.canonical_hash());
    f.put("graph", io::graph_to_value(&g));
    f.check("cardinalities", g.cardinalities_consistent());
    f.check("cotree_size_is_genus", tree.cotree_edges.len() == g.genus());
    if let Some(out) = &args.out {
        io::write_json(out, &io::graph_to_value(&g))?;
    }
    Ok((f, inputs))
}

fn cmd_sections<T: Scalar>(g: &TrivalentGraph, args: &CommonArgs) -> Result<Findings> {
    let genus = g.genus();
    let k = canonical_space::<T>(g);
    let q = double_canonical_space::<T>(g);
    let he_rank = if q.basis.is_empty() { 0 } else { bires_coordinate_matrix(g, &q.basis)?.rank() };
    let matching = k.basis.iter().map(|w| w.matching_residual(g)).fold(0.0, crate::scalar::nan_max);
    let mut f = Findings::default();
    f.put("genus", genus);
    f.put("dim_K", k.dimension);
    f.put("rank_K", k.constraint_rank);
    f.put("dim_2K", q.dimension);
    f.put("rank_2K", q.constraint_rank);
    f.put("He_rank", he_rank);
    f.put("K_matching_residual", matching);
    f.check("dim_K", k.dimension == genus);
    f.check("rank_K", k.constraint_rank == 3 * genus - 4);
    f.check("dim_2K", q.dimension == 3 * genus - 3);
    f.check("rank_2K", q.constraint_rank == 3 * genus - 3);
    f.check("He_isomorphism", he_rank == 3 * genus - 3);
    if let Some(out) = &args.out {
        let value = json!({
            "K": k.basis.iter().map(io::differential_to_json).collect::<Vec<_>>(),
            "2K": q.basis.iter().map(io::quadratic_to_json).collect::<Vec<_>>(),
        });
        io::write_json(out, &value)?;
    }
    Ok(f)
}

type FramingSource<'a, T> = dyn FnMut(&mut ChaCha8Rng) -> Framing<T> + 'a;

fn cmd_higgs<T: RandomSl2>(
    g: &TrivalentGraph,
    args: &CommonArgs,
    framings: &mut FramingSource<'_, T>,
    rng: &mut ChaCha8Rng,
) -> Result<Findings> {
    let expected = 3 * g.genus() - 3;
    let mut f = Findings::default();
    let mut dims = Vec::new();
    let mut residual = 0.0f64;
    let mut saved = None;
    for _ in 0..args.trials {
        let a = framings(rng);
        let space = higgs_space(g, &a);
        dims.push(space.dimension);
        f.check("dim", space.dimension == expected);
        for phi in &space.basis {
            residual = residual.max(higgs_residual(g, phi, &a));
            f.check("residual", is_higgs_field(g, phi, &a));
        }
        let gauge = GaugeTransform::random(g, rng);
        let phi = random_higgs_field(g, &space, rng);
        f.check(
            "gauge_covariance",
            is_higgs_field(g, &gauge_transform_higgs(&gauge, &phi), &apply_gauge(g, &gauge, &a)),
        );
        saved.get_or_insert((a, space));
    }
    let identity = higgs_space(g, &Framing::<T>::identity(g));
    f.put("dim", dims[0]);
    f.put("dims", dims);
    f.put("residual", residual);
    f.put("expected_dim", expected);
    f.put("identity_framing_dim", identity.dimension);
    if let (Some(out), Some((a, space))) = (&args.out, saved) {
        let value = json!({
            "framing": io::framing_to_json(g, &a),
            "basis": space.basis.iter().map(io::higgs_to_json).collect::<Vec<_>>(),
        });
        io::write_json(out, &value)?;
    }
    Ok(f)
}

fn to_complex_space<T: Scalar>(space: &HiggsSpace<T>) -> HiggsSpace<Complex> {
    HiggsSpace {
        basis: space.basis.iter().map(|b| b.map_domain(T::to_complex)).collect(),
        dimension: space.dimension,
        constraint_rank: space.constraint_rank,
    }
}

fn cmd_hitchin<T: RandomSl2>(
    g: &TrivalentGraph,
    args: &CommonArgs,
    framings: &mut FramingSource<'_, T>,
    rng: &mut ChaCha8Rng,
) -> Result<Findings> {
    let expected = 3 * g.genus() - 3;
    let mut f = Findings::default();
    let mut ranks = Vec::new();
    let mut fd_error = 0.0f64;
    let mut det_identity = 0.0f64;
    let mut first = None;
    for _ in 0..args.trials {
        let a = framings(rng);
        let space = higgs_space(g, &a);
        let phi = generic_field(g, &space, rng)?;
        let coords = hitchin_in_he_coords(g, &phi, &a)?;
        let jac = hitchin_jacobian(g, &phi, &space.basis)?;
        let regular = is_regular(g, &hitchin_image(&phi));
        ranks.push(jac.rank);
        f.check("jacobian_rank", jac.rank == expected);

        let identity = bires_det_identity(&phi);
        det_identity = det_identity.max(identity);
        f.check("det_identity", identity <= if T::DOMAIN == Domain::Exact { 0.0 } else { 1e-10 * phi.norm().powi(2).max(1.0) });

        let gauge = GaugeTransform::random(g, rng);
        let moved = hitchin_in_he_coords(g, &gauge_transform_higgs(&gauge, &phi), &apply_gauge(g, &gauge, &a))?;
        let scale = coords.iter().map(Scalar::magnitude).fold(1.0, crate::scalar::nan_max);
        f.check(
            "gauge_invariance",
            coords.iter().zip(&moved).all(|(x, y)| (x.clone() - y.clone()).negligible(1e-9, scale)),
        );

        let err = jacobian_fd_error(
            g,
            &phi.map_domain(T::to_complex),
            &a.map_domain(T::to_complex),
            &to_complex_space(&space).basis,
            FD_STEP,
        )?;
        fd_error = fd_error.max(err);
        f.check("finite_differences", err < FD_TOL);
        first.get_or_insert((coords, regular, jac.rank, a, phi));
    }
    let (coords, regular, rank, a, phi) = first.expect("at least one trial");
    let report = io::hitchin_report_to_json(&coords, regular.regular, rank);
    for (k, v) in report.as_object().into_iter().flatten() {
        f.put(k, v.clone());
    }
    f.put("regularity_failures", serde_json::to_value(&regular.failures)?);
    f.put("jacobian_ranks", ranks);
    f.put("expected_rank", expected);
    f.put("fd_error", fd_error);
    f.put("det_identity_residual", det_identity);
    if let Some(out) = &args.out {
        let mut value = report;
        value["framing"] = io::framing_to_json(g, &a);
        value["higgs"] = io::higgs_to_json(&phi);
        io::write_json(out, &value)?;
    }
    Ok(f)
}

/// A random field of `space` with regular determinant; small rational
/// coefficients hit the non-generic locus often enough to matter.
fn generic_field<T: RandomSl2>(
    g: &TrivalentGraph,
    space: &HiggsSpace<T>,
    rng: &mut ChaCha8Rng,
) -> Result<HiggsField<T>> {
    for _ in 0..REGULAR_ATTEMPTS {
        let phi = random_higgs_field(g, space, rng);
        if is_regular(g, &hitchin_image(&phi)).regular {
            return Ok(phi);
        }
    }
    Err(Error::GenerationFailed {
        attempts: REGULAR_ATTEMPTS,
        reason: "no Higgs field with regular determinant".into(),
    })
}

/// A random field of `space` whose spectral data exist.
fn regular_field<T: RandomSl2>(
    g: &TrivalentGraph,
    a: &Framing<Complex>,
    space: &HiggsSpace<T>,
    rng: &mut ChaCha8Rng,
) -> Result<(HiggsField<T>, HiggsField<Complex>, SpectralData)> {
    for _ in 0..REGULAR_ATTEMPTS {
        let native = random_higgs_field(g, space, rng);
        let phi = native.map_domain(T::to_complex);
        if let Ok(data) = spectral_data(g, &phi, a) {
            return Ok((native, phi, data));
        }
    }
    Err(Error::GenerationFailed {
        attempts: REGULAR_ATTEMPTS,
        reason: "no Higgs field with regular determinant".into(),
    })
}

fn cmd_spectral<T: RandomSl2>(
    g: &TrivalentGraph,
    args: &CommonArgs,
    framings: &mut FramingSource<'_, T>,
    rng: &mut ChaCha8Rng,
) -> Result<Findings> {
    let genus = g.genus();
    let prym = prym_report(g);
    let mut f = Findings::default();
    let mut roundtrip = 0.0f64;
    let mut first = None;
    for _ in 0..args.trials {
        let a_exact = framings(rng);
        let space = higgs_space(g, &a_exact);
        let a = a_exact.map_domain(T::to_complex);
        let (native, phi, data) = regular_field(g, &a, &space, rng)?;
        let curve = build_spectral_curve(g, &phi, &a)?;
        f.check("genus", curve.arithmetic_genus() == 4 * genus - 3);
        f.check("fixed_points", curve.fixed_point_count() == 2 * (2 * genus - 2));
        f.check("quotient", curve.quotient_is(g));

        let bundle = line_bundle_lphi(&curve);
        f.check("multidegree", bundle.multidegree.iter().all(|&d| d == 1));

        let rebuilt = reconstruct_higgs(g, &data, &a)?;
        let err = relative_error(&phi, &rebuilt);
        roundtrip = roundtrip.max(err);
        f.check("roundtrip", err < ROUNDTRIP_TOL);

        let jac = hitchin_jacobian(g, &native, &space.basis)?;
        f.check("prym_matches_higgs_dim", prym.prym_dim == space.dimension);
        f.check("prym_matches_jacobian_rank", prym.prym_dim == jac.rank);
        first.get_or_insert((curve, space.dimension, jac.rank, data));
    }
    let (curve, higgs_dim, rank, data) = first.expect("at least one trial");
    f.check("prym_dim", prym.prym_dim == 3 * genus - 3);
    f.check("anti_invariant_rank", anti_invariant_rank(g) == prym.prym_dim);
    f.put("genus", curve.arithmetic_genus());
    f.put("components", curve.component_count());
    f.put("nodes", curve.node_count());
    f.put("fixed_points", curve.fixed_point_count());
    f.put("prym", serde_json::to_value(prym)?);
    f.put("prym_dim", prym.prym_dim);
    f.put("higgs_dim", higgs_dim);
    f.put("jacobian_rank", rank);
    f.put("roundtrip_err", roundtrip);
    if let Some(out) = &args.out {
        io::write_json(out, &io::spectral_to_json(&data, Some(&prym)))?;
    }
    Ok(f)
}

fn cmd_flat<T: RandomSl2>(
    g: &TrivalentGraph,
    args: &CommonArgs,
    framings: &mut FramingSource<'_, T>,
    rng: &mut ChaCha8Rng,
) -> Result<Findings> {
    let expected = 3 * g.genus() - 3;
    let tree = spanning_tree(g);
    let mut f = Findings::default();
    let mut first = None;
    for _ in 0..args.trials {
        let a = framings(rng);
        let zero = zero_section(g, &a);
        let local_dim = flat_local_dimension(g, &zero)?;
        let rp = residue_parameterization(g, &a);
        let matches = rp.matches_flat_linearization && rp.is_isomorphism();
        f.check("local_dim", local_dim == expected);
        f.check("linearization_matches_higgs", matches);

        let ac = a.map_domain(T::to_complex);
        let bundle = random_flat_bundle(g, &ac, 0.1, rng)?;
        let bundle_dim = flat_local_dimension(g, &bundle)?;
        f.check("random_bundle_local_dim", bundle_dim == expected);
        first.get_or_insert((local_dim, matches, rp.higgs_dim, subspace_flags(g, &zero, &tree), bundle, bundle_dim));
    }
    let (local_dim, matches, higgs_dim, flags, bundle, bundle_dim) = first.expect("at least one trial");
    f.put("local_dim", local_dim);
    f.put("linearization_matches_higgs", matches);
    f.put("higgs_dim", higgs_dim);
    f.put("zero_section_flags", serde_json::to_value(flags)?);
    f.put("random_bundle_local_dim", bundle_dim);
    f.put("random_bundle_residual", vertex_relation_residual(g, &bundle));
    if let Some(out) = &args.out {
        io::write_json(out, &io::flat_bundle_to_json(g, &bundle))?;
    }
    Ok(f)
}
