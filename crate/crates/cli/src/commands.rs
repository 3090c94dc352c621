use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde_json::json;
use wedgegreen_core::bounds::appendix::{evaluate, lozenka_inputs, lozenka_oracle, summarize, zhut_inputs, zhut_oracle, SweepSummary};
use wedgegreen_core::bounds::clouds::{kernel_cloud, CloudKernel, CloudSetup};
use wedgegreen_core::bounds::{fit_constant, PresetParams};
use wedgegreen_core::exponents::{estimate_lambda_c, lambda_dirichlet, DecayFitConfig, Sign};
use wedgegreen_core::kv::KeyValues;
use wedgegreen_core::norms::{mu_interval, sweep_mu, write_sweep_csv, IntervalKind, NormVariant, SweepSetup};
use wedgegreen_core::oblique::{construct_and_compare, difference_samples, ObliqueRunConfig, ObliqueTables};
use wedgegreen_core::samples::{read_csv, write_csv};
use wedgegreen_core::solver::{green, solve, BoundaryCondition, ComparisonRegion, Field, Initial, MeshConfig, ProblemSpec, Rhs, SectorMesh, VertexRow};
use wedgegreen_core::wholespace::random_cloud;
use wedgegreen_core::{gamma_deriv, CoefficientPath, Error, KernelSample, Result, WedgeDomain};

use crate::args::*;
use crate::output::{emit_json, sink, ConfigHash};
use crate::presets::parse_preset;

/// Non-fatal outcome that still maps to the numerical-failure exit code.
pub enum Outcome {
    Ok,
    Flagged(String),
}

fn load_path(hash: &mut ConfigHash, path: &Path) -> Result<CoefficientPath> {
    CoefficientPath::parse(&hash.file(path)?)
}

fn load_domain(hash: &mut ConfigHash, path: &Path) -> Result<WedgeDomain> {
    WedgeDomain::parse(&hash.file(path)?)
}

fn load_mesh(hash: &mut ConfigHash, path: &Path) -> Result<MeshConfig> {
    MeshConfig::from_kv(&KeyValues::parse(&hash.file(path)?)?)
}

fn pair(v: &[f64], what: &str) -> Result<[f64; 2]> {
    match v {
        [a, b] => Ok([*a, *b]),
        _ => Err(Error::InvalidParameter(format!("{what} needs two coordinates, got {}", v.len()))),
    }
}

/// exp(−|x−c|²/w²), with c and w read from `<key>.center` and `<key>.width`.
fn bump(kv: &KeyValues, key: &str) -> Result<Field> {
    let c = pair(&kv.f64_list(&format!("{key}.center"))?, key)?;
    let w = kv.f64(&format!("{key}.width"))?;
    if w.is_nan() || w <= 0.0 {
        return Err(Error::InvalidParameter(format!("{key}.width must be positive")));
    }
    Ok(Arc::new(move |x: &[f64; 2], _t: f64| (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / (w * w)).exp()))
}

/// Problem file: `bc`, `domain` and `coeffs` (paths relative to the file),
/// optional `initial=zero|bump`, `rhs=zero|bump`, `vertex=default|dirichlet`.
fn load_problem(hash: &mut ConfigHash, path: &Path) -> Result<ProblemSpec> {
    let kv = KeyValues::parse(&hash.file(path)?)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let bc = BoundaryCondition::parse(kv.require("bc")?)?;
    let domain = load_domain(hash, &dir.join(kv.require("domain")?))?;
    let coeffs = load_path(hash, &dir.join(kv.require("coeffs")?))?;
    let mut spec = ProblemSpec::new(bc, domain, coeffs)?;
    match kv.get("initial").unwrap_or("zero") {
        "zero" => {}
        "bump" => spec = spec.with_initial(Initial::Field(bump(&kv, "initial")?)),
        other => return Err(Error::Parse(format!("unknown initial data `{other}`"))),
    }
    match kv.get("rhs").unwrap_or("zero") {
        "zero" => {}
        "bump" => spec = spec.with_rhs(Rhs::Plain(bump(&kv, "rhs")?)),
        other => return Err(Error::Parse(format!("unknown right-hand side `{other}`"))),
    }
    match kv.get("vertex").unwrap_or("default") {
        "default" => {}
        "dirichlet" => spec = spec.with_vertex(VertexRow::Dirichlet),
        other => return Err(Error::Parse(format!("unknown vertex row `{other}`"))),
    }
    Ok(spec)
}

fn mesh_for(spec: &ProblemSpec, cfg: &MeshConfig) -> Result<SectorMesh> {
    SectorMesh::new(spec.theta0(), cfg, &spec.path)
}

pub fn kernel(a: &KernelArgs, seed: u64) -> Result<Outcome> {
    let mut hash = ConfigHash::new("kernel", seed);
    let path = load_path(&mut hash, &a.coeffs)?;
    let n = path.dim();
    let alpha = a.alpha.clone().unwrap_or_else(|| vec![0; n]);
    let beta = a.beta.clone().unwrap_or_else(|| vec![0; n]);
    hash.arg("alpha", format!("{alpha:?}")).arg("beta", format!("{beta:?}")).arg("ds", a.ds);
    if let Some(size) = a.cloud {
        hash.arg("cloud", size);
        let samples = random_cloud(n, size, seed)
            .into_iter()
            .map(|p| {
                let value = gamma_deriv(&path, &alpha, &beta, a.ds, &p.x, &p.y, p.t, p.s)?;
                Ok(KernelSample { x: p.x, y: p.y, t: p.t, s: p.s, alpha: alpha.clone(), beta: beta.clone(), d_s: a.ds, value, kind: None })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = sink(a.out.as_ref())?;
        write_csv(&mut out, &samples, &hash.header("kernel"))?;
        out.flush()?;
        return Ok(Outcome::Ok);
    }
    let (Some(x), Some(y), Some(t)) = (&a.x, &a.y, a.t) else {
        return Err(Error::InvalidParameter("kernel needs --x, --y and --t, or --cloud".into()));
    };
    let v = gamma_deriv(&path, &alpha, &beta, a.ds, x, y, t, a.s)?;
    println!("{v:.7}");
    Ok(Outcome::Ok)
}

pub fn lambda(a: &LambdaArgs, seed: u64) -> Result<Outcome> {
    let mut hash = ConfigHash::new("lambda", seed);
    let domain = load_domain(&mut hash, &a.domain)?;
    let path = load_path(&mut hash, &a.coeffs)?;
    let sign = Sign::parse(&a.sign)?;
    hash.arg("sign", &a.sign).arg("method", &a.method);
    let report = match a.method.as_str() {
        "fit" => estimate_lambda_c(&path, &domain, sign, &DecayFitConfig::default())?,
        "closed" => {
            let id = CoefficientPath::identity(path.dim());
            if !path.pieces().iter().all(|a| a == &id.pieces()[0]) {
                return Err(Error::InvalidParameter("the closed form needs A ≡ I".into()));
            }
            lambda_dirichlet(&domain)?
        }
        other => return Err(Error::Parse(format!("unknown method `{other}` (fit or closed)"))),
    };
    let d = report.diagnostics.as_ref();
    let value = json!({
        "lambda": report.lambda,
        "method": report.method,
        "sign": report.sign,
        "residual": d.map(|d| d.residual),
        "radii": d.map(|d| d.radii.clone()),
        "reliable": report.reliable,
    });
    emit_json(a.out.as_ref(), value, &hash)?;
    Ok(if report.reliable { Outcome::Ok } else { Outcome::Flagged("decay fit flagged unreliable".into()) })
}

pub fn solve_cmd(a: &SolveArgs, seed: u64) -> Result<Outcome> {
    let mut hash = ConfigHash::new("solve", seed);
    let spec = load_problem(&mut hash, &a.spec)?;
    let cfg = load_mesh(&mut hash, &a.mesh)?;
    let u = solve(&spec, &mesh_for(&spec, &cfg)?)?;
    let mut out = sink(a.out.as_ref())?;
    u.write_csv(&mut out, &hash.header("solve"))?;
    out.flush()?;
    Ok(Outcome::Ok)
}

const ORDERS: [[u32; 2]; 6] = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]];

pub fn green_cmd(a: &GreenArgs, seed: u64) -> Result<Outcome> {
    let mut hash = ConfigHash::new("green", seed);
    let spec = load_problem(&mut hash, &a.spec)?;
    let cfg = load_mesh(&mut hash, &a.mesh)?;
    let y = pair(&a.pole, "--pole")?;
    hash.arg("pole", format!("{y:?}")).arg("s", a.s).arg("eps", format!("{:?}", a.eps)).arg("stride", a.stride);
    let table = green(&spec, y, a.s, a.eps, &mesh_for(&spec, &cfg)?)?;
    let mut out = sink(a.out.as_ref())?;
    table.grid.write_csv(&mut out, &hash.header("green"))?;
    out.flush()?;
    if let Some(path) = &a.samples {
        let picks = table.picks(&ComparisonRegion::default(), a.stride);
        let mut samples = Vec::new();
        for alpha in ORDERS {
            samples.extend(table.samples(&picks, &alpha)?);
        }
        let mut out = sink(Some(path))?;
        write_csv(&mut out, &samples, &hash.header("green samples"))?;
        out.flush()?;
    }
    Ok(Outcome::Ok)
}

/// Tolerance of the axis identity.
const IDENTITY_TOL: f64 = 0.02;

pub fn oblique(a: &ObliqueArgs, seed: u64) -> Result<Outcome> {
    let mut hash = ConfigHash::new("oblique", seed);
    let domain = load_domain(&mut hash, &a.domain)?;
    let path = load_path(&mut hash, &a.coeffs)?;
    let cfg = load_mesh(&mut hash, &a.mesh)?;
    let y = pair(&a.pole, "--pole")?;
    hash.arg("pole", format!("{y:?}")).arg("s", a.s).arg("eps", a.eps);
    let theta0 = domain.opening_angle().ok_or_else(|| Error::InvalidDomain("oblique runs need a planar sector".into()))?;
    let mesh = SectorMesh::new(theta0, &cfg, &path)?;
    let run = construct_and_compare(&path, domain, &mesh, &ObliqueRunConfig::new(y, a.s, a.eps))?;
    let ok = run.check.pass && run.identity_rel < IDENTITY_TOL;
    let value = json!({
        "rel_l2": run.check.rel_l2,
        "rel_sup": run.check.rel_sup,
        "overlap": run.check.overlap,
        "cross_check_pass": run.check.pass,
        "identity_rel": run.identity_rel,
        "identity_points": run.identity_points,
        "identity_pass": run.identity_rel < IDENTITY_TOL,
    });
    emit_json(a.out.as_ref(), value, &hash)?;
    if let Some(samples_path) = &a.samples {
        let base = ProblemSpec::new(BoundaryCondition::Oblique, domain, path.clone())?;
        let tables = ObliqueTables::build(&base, y, a.s, a.eps, a.y_derivatives, &mesh)?;
        let picks = tables.center.picks(&ComparisonRegion::default(), a.stride);
        let samples = difference_samples(&tables, &path, &picks)?;
        let mut out = sink(Some(samples_path))?;
        write_csv(&mut out, &samples, &hash.header("oblique samples"))?;
        out.flush()?;
    }
    Ok(if ok { Outcome::Ok } else { Outcome::Flagged("oblique construction disagrees with the direct solve".into()) })
}

pub fn verify_bound(a: &VerifyArgs, seed: u64) -> Result<Outcome> {
    let mut hash = ConfigHash::new("verify-bound", seed);
    let preset = parse_preset(&a.preset)?;
    let defaults = PresetParams::default();
    let params = PresetParams {
        lambda_plus: a.lambda_plus.unwrap_or(defaults.lambda_plus),
        lambda_minus: a.lambda_minus.unwrap_or(defaults.lambda_minus),
        eps: a.eps,
        sigma: a.sigma.unwrap_or(defaults.sigma),
        mu: a.mu,
        r: a.r,
        eps_x: a.eps_x,
        eps_y: a.eps_y,
        kappa: a.kappa,
        delta: a.delta,
    };
    hash.arg("preset", preset.name()).arg("params", format!("{params:?}"));
    let (samples, domain) = match (&a.samples, &a.cloud) {
        (Some(path), None) => {
            let text = hash.file(path)?;
            let domain = match &a.domain {
                Some(d) => load_domain(&mut hash, d)?,
                None => WedgeDomain::sector(FRAC_PI_2)?,
            };
            (read_csv(text.as_bytes())?, domain)
        }
        (None, Some(kind)) => {
            let kernel = match kind.as_str() {
                "dirichlet" => CloudKernel::Dirichlet,
                "oblique" => CloudKernel::Oblique,
                "oblique_difference" => CloudKernel::ObliqueDifference,
                other => return Err(Error::Parse(format!("unknown cloud `{other}`"))),
            };
            hash.arg("cloud", kind);
            let setup = CloudSetup::quarter_plane(kernel);
            (kernel_cloud(&setup)?, setup.domain()?)
        }
        _ => return Err(Error::InvalidParameter("give exactly one of --samples and --cloud".into())),
    };
    let report = fit_constant(&samples, preset, &params, &domain)?;
    let mut value = serde_json::to_value(&report).map_err(|e| Error::Parse(e.to_string()))?;
    if let Some(obj) = value.as_object_mut() {
        obj.insert("preset_alias".into(), a.preset.clone().into());
        obj.insert("params".into(), serde_json::to_value(params).map_err(|e| Error::Parse(e.to_string()))?);
    }
    emit_json(a.out.as_ref(), value, &hash)?;
    Ok(if report.confirmed { Outcome::Ok } else { Outcome::Flagged(format!("fit not confirmed: drift {}", report.drift)) })
}

fn summary_lines(s: &SweepSummary) -> String {
    format!("points={} c_half={:e} c_emp={:e} drift={:e} stable={}", s.points, s.c_half, s.c_emp, s.drift, s.stable)
}

pub fn appendix(a: &AppendixArgs, seed: u64) -> Result<Outcome> {
    let mut hash = ConfigHash::new("appendix", seed);
    hash.arg("lemma", &a.lemma).arg("sweep", a.sweep);
    let mut rows: Vec<Vec<String>> = Vec::new();
    let (header, summary): (Vec<&str>, SweepSummary) = match a.lemma.as_str() {
        "zhut" => {
            let exps = match &a.exponents {
                Some(v) if v.len() == 3 => Some([v[0], v[1], v[2]]),
                Some(_) => return Err(Error::InvalidParameter("--exponents takes a,b,c".into())),
                None => None,
            };
            hash.arg("eps", a.eps).arg("exponents", format!("{exps:?}"));
            let inputs = zhut_inputs(a.sweep, seed, a.eps, exps);
            let values = evaluate(&inputs, zhut_oracle)?;
            for (i, (inp, v)) in inputs.iter().zip(&values).enumerate() {
                rows.push(
                    [i as f64, inp.a, inp.b, inp.c, inp.varrho1, inp.varrho2, inp.x1, inp.y1, inp.profile.at(inp.varrho1), v.lhs, v.rhs, v.ratio]
                        .iter()
                        .enumerate()
                        .map(|(k, x)| if k == 0 { format!("{x}") } else { format!("{x:e}") })
                        .collect(),
                );
            }
            (vec!["index", "a", "b", "c", "varrho1", "varrho2", "x1", "y1", "phi", "lhs", "rhs", "ratio"], summarize(seed, &values)?)
        }
        "lozenka" => {
            hash.arg("d", a.d).arg("a", a.a).arg("b", a.b);
            let inputs = lozenka_inputs(a.d, a.a, a.b, a.sweep, seed);
            let values = evaluate(&inputs, lozenka_oracle)?;
            let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";");
            for (i, (inp, v)) in inputs.iter().zip(&values).enumerate() {
                let mut row = vec![i.to_string(), inp.d.to_string(), format!("{:e}", inp.a), format!("{:e}", inp.b)];
                row.extend([inp.varrho1, inp.varrho2].iter().map(|x| format!("{x:e}")));
                row.push(join(&inp.x));
                row.push(join(&inp.y));
                row.extend([v.lhs, v.rhs, v.ratio].iter().map(|x| format!("{x:e}")));
                rows.push(row);
            }
            (vec!["index", "d", "a", "b", "varrho1", "varrho2", "x", "y", "lhs", "rhs", "ratio"], summarize(seed, &values)?)
        }
        other => return Err(Error::Parse(format!("unknown lemma `{other}` (zhut or lozenka)"))),
    };
    let mut out = sink(a.out.as_ref())?;
    for line in hash.header("appendix").lines().chain(std::iter::once(summary_lines(&summary).as_str())) {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(&header)?;
    for r in &rows {
        w.write_record(r)?;
    }
    w.flush()?;
    drop(w);
    out.flush()?;
    Ok(if summary.stable { Outcome::Ok } else { Outcome::Flagged(format!("sweep constant drifted by {}", summary.drift)) })
}

pub fn sweep(a: &SweepArgs, seed: u64) -> Result<Outcome> {
    let mut hash = ConfigHash::new("sweep", seed);
    let mut setup = SweepSetup::quarter_plane();
    setup.bc = BoundaryCondition::parse(&a.kind)?;
    setup.p = a.p;
    setup.q = a.q;
    setup.variant = NormVariant::parse(&a.variant)?;
    if let Some(d) = &a.domain {
        setup.domain = load_domain(&mut hash, d)?;
    }
    if a.steps == 0 {
        return Err(Error::InvalidParameter("--steps must be positive".into()));
    }
    hash.arg("kind", &a.kind)
        .arg("p", a.p)
        .arg("q", a.q)
        .arg("variant", &a.variant)
        .arg("mu", format!("{}..{}/{}", a.mu_from, a.mu_to, a.steps))
        .arg("refinements", a.refinements);
    let grid: Vec<f64> = if a.steps == 1 {
        vec![a.mu_from]
    } else {
        (0..a.steps).map(|k| a.mu_from + (a.mu_to - a.mu_from) * k as f64 / (a.steps - 1) as f64).collect()
    };
    let rows = sweep_mu(&setup, &grid, a.refinements + 1)?;
    let mut out = sink(a.out.as_ref())?;
    write_sweep_csv(&mut out, &rows, &hash.header("sweep"))?;
    out.flush()?;
    Ok(Outcome::Ok)
}

pub fn intervals(a: &IntervalArgs) -> Result<Outcome> {
    let iv = mu_interval(IntervalKind::parse(&a.kind)?, a.p, a.m, a.lambda_plus, a.lambda_minus)?;
    println!("{iv}");
    Ok(Outcome::Ok)
}

