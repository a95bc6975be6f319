use std::fmt::Write as _;
use std::process::ExitCode;

use serde_json::{json, Value};
use taboo_hitting::*;

use crate::args::{CurveArgs, LimitArgs, QuadArgs, QueryArgs, SimulateArgs, TailArgs};
use crate::failure::{Failure, EXIT_NUMERICAL, EXIT_VERIFY};
use crate::manifest::{manifest_path, QueryRecord, RunManifest};
use crate::output::{self, emit, num, to_json, write_with_manifest};

/// Halvings of a too-coarse time step before giving up.
const MAX_STEP_HALVINGS: usize = 6;

struct Loaded {
    model: WalkModel,
    x: LatticeVector,
    y: LatticeVector,
    z: Option<LatticeVector>,
    cfg: QuadratureConfig,
}

impl Loaded {
    fn taboo(&self) -> Option<TabooQuery> {
        self.z.as_ref().map(|z| TabooQuery {
            x: self.x.clone(),
            y: self.y.clone(),
            z: z.clone(),
        })
    }

    fn record(&self) -> QueryRecord {
        QueryRecord {
            x: self.x.0.clone(),
            y: self.y.0.clone(),
            z: self.z.as_ref().map(|z| z.0.clone()),
        }
    }

    fn manifest(&self, command: &str, args: Vec<String>, q: &QueryArgs) -> RunManifest {
        let mut m = RunManifest::new(command, args).with_model(&q.model, &self.model);
        m.query = Some(self.record());
        m.quadrature = Some(self.cfg);
        m
    }
}

fn load(q: &QueryArgs, quad: &QuadArgs) -> std::result::Result<Loaded, Failure> {
    let model = WalkModel::from_file(&q.model)?;
    let d = model.dim();
    for p in [Some(&q.x), Some(&q.y), q.z.as_ref()].into_iter().flatten() {
        if p.0.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.0.len(),
            }
            .into());
        }
    }
    let (x, y) = (LatticeVector::new(q.x.0.clone()), LatticeVector::new(q.y.0.clone()));
    let z = match &q.z {
        Some(z) => Some(TabooQuery::new(x.clone(), y.clone(), z.0.clone())?.z),
        None => None,
    };
    let cfg = quad.config(d);
    cfg.validate()?;
    Ok(Loaded { model, x, y, z, cfg })
}

fn variant_name(minus: bool) -> &'static str {
    if minus {
        "minus"
    } else {
        "plus"
    }
}

fn default_box_radius(l: &Loaded) -> i64 {
    let base = match l.model.dim() {
        1 => 100,
        2 => 60,
        _ => 12,
    };
    let reach = [Some(&l.x), Some(&l.y), l.z.as_ref()]
        .into_iter()
        .flatten()
        .map(|p| p.sup_norm())
        .max()
        .unwrap_or(0);
    base.max(reach + 2 * l.model.max_jump())
}

pub fn limit(a: &LimitArgs, args: Vec<String>) -> std::result::Result<ExitCode, Failure> {
    let l = load(&a.query, &a.quad)?;
    let am = l.model.total_rate();
    let (value, atom) = match l.taboo() {
        Some(q) if a.minus => {
            let lv = taboo_limit_minus(&l.model, &q, &l.cfg)?;
            (lv.value, Some(lv.atom_at_zero))
        }
        Some(q) => (taboo_limit(&l.model, &q, &l.cfg)?, None),
        None => {
            let v = hitting_limit(&l.model, &l.x, &l.y, &l.cfg)?;
            let atom = if l.x == l.y {
                0.0
            } else {
                l.model.jumps().rate(&(&l.y - &l.x)) / am
            };
            (v, a.minus.then_some(atom))
        }
    };
    let mut record = json!({
        "query": l.record(),
        "limit": value,
        "variant": variant_name(a.minus),
        "method": "closed-form",
    });
    if let Some(atom) = atom {
        record["atom_at_zero"] = json!(atom);
    }
    let mut manifest = l.manifest("limit", args, &a.query);
    let mut agree = true;
    if a.verify {
        let sim = SimConfig {
            horizon: 200.0 / am,
            n_paths: a.paths,
            seed: a.seed,
            max_jumps: 1_000_000,
        };
        manifest.sim = Some(sim);
        manifest.seed = Some(a.seed);
        let (mc, tail) = match l.taboo() {
            Some(q) => {
                let mc = if a.minus {
                    estimate_minus_cdf(&l.model, &q, sim.horizon, &sim)?
                } else {
                    estimate_taboo_cdf(&l.model, &q, sim.horizon, &sim)?
                };
                (mc, taboo_tail(&l.model, &q, &l.cfg)?)
            }
            None => (
                estimate_hitting_cdf_many(&l.model, &l.x, &l.y, &[sim.horizon], &sim)?[0],
                hitting_tail(&l.model, &l.x, &l.y, &l.cfg)?,
            ),
        };
        // mass that arrives after the horizon is missing from the estimate
        let allowance = 1.5 * tail.deficit_at(sim.horizon).max(0.0);
        let gap = value - mc.probability;
        let mc_ok = gap >= -3.0 * mc.std_error && gap <= allowance + 3.0 * mc.std_error;
        let absorption = match l.taboo() {
            Some(q) => {
                let radius = a.box_radius.unwrap_or_else(|| default_box_radius(&l));
                let b = absorption_bracket(&l.model, &q, radius)?;
                agree &= b.contains(value);
                json!({ "lower": b.lower, "upper": b.upper, "midpoint": b.midpoint(), "width": b.width(), "box_radius": radius, "contains_limit": b.contains(value) })
            }
            None => Value::Null,
        };
        agree &= mc_ok;
        record["verification"] = json!({
            "absorption": absorption,
            "monte_carlo": {
                "probability": mc.probability,
                "std_error": mc.std_error,
                "n_paths": mc.n_paths,
                "seed": mc.seed,
                "horizon": sim.horizon,
                "truncated": mc.truncated,
                "tail_allowance": allowance,
                "within_ci": mc_ok,
            },
            "agree": agree,
        });
    }
    emit(record, a.out.as_deref(), manifest)?;
    Ok(if agree {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY)
    })
}

fn tail_fields(t: &TailAsymptotic) -> Value {
    let constant = match t.order {
        TailOrder::Zero => Value::Null,
        _ => json!(t.constant),
    };
    json!({ "order": t.order.label(), "order_detail": t.order, "constant": constant })
}

pub fn tail(a: &TailArgs, args: Vec<String>) -> std::result::Result<ExitCode, Failure> {
    let l = load(&a.query, &a.quad)?;
    let closed = match l.taboo() {
        Some(q) if a.minus => taboo_tail_minus(&l.model, &q, &l.cfg)?,
        Some(q) => taboo_tail(&l.model, &q, &l.cfg)?,
        None => hitting_tail(&l.model, &l.x, &l.y, &l.cfg)?,
    };
    let mut record = tail_fields(&closed);
    record["query"] = json!(l.record());
    record["variant"] = json!(variant_name(a.minus));
    let manifest = l.manifest("tail", args, &a.query);
    let mut code = ExitCode::SUCCESS;
    if a.extract {
        let q = l
            .taboo()
            .ok_or_else(|| Error::InvalidQuery("--extract needs a taboo point --z".into()))?;
        match tail_extract(&l.model, &q, &l.cfg) {
            Ok(est) => {
                record["extracted"] = tail_fields(&est);
                record["relative_difference"] = json!((est.constant - closed.constant).abs() / closed.constant.abs());
            }
            Err(e @ Error::ExtrapolationUnstable { .. }) => {
                let f = Failure::from(e);
                record["extracted"] = Value::Null;
                record["error"] = f.to_record()["error"].clone();
                code = ExitCode::from(EXIT_NUMERICAL);
            }
            Err(e) => return Err(e.into()),
        }
    }
    emit(record, a.out.as_deref(), manifest)?;
    Ok(code)
}

enum Curves {
    Taboo(TabooCurves),
    Hitting(CdfCurve),
}

fn solve_curves(l: &Loaded, grid: &TimeGrid) -> Result<Curves> {
    match l.taboo() {
        Some(q) => Ok(Curves::Taboo(taboo_cdf(&l.model, &q, grid, &l.cfg)?)),
        None => Ok(Curves::Hitting(hitting_cdf(&l.model, &l.x, &l.y, grid, &l.cfg)?)),
    }
}

fn curve_csv(curves: &Curves) -> String {
    let mut s = String::new();
    match curves {
        Curves::Taboo(c) => {
            let (lt, lz) = (num(c.target.limit), num(c.taboo.limit));
            s.push_str("t,H_xyz,H_xzy,limit_xyz,limit_xzy\n");
            for (k, (u, v)) in c.target.values.iter().zip(&c.taboo.values).enumerate() {
                let _ = writeln!(s, "{},{},{},{lt},{lz}", num(c.target.grid.time(k)), num(*u), num(*v));
            }
            let _ = writeln!(s, "# limit_xyz={lt},limit_xzy={lz}");
        }
        Curves::Hitting(c) => {
            let lim = num(c.limit);
            s.push_str("t,H_xy,limit_xy\n");
            for (k, v) in c.values.iter().enumerate() {
                let _ = writeln!(s, "{},{},{lim}", num(c.grid.time(k)), num(*v));
            }
            let _ = writeln!(s, "# limit_xy={lim}");
        }
    }
    s
}

pub fn curve(a: &CurveArgs, args: Vec<String>) -> std::result::Result<ExitCode, Failure> {
    let l = load(&a.query, &a.quad)?;
    let am = l.model.total_rate();
    let requested = a.step.unwrap_or(0.05 / am);
    let mut grid = TimeGrid::with_horizon(requested, a.horizon.unwrap_or(50.0 / am))?;
    let mut manifest = l.manifest("curve", args, &a.query);
    let mut halvings = 0;
    let curves = loop {
        match solve_curves(&l, &grid) {
            Ok(c) => break c,
            Err(Error::StepTooCoarse(msg)) if halvings < MAX_STEP_HALVINGS => {
                eprintln!("warning: time step {} too coarse ({msg}); halving", num(grid.step));
                grid = TimeGrid::new(grid.step / 2.0, grid.n_steps * 2)?;
                halvings += 1;
            }
            Err(e) => return Err(e.into()),
        }
    };
    if halvings > 0 {
        manifest.flags.push("step_too_coarse".into());
    }
    manifest.grid = Some(grid);
    let mut summary = json!({
        "output": a.out.display().to_string(),
        "manifest": manifest_path(&a.out).display().to_string(),
        "requested_step": requested,
        "step": grid.step,
        "n_steps": grid.n_steps,
        "flags": manifest.flags,
    });
    match &curves {
        Curves::Taboo(c) => {
            summary["final"] = json!({ "H_xyz": c.target.last(), "H_xzy": c.taboo.last() });
            summary["limits"] = json!({ "limit_xyz": c.target.limit, "limit_xzy": c.taboo.limit });
            summary["residual"] = json!(c.residual);
        }
        Curves::Hitting(c) => {
            summary["final"] = json!({ "H_xy": c.last() });
            summary["limits"] = json!({ "limit_xy": c.limit });
        }
    }
    write_with_manifest(&a.out, &curve_csv(&curves), manifest)?;
    output::print_out(&(to_json(&summary) + "\n"));
    Ok(ExitCode::SUCCESS)
}

pub fn simulate(a: &SimulateArgs, args: Vec<String>) -> std::result::Result<ExitCode, Failure> {
    let quad = QuadArgs {
        points_per_axis: None,
        refinement_limit: None,
        rel_tol: None,
    };
    let l = load(&a.query, &quad)?;
    if a.t_list.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidArgument("times must be finite and non-negative".into()).into());
    }
    let t_max = a.t_list.iter().copied().fold(0.0, f64::max);
    let sim = SimConfig {
        horizon: t_max.max(f64::MIN_POSITIVE),
        n_paths: a.paths,
        seed: a.seed,
        max_jumps: a.max_jumps,
    };
    let est = match l.taboo() {
        Some(q) if a.minus => estimate_minus_cdf_many(&l.model, &q, &a.t_list, &sim)?,
        Some(q) => estimate_taboo_cdf_many(&l.model, &q, &a.t_list, &sim)?,
        None if a.minus => return Err(Error::InvalidQuery("--minus needs a taboo point --z".into()).into()),
        None => estimate_hitting_cdf_many(&l.model, &l.x, &l.y, &a.t_list, &sim)?,
    };
    let mut manifest = l.manifest("simulate", args, &a.query);
    manifest.quadrature = None;
    manifest.sim = Some(sim);
    manifest.seed = Some(a.seed);
    if est.iter().any(|e| e.truncated > 0) {
        manifest.flags.push("jump_cap_exceeded".into());
    }
    let estimates: Vec<Value> = a
        .t_list
        .iter()
        .zip(&est)
        .map(|(t, e)| json!({ "t": t, "probability": e.probability, "std_error": e.std_error, "truncated": e.truncated }))
        .collect();
    let record = json!({
        "query": l.record(),
        "variant": variant_name(a.minus),
        "n_paths": a.paths,
        "seed": a.seed,
        "estimates": estimates,
    });
    emit(record, a.out.as_deref(), manifest)?;
    Ok(ExitCode::SUCCESS)
}
