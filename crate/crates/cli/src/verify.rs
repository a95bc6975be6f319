use std::f64::consts::PI;
use std::process::ExitCode;

use serde::Serialize;
use serde_json::json;
use taboo_hitting::*;

use crate::args::{Format, Suite, VerifyArgs};
use crate::failure::{Failure, EXIT_VERIFY};
use crate::manifest::RunManifest;
use crate::output::{self, emit, to_json};

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum Comparison {
    /// `|measured − expected| ≤ tolerance`
    Abs,
    /// `|measured/expected − 1| ≤ tolerance`
    Rel,
    /// `measured ≤ tolerance`
    AtMost,
    /// `expected` lies in a bracket of width `measured ≤ tolerance`
    Bracket,
}

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: String,
    measured: f64,
    expected: Option<f64>,
    tolerance: f64,
    comparison: Comparison,
    pass: bool,
}

#[derive(Default)]
struct Report {
    checks: Vec<Check>,
}

impl Report {
    fn abs(&mut self, name: impl Into<String>, measured: f64, expected: f64, tol: f64) {
        let pass = (measured - expected).abs() <= tol;
        self.push(name, measured, Some(expected), tol, Comparison::Abs, pass);
    }

    fn rel(&mut self, name: impl Into<String>, measured: f64, expected: f64, tol: f64) {
        let pass = (measured / expected - 1.0).abs() <= tol;
        self.push(name, measured, Some(expected), tol, Comparison::Rel, pass);
    }

    fn at_most(&mut self, name: impl Into<String>, measured: f64, tol: f64) {
        self.push(name, measured, None, tol, Comparison::AtMost, measured <= tol);
    }

    fn bracket(&mut self, name: impl Into<String>, b: &AbsorptionBracket, expected: f64, tol: f64) {
        let pass = b.contains(expected) && b.width() <= tol;
        self.push(name, b.width(), Some(expected), tol, Comparison::Bracket, pass);
    }

    fn push(
        &mut self,
        name: impl Into<String>,
        measured: f64,
        expected: Option<f64>,
        tolerance: f64,
        comparison: Comparison,
        pass: bool,
    ) {
        self.checks.push(Check {
            name: name.into(),
            measured,
            expected,
            tolerance,
            comparison,
            pass,
        });
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let mut s = format!(
            "{:<width$}  {:>22}  {:>22}  {:>10}  {:<8}  status\n",
            "check", "measured", "expected", "tolerance", "kind"
        );
        for c in &self.checks {
            let expected = c.expected.map(|e| format!("{e:.15e}")).unwrap_or_else(|| "-".into());
            let kind = serde_json::to_value(c.comparison).unwrap();
            s += &format!(
                "{:<width$}  {:>22.15e}  {:>22}  {:>10.1e}  {:<8}  {}\n",
                c.name,
                c.measured,
                expected,
                c.tolerance,
                kind.as_str().unwrap_or(""),
                if c.pass { "PASS" } else { "FAIL" }
            );
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        s += &format!("{} checks, {failed} failed\n", self.checks.len());
        s
    }
}

fn v(c: &[i64]) -> LatticeVector {
    LatticeVector::new(c.to_vec())
}

fn q(x: &[i64], y: &[i64], z: &[i64]) -> Result<TabooQuery> {
    TabooQuery::new(v(x), v(y), v(z))
}

fn cfg(d: usize) -> QuadratureConfig {
    QuadratureConfig::for_dimension(d)
}

fn nonsimple_1d() -> Result<WalkModel> {
    WalkModel::new(1, [(v(&[1]), 0.4), (v(&[2]), 0.1)])
}

/// A query in the model's dimension: start one step off the taboo point at
/// the origin, target on the opposite side.
fn probe_query(model: &WalkModel) -> Result<TabooQuery> {
    let d = model.dim();
    let e = LatticeVector::unit(d, 0);
    let mut y = vec![0; d];
    y[0] = -1;
    if d > 1 {
        y[1] = 1;
    }
    TabooQuery::new(e, v(&y), LatticeVector::zero(d))
}

fn identities(r: &mut Report, model: Option<&WalkModel>) -> Result<()> {
    for x in 1..=10u32 {
        r.rel(
            format!("trig identity x={x}"),
            trig_identity_check(x, &cfg(1))?,
            2.0 * PI * x as f64,
            1e-8,
        );
    }
    let simple = WalkModel::simple_1d(1.0)?;
    for x in -10..=10i64 {
        let expected = if x == 0 { 1.0 } else { x.abs() as f64 };
        r.abs(
            format!("rho simple x={x}"),
            rho(&simple, &v(&[x]), &cfg(1))?,
            expected,
            1e-6,
        );
    }
    r.rel(
        "gamma_1 simple a=1",
        simple.spectral().gamma_d,
        1.0 / (2.0 * PI).sqrt(),
        1e-12,
    );
    r.rel(
        "tilde_gamma simple r=2",
        tilde_gamma(&simple, &v(&[2]))?,
        2.0 / (2.0 * PI).sqrt(),
        1e-12,
    );
    let o = v(&[0]);
    r.rel(
        "green simple lambda=1",
        green_function(&simple, 1.0, &o, &o, &cfg(1))?.value,
        1.0 / 3f64.sqrt(),
        1e-8,
    );
    let cubic = WalkModel::nearest_neighbour(3, 1.0)?;
    let o3 = LatticeVector::zero(3);
    r.rel(
        "green cubic lambda=0",
        green_function(&cubic, 0.0, &o3, &o3, &cfg(3))?.value,
        1.516386059151978,
        1e-6,
    );
    if let Some(m) = model {
        let d = m.dim();
        let h = 1e-4;
        let b = &m.spectral().hessian;
        for i in 0..d {
            let mut th = vec![0.0; d];
            th[i] = h;
            let fd = -2.0 * char_exponent(m, &th)? / (h * h);
            r.rel(format!("model hessian B[{i},{i}]"), fd, b[(i, i)], 1e-6);
        }
        let e = LatticeVector::unit(d, 0);
        r.push(
            "model rho(e1) > 0",
            rho(m, &e, &cfg(d))?,
            None,
            0.0,
            Comparison::AtMost,
            rho(m, &e, &cfg(d))? > 0.0,
        );
    }
    Ok(())
}

fn limits(r: &mut Report, model: Option<&WalkModel>) -> Result<()> {
    let simple = WalkModel::simple_1d(1.0)?;
    let table = [
        (2, 5, 0, 0.4),
        (0, 3, 0, 1.0 / 6.0),
        (3, 3, 0, 5.0 / 6.0),
        (-1, 2, 0, 0.0),
        (7, 5, 0, 1.0),
    ];
    for (x, y, z, expected) in table {
        let qq = q(&[x], &[y], &[z])?;
        let value = taboo_limit(&simple, &qq, &cfg(1))?;
        r.abs(format!("simple ({x},{y},{z}) closed form"), value, expected, 0.0);
        r.bracket(
            format!("simple ({x},{y},{z}) absorption R=100"),
            &absorption_bracket(&simple, &qq, 100)?,
            value,
            1e-3,
        );
    }
    let square = WalkModel::nearest_neighbour(2, 1.0)?;
    let qq = q(&[1, 0], &[0, 1], &[0, 0])?;
    let value = taboo_limit(&square, &qq, &cfg(2))?;
    r.bracket(
        "square ((1,0),(0,1),(0,0)) absorption R=60",
        &absorption_bracket(&square, &qq, 60)?,
        value,
        0.02,
    );
    let m = nonsimple_1d()?;
    let (a, b) = (q(&[1], &[4], &[-2])?, q(&[1], &[-2], &[4])?);
    r.abs(
        "nonsimple complementarity (1,4,-2)",
        taboo_limit(&m, &a, &cfg(1))? + taboo_limit(&m, &b, &cfg(1))?,
        1.0,
        1e-9,
    );
    if let Some(m) = model {
        let d = m.dim();
        let qq = probe_query(m)?;
        let value = taboo_limit(m, &qq, &cfg(d))?;
        if d <= 2 {
            let (radius, tol) = if d == 1 { (200, 0.02) } else { (100, 0.03) };
            r.bracket(
                format!("model {} absorption R={radius}", fmt_query(&qq)),
                &absorption_bracket(m, &qq, radius)?,
                value,
                tol,
            );
        } else {
            let h = hitting_limit(m, &qq.x, &qq.y, &cfg(d))?;
            r.at_most(
                format!("model {} limit minus hitting limit", fmt_query(&qq)),
                value - h,
                0.0,
            );
        }
    }
    Ok(())
}

fn fmt_query(q: &TabooQuery) -> String {
    format!("({},{},{})", q.x, q.y, q.z)
}

fn tails(r: &mut Report, model: Option<&WalkModel>) -> Result<()> {
    let simple = WalkModel::simple_1d(1.0)?;
    let t = taboo_tail(&simple, &q(&[1], &[4], &[6])?, &cfg(1))?;
    r.rel(
        "simple (1,4,6) constant",
        t.constant,
        3.0 * 2f64.sqrt() / PI.sqrt(),
        1e-12,
    );
    let zero = taboo_tail(&simple, &q(&[-1], &[2], &[0])?, &cfg(1))?;
    r.abs("simple (-1,2,0) deficit", zero.deficit_at(10.0), 0.0, 0.0);
    let m = nonsimple_1d()?;
    for (x, y, z) in [(2, 5, 0), (3, 3, 0), (0, 3, 0)] {
        let qq = q(&[x], &[y], &[z])?;
        let closed = taboo_tail(&m, &qq, &cfg(1))?.constant;
        r.rel(
            format!("nonsimple ({x},{y},{z}) extracted C1"),
            tail_extract(&m, &qq, &cfg(1))?.constant,
            closed,
            0.05,
        );
    }
    let square = WalkModel::nearest_neighbour(2, 1.0)?;
    let qq = q(&[1, 0], &[0, 1], &[0, 0])?;
    let closed = taboo_tail(&square, &qq, &cfg(2))?.constant;
    r.rel(
        "square ((1,0),(0,1),(0,0)) extracted C2",
        tail_extract(&square, &qq, &cfg(2))?.constant,
        closed,
        0.1,
    );
    if let Some(m) = model.filter(|m| m.dim() <= 2 && !is_simple_1d(m)) {
        let d = m.dim();
        let qq = probe_query(m)?;
        let closed = taboo_tail(m, &qq, &cfg(d))?.constant;
        let tol = if d == 1 { 0.05 } else { 0.1 };
        r.rel(
            format!("model {} extracted constant", fmt_query(&qq)),
            tail_extract(m, &qq, &cfg(d))?.constant,
            closed,
            tol,
        );
    }
    Ok(())
}

fn curve_checks(r: &mut Report, label: &str, m: &WalkModel, qq: &TabooQuery, horizon: f64) -> Result<TabooCurves> {
    let d = m.dim();
    let a = m.total_rate();
    let grid = TimeGrid::default_for(m, horizon)?;
    let c = taboo_cdf(m, qq, &grid, &cfg(d))?;
    r.at_most(format!("{label} residual"), c.residual, 1e-8);
    r.at_most(
        format!("{label} largest decrease"),
        c.target.max_decrease().max(c.taboo.max_decrease()),
        1e-9,
    );
    r.abs(
        format!("{label} H(0)"),
        c.target.values[0].abs().max(c.taboo.values[0].abs()),
        0.0,
        0.0,
    );
    for k in [0.5, 1.0, 2.0] {
        let lam = k * a;
        let closed = laplace_taboo(m, qq, lam, &cfg(d))?;
        r.abs(
            format!("{label} transform lambda={k}a"),
            curve_laplace(&c.target, lam),
            closed,
            1e-3,
        );
    }
    Ok(c)
}

fn curves(r: &mut Report, model: Option<&WalkModel>) -> Result<()> {
    let simple = WalkModel::simple_1d(1.0)?;
    let c = curve_checks(r, "simple (2,5,0)", &simple, &q(&[2], &[5], &[0])?, 200.0)?;
    r.abs("simple (2,5,0) H(200)", c.target.last(), 0.4, 0.01);
    curve_checks(r, "nonsimple (1,4,-1)", &nonsimple_1d()?, &q(&[1], &[4], &[-1])?, 60.0)?;
    if let Some(m) = model {
        let qq = probe_query(m)?;
        curve_checks(r, &format!("model {}", fmt_query(&qq)), m, &qq, 40.0 / m.total_rate())?;
    }
    Ok(())
}

pub fn run(a: &VerifyArgs, args: Vec<String>) -> std::result::Result<ExitCode, Failure> {
    let model = a.model.as_ref().map(WalkModel::from_file).transpose()?;
    let mut report = Report::default();
    match a.suite {
        Suite::Identities => identities(&mut report, model.as_ref()),
        Suite::Limits => limits(&mut report, model.as_ref()),
        Suite::Tails => tails(&mut report, model.as_ref()),
        Suite::Curves => curves(&mut report, model.as_ref()),
    }?;
    let suite = serde_json::to_value(a.suite_name()).unwrap();
    let record = json!({ "suite": suite, "passed": report.passed(), "checks": report.checks });
    let mut manifest = RunManifest::new("verify", args);
    if let (Some(path), Some(m)) = (&a.model, &model) {
        manifest = manifest.with_model(path, m);
    }
    match (a.format, &a.out) {
        (Format::Table, None) => output::print_out(&report.table()),
        (Format::Table, Some(path)) => {
            output::print_out(&report.table());
            emit(record, Some(path), manifest)?;
        }
        (Format::Json, out) => {
            if out.is_some() {
                output::print_out(&(to_json(&record) + "\n"));
            }
            emit(record, out.as_deref(), manifest)?;
        }
    }
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY)
    })
}

impl VerifyArgs {
    fn suite_name(&self) -> &'static str {
        match self.suite {
            Suite::Identities => "identities",
            Suite::Limits => "limits",
            Suite::Tails => "tails",
            Suite::Curves => "curves",
        }
    }
}
