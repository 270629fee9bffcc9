//! Command-line surface: argument parsing, one command per module operation,
//! the dimension-drop pipeline and deterministic rendering.

use clap::{Parser, Subcommand};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::PathBuf;

use crate::arith::*;
use crate::attractor::{NaturalMeasure, SeedStrategy};
use crate::config::{OutputFormat, RunConfig, SystemSource, PRECISION_ENV};
use crate::dimension::*;
use crate::error::{Error, Result};
use crate::examples::{registry, verify};
use crate::ifs::IFSystem;
use crate::pressure::{pressure_bracket_with, pressure_root_with, RootBracket};
use crate::report::RunStatus;
use crate::separation::*;

#[derive(Debug, Parser)]
#[command(name = "cil", version, about = "Certified computations for conformal iterated function systems")]
pub struct Cli {
    /// JSON run configuration; flags given here override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Named system or path to a system definition file.
    #[arg(long, global = true)]
    pub system: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Word length cap.
    #[arg(long, global = true)]
    pub depth_cap: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate a system; print its certified constants.
    Validate,
    /// Certified bracket of P(s) at one depth.
    Pressure {
        #[arg(long)]
        s: String,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Certified bracket of the pressure root.
    Dim {
        #[arg(long)]
        tol: Option<String>,
        #[arg(long)]
        max_depth: Option<usize>,
    },
    /// Covering numbers over the r schedule and the fitted slope.
    Boxdim {
        /// Schedule ratio^from ..= ratio^to.
        #[arg(long)]
        ratio: Option<String>,
        #[arg(long)]
        from: Option<u32>,
        #[arg(long)]
        to: Option<u32>,
        /// Skip the certified envelope (saves a root and two content estimates).
        #[arg(long)]
        no_envelope: bool,
    },
    /// Two-sided bounds for H^s_delta of F or of F within a subset.
    Content {
        /// Exponent; defaults to the lower end of the root bracket.
        #[arg(long)]
        s: Option<String>,
        /// Diameter cap; omitted for H^s_inf.
        #[arg(long)]
        delta: Option<String>,
        /// "lo,hi" (an interval) or "x,y,r" (a disc).
        #[arg(long)]
        subset: Option<String>,
    },
    /// Covering number N_r at one scale.
    Nperr {
        #[arg(long)]
        r: String,
    },
    /// Ratios mu(B(x,r))/r^s and the uniform-perfectness search.
    Ahlfors {
        /// Exponent; defaults to the root bracket.
        #[arg(long)]
        s: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Phi(x,r), or Phi*(x,r) with --unrestricted.
    WscCount {
        #[arg(long)]
        x: String,
        #[arg(long)]
        r: String,
        #[arg(long)]
        unrestricted: bool,
    },
    /// Near-coincident pairs of maps up to a word length.
    IlcSearch {
        #[arg(long)]
        max_len: Option<usize>,
        #[arg(long)]
        target: Option<String>,
    },
    /// Builds (x, r) with many distinct restricted maps from ILC witnesses.
    Amplify {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Builds the n points of a weak-tangent approximation.
    Tangent {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// The quasi-self-similarity constant D with sampled witnesses.
    QuasiD,
    /// Built-in examples.
    Example {
        #[command(subcommand)]
        action: ExampleAction,
    },
    /// Root, box slope, overlap scan, ILC and Ahlfors evidence in one table.
    DimensionDrop,
}

#[derive(Debug, Subcommand)]
pub enum ExampleAction {
    List,
    Verify {
        name: String,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
}

/// Structured output of one command.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub system: Option<String>,
    pub status: RunStatus,
    pub warnings: Vec<String>,
    pub report: Value,
    /// Table for CSV output, when the report has one.
    #[serde(skip)]
    pub csv: Option<String>,
    #[serde(skip)]
    pub text: Vec<String>,
}

impl Report {
    fn new(command: &str, sys: Option<&IFSystem>, status: RunStatus, report: Value) -> Self {
        Self {
            command: command.into(),
            system: sys.map(|s| s.name.clone()),
            status,
            warnings: Vec::new(),
            report,
            csv: None,
            text: Vec::new(),
        }
    }

    fn csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }

    fn text(mut self, lines: Vec<String>) -> Self {
        self.text = lines;
        self
    }

    fn warn(mut self, w: String) -> Self {
        self.warnings.push(w);
        self
    }

    fn failure(command: &str, system: Option<String>, e: &Error) -> Self {
        let status = match e {
            Error::Budget(_) | Error::DepthCap(_) => RunStatus::Partial,
            _ => RunStatus::Invalid,
        };
        Self {
            command: command.into(),
            system,
            status,
            warnings: Vec::new(),
            report: json!({ "error": e.to_string() }),
            csv: None,
            text: vec![format!("error: {e}")],
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialise")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn flatten(v: &Value, prefix: &str, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(x, &key, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(x, &format!("{prefix}[{i}]"), out);
            }
        }
        Value::String(s) => out.push((prefix.into(), s.clone())),
        Value::Null => out.push((prefix.into(), String::new())),
        other => out.push((prefix.into(), other.to_string())),
    }
}

/// Deterministic serialisation: exact rationals as strings, floats only as
/// display duplicates, keys in sorted order.
pub fn cmd_report_render(report: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut v = to_value(report);
            v["certified"] = Value::Bool(report.status == RunStatus::Certified);
            let mut s = serde_json::to_string_pretty(&v).expect("json");
            s.push('\n');
            s
        }
        OutputFormat::Csv => match &report.csv {
            Some(c) => c.clone(),
            None => {
                let mut rows = Vec::new();
                flatten(&report.report, "", &mut rows);
                let mut s = String::from("field,value\n");
                for (k, v) in rows {
                    s.push_str(&format!("{},{}\n", csv_field(&k), csv_field(&v)));
                }
                s
            }
        },
        OutputFormat::Text => {
            let sys = report.system.as_deref().map(|s| format!(" [{s}]")).unwrap_or_default();
            let status = match report.status {
                RunStatus::Certified => "certified",
                RunStatus::Partial => "partial",
                RunStatus::Invalid => "invalid",
            };
            let mut s = format!("{}{}: {}\n", report.command, sys, status);
            for w in &report.warnings {
                s.push_str(&format!("warning: {w}\n"));
            }
            let lines = if report.text.is_empty() {
                let mut rows = Vec::new();
                flatten(&report.report, "", &mut rows);
                rows.into_iter().map(|(k, v)| format!("{k} = {v}")).collect()
            } else {
                report.text.clone()
            };
            for l in lines {
                s.push_str(&format!("  {l}\n"));
            }
            s
        }
    }
}

/// Renders by format name; unknown names are an error.
pub fn render_named(report: &Report, format: &str) -> Result<String> {
    Ok(cmd_report_render(report, format.parse()?))
}

fn q(s: &str) -> Result<RationalScalar> {
    parse_rational(s)
}

fn dec(x: &RationalScalar) -> String {
    format!("{:.10}", to_f64(x))
}

fn dec_iv(x: &RationalInterval) -> String {
    let (a, b) = x.to_f64();
    format!("[{a:.10}, {b:.10}]")
}

fn root(sys: &IFSystem, cfg: &RunConfig) -> Result<RootBracket> {
    pressure_root_with(sys, &cfg.tol, cfg.max_depth, cfg.word_budget)
}

fn parse_subset(sys: &IFSystem, s: &str) -> Result<EnclosureBall> {
    let parts: Vec<RationalScalar> = s.split(',').map(q).collect::<Result<_>>()?;
    match (sys.dimension, parts.as_slice()) {
        (1, [lo, hi]) if lo < hi => Ok(EnclosureBall::interval(lo.clone(), hi.clone())),
        (2, [x, y, r]) if r.is_positive() => Ok(EnclosureBall::disc(GaussianRational::new(x.clone(), y.clone()), r)),
        _ => Err(Error::Parse(format!("subset {s:?}: expected lo,hi for a 1-D system or x,y,r for a 2-D one"))),
    }
}

pub fn cmd_validate(sys: &IFSystem) -> Report {
    let diam = sys.diam_f();
    let body = json!({
        "name": sys.name,
        "dimension": sys.dimension,
        "maps": to_value(&sys.maps),
        "omega": to_value(&sys.omega),
        "v_domain": to_value(&sys.v_domain),
        "d_sep": fmt_rational(&sys.d_sep),
        "f_hull": to_value(&sys.f_hull),
        "diam_f": to_value(&diam),
        "distortion": to_value(&sys.distortion),
        "letter_deriv": to_value(&sys.letter_deriv),
        "base_sample_size": sys.base_sample.len(),
        "precision_bits": sys.bits,
        "depth_cap": sys.depth_cap,
    });
    let mut text = vec![
        format!("maps: {} ({}-D)", sys.n_maps(), sys.dimension),
        format!("distortion K = {}", fmt_rational(sys.k())),
        format!("diam F in {}", dec_iv(&diam)),
    ];
    for (i, d) in sys.letter_deriv.iter().enumerate() {
        text.push(format!("|phi_{}'| on V in {}", i + 1, dec_iv(d)));
    }
    Report::new("validate", Some(sys), RunStatus::Certified, body).text(text)
}

pub fn cmd_pressure(sys: &IFSystem, cfg: &RunConfig, s: &RationalScalar, depth: usize) -> Result<Report> {
    let est = pressure_bracket_with(sys, s, depth, cfg.word_budget)?;
    let b = est.bracket();
    let sign = match est.sign() {
        Some(std::cmp::Ordering::Greater) => "positive",
        Some(std::cmp::Ordering::Less) => "negative",
        _ => "undecided",
    };
    let body = json!({
        "s": fmt_rational(s),
        "depth": depth,
        "p_lo": fmt_rational(&b.lo),
        "p_hi": fmt_rational(&b.hi),
        "p_decimal": dec_iv(&b),
        "sign": sign,
        "estimate": to_value(&est),
    });
    let text = vec![format!("P({}) in {} at depth {depth}", fmt_rational(s), dec_iv(&b)), format!("sign: {sign}")];
    Ok(Report::new("pressure", Some(sys), RunStatus::Certified, body).text(text))
}

pub fn cmd_dim(sys: &IFSystem, cfg: &RunConfig) -> Result<Report> {
    let r = root(sys, cfg)?;
    let mut body = to_value(&r);
    body["s_decimal"] = json!(dec_iv(&RationalInterval::hull2(r.s_lo.clone(), r.s_hi.clone())));
    let text = vec![
        format!("P^-1(0) in [{}, {}]", dec(&r.s_lo), dec(&r.s_hi)),
        format!("width {:.3e} at depth {}", to_f64(&r.width), r.depth),
    ];
    let mut rep = Report::new("dim", Some(sys), RunStatus::from_certified(r.certified), body).text(text);
    if r.depth_exhausted {
        rep = rep.warn("depth schedule exhausted before reaching the tolerance".into());
    }
    Ok(rep)
}

pub fn cmd_boxdim(sys: &IFSystem, cfg: &RunConfig, envelope: bool) -> Result<Report> {
    let schedule = cfg.r_schedule.values();
    let ctx = if envelope { Some(envelope_context(sys, &root(sys, cfg)?)?) } else { None };
    let est = box_dimension_estimate(sys, &schedule, ctx.as_ref())?;
    let status = if est.envelope_ok == Some(false) { RunStatus::Partial } else { RunStatus::Certified };
    let mut body = to_value(&est);
    if let Some(c) = &ctx {
        body["envelope_context"] = to_value(c);
    }
    let mut text = vec![format!("slope {:.6} (residual {:.2e})", est.slope, est.residual)];
    for p in &est.points {
        text.push(format!(
            "r = {}: N_r in [{}, {}]{}",
            fmt_rational(&p.count.r),
            p.count.n_r_lower,
            p.count.n_r,
            match p.inside {
                Some(true) => " inside envelope",
                Some(false) => " OUTSIDE envelope",
                None => "",
            }
        ));
    }
    let mut rep = Report::new("boxdim", Some(sys), status, body).csv(est.to_csv()).text(text);
    if est.envelope_ok == Some(false) {
        rep = rep.warn("some N_r fall outside the certified envelope".into());
    }
    Ok(rep)
}

pub fn cmd_content(sys: &IFSystem, cfg: &RunConfig, s: Option<&RationalScalar>, delta: Option<&RationalScalar>, subset: Option<&EnclosureBall>) -> Result<Report> {
    let s = match s {
        Some(s) => s.clone(),
        None => root(sys, cfg)?.s_lo,
    };
    let est = content_estimate(sys, &s, delta, subset)?;
    let text = vec![
        format!("s = {}", fmt_rational(&s)),
        format!("H^s content in [{:.9e}, {:.9e}]", to_f64(&est.lower), to_f64(&est.upper)),
        format!("cover of {} pieces; density constant over {} tested sets", est.cover_size, est.density_tested),
    ];
    Ok(Report::new("content", Some(sys), RunStatus::Certified, to_value(&est)).text(text))
}

pub fn cmd_nperr(sys: &IFSystem, r: &RationalScalar) -> Result<Report> {
    let c = covering_number(sys, r)?;
    let csv = format!("r,r_decimal,n_r,n_r_lower\n{},{:.12e},{},{}\n", fmt_rational(&c.r), to_f64(&c.r), c.n_r, c.n_r_lower);
    let text = vec![format!("N_r in [{}, {}] at r = {}", c.n_r_lower, c.n_r, fmt_rational(r))];
    Ok(Report::new("nperr", Some(sys), RunStatus::Certified, to_value(&c)).csv(csv).text(text))
}

/// Conformal weights with every letter that duplicates an earlier one on F
/// given weight zero.
pub fn distinct_measure(sys: &IFSystem, s: &RationalScalar) -> Result<NaturalMeasure> {
    let canon = letter_equivalences(sys);
    let base = NaturalMeasure::conformal(sys, s)?;
    let kept: Vec<RationalScalar> = base
        .weights
        .iter()
        .enumerate()
        .map(|(i, w)| if canon[i] as usize == i { w.clone() } else { RationalScalar::zero() })
        .collect();
    let total: RationalScalar = kept.iter().cloned().sum();
    NaturalMeasure::new(kept.into_iter().map(|w| w / &total).collect())
}

pub fn cmd_ahlfors(sys: &IFSystem, cfg: &RunConfig, s: Option<&RationalScalar>, samples: usize) -> Result<Report> {
    let s = match s {
        Some(s) => RationalInterval::point(s.clone()),
        None => {
            let r = root(sys, cfg)?;
            RationalInterval::hull2(r.s_lo, r.s_hi)
        }
    };
    let mu = NaturalMeasure::conformal(sys, &s.lo)?;
    let xs = ahlfors_samples(sys, samples, &SeedStrategy::FirstFixedPoint)?;
    let rs = cfg.r_schedule.values();
    let env = ahlfors_check(sys, &mu, &s, &xs, &rs, None)?;
    let up = uniform_perfectness(sys, samples, &rs)?;
    let body = json!({ "measure": to_value(&mu), "ahlfors": to_value(&env), "uniform_perfectness": to_value(&up) });
    let mut text = vec![format!("s in {}", dec_iv(&s)), format!("mu(B(x,r))/r^s in {}", dec_iv(&env.envelope))];
    for p in &env.per_scale {
        text.push(format!("r = {}: min {} max {}", fmt_rational(&p.r), dec_iv(&p.min), dec_iv(&p.max)));
    }
    text.push(format!("uniformly perfect with H = {} over {} tests", fmt_rational(&up.h), up.tested));
    let status = RunStatus::from_certified(up.witnessed_all);
    Ok(Report::new("ahlfors", Some(sys), status, body).csv(env.to_csv()).text(text))
}

pub fn cmd_wsc_count(sys: &IFSystem, x: &GaussianRational, r: &RationalScalar, mode: CountMode) -> Result<Report> {
    let c = count_phi(sys, x, r, mode)?;
    let exact = c.ambiguous == 0 && c.classes_exact;
    let name = if mode == CountMode::Restricted { "Phi" } else { "Phi*" };
    let mut text = vec![
        format!("#{name}({x}, {}) = {}", fmt_rational(r), c.phi_count),
        format!("#Sigma = {} cut words meet the ball", c.sigma_count),
    ];
    for (w, n) in c.witnesses.iter().zip(&c.class_sizes) {
        text.push(format!("class {w}: {n} words"));
    }
    let mut rep = Report::new("wsc-count", Some(sys), RunStatus::from_certified(exact), to_value(&c)).text(text);
    if c.ambiguous > 0 {
        rep = rep.warn(format!("{} cut words could not be decided against the ball; the count is a lower bound", c.ambiguous));
    }
    if !c.classes_exact {
        rep = rep.warn("classes are separated by sampled values only".into());
    }
    Ok(rep)
}

fn ilc_csv(s: &IlcSearch) -> String {
    let mut out = String::from("len,i,j,delta_lo,delta_hi\n");
    for (k, w) in s.best_by_len.iter().enumerate() {
        match w {
            Some(w) => out.push_str(&format!("{},{},{},{:.9e},{:.9e}\n", k + 1, w.i, w.j, to_f64(&w.delta.lo), to_f64(&w.delta.hi))),
            None => out.push_str(&format!("{},,,,\n", k + 1)),
        }
    }
    out
}

pub fn cmd_ilc_search(sys: &IFSystem, max_len: usize, target: &RationalScalar) -> Result<Report> {
    let s = ilc_search(sys, max_len, target)?;
    let mut text = Vec::new();
    for (k, w) in s.best_by_len.iter().enumerate() {
        if let Some(w) = w {
            text.push(format!("len {:>2}: {} vs {} delta in {}", k + 1, w.i, w.j, dec_iv(&w.delta)));
        }
    }
    text.push(format!("target {} reached: {}", fmt_rational(target), s.reached_target));
    if s.exact_overlap_count > 0 {
        text.push(format!("exact overlaps met: {}", s.exact_overlap_count));
    }
    let rep = Report::new("ilc-search", Some(sys), RunStatus::from_certified(!s.partial), to_value(&s)).csv(ilc_csv(&s)).text(text);
    Ok(rep)
}

pub fn cmd_amplify(sys: &IFSystem, cfg: &RunConfig, n: usize, max_len: usize) -> Result<Report> {
    let search = ilc_search(sys, max_len, &cfg.ilc_target)?;
    let a = amplify_wsc_failure(sys, &search, n)?;
    let mut text = vec![
        format!("q = {}, stages {} of {}", a.schedule.q, a.achieved, a.requested),
        format!("count lower bound ceil(achieved/q) = {}, requested ceil(n/q) = {}", a.lower_bound, a.requested_bound),
    ];
    if let (Some(x), Some(r)) = (&a.x, &a.r) {
        text.push(format!("x = {x}, r = {}", fmt_rational(r)));
    }
    if let Some(c) = &a.count {
        text.push(format!("re-measured #Phi(x,r) = {}", c.phi_count));
    }
    let mut rep = Report::new("amplify", Some(sys), a.status, to_value(&a)).text(text);
    if a.achieved < a.requested {
        rep = rep.warn(format!("only {} of {} stages found witnesses within length {max_len}", a.achieved, a.requested));
    }
    Ok(rep)
}

pub fn cmd_tangent(sys: &IFSystem, cfg: &RunConfig, n: usize, max_len: usize) -> Result<Report> {
    let search = ilc_search(sys, max_len, &cfg.ilc_target)?;
    let t = build_weak_tangent(sys, &search, n)?;
    let text = vec![
        format!("{} points, monotone {}, endpoints exact {}", t.points.len(), t.monotone, t.endpoints_exact),
        format!("max normalized gap {} (bound {})", dec(&t.max_gap), dec(&t.gap_bound)),
        format!("strict stages {} of {}", t.strict_stages, t.stages.len()),
    ];
    Ok(Report::new("tangent", Some(sys), t.status, to_value(&t)).csv(t.to_csv()).text(text))
}

pub fn cmd_quasi_d(sys: &IFSystem) -> Result<Report> {
    let qc = quasi_constant(sys)?;
    let text = vec![
        format!("D <= {} = max{{{}}}", fmt_rational(&qc.d), qc.terms.iter().map(fmt_rational).collect::<Vec<_>>().join(", ")),
        format!("{} witnesses, all pass: {}", qc.witnesses.len(), qc.witnesses_pass),
    ];
    Ok(Report::new("quasi-d", Some(sys), RunStatus::from_certified(qc.witnesses_pass), to_value(&qc)).text(text))
}

pub fn cmd_example_list() -> Result<Report> {
    let mut rows = Vec::new();
    let mut text = Vec::new();
    for name in registry::NAMES {
        let ns = registry::named(name)?;
        text.push(format!("{name}: {} maps, {}-D, {} claims", ns.system.n_maps(), ns.system.dimension, ns.expected.len()));
        rows.push(json!({ "name": name, "maps": ns.system.n_maps(), "dimension": ns.system.dimension, "claims": to_value(&ns.expected) }));
    }
    Ok(Report::new("example list", None, RunStatus::Certified, Value::Array(rows)).text(text))
}

pub fn cmd_example_verify(name: &str, n: usize) -> Result<Report> {
    let v = verify(name, n)?;
    let mut text = Vec::new();
    for c in &v.claims {
        let mark = if c.erratum {
            "erratum"
        } else if c.certified.is_true() {
            "ok"
        } else {
            "FAIL"
        };
        text.push(format!("[{mark}] {}: {} (expected {}, observed {})", c.id, c.statement, c.expected, c.observed));
    }
    for note in &v.notes {
        text.push(format!("note: {note}"));
    }
    let mut csv = String::from("id,expected,observed,certified,erratum\n");
    for c in &v.claims {
        csv.push_str(&format!("{},{},{},{:?},{}\n", csv_field(&c.id), csv_field(&c.expected), csv_field(&c.observed), c.certified, c.erratum));
    }
    let mut rep = Report::new(&format!("example verify {name}"), None, v.status, to_value(&v)).csv(csv).text(text);
    if let Some(f) = &v.first_failure {
        rep = rep.warn(format!("first failing claim: {f}"));
    }
    Ok(rep)
}

/// Finite-depth evidence for one of the five equivalent conditions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Supported,
    Contradicted,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerdictRow {
    pub condition: usize,
    pub statement: String,
    pub basis: String,
    pub observed: String,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DimensionReport {
    pub system: String,
    pub root: Option<RootBracket>,
    pub box_dimension: Option<BoxDimensionEstimate>,
    pub overlaps: Option<OverlapScan>,
    pub ilc: Option<IlcSearch>,
    /// Exponent the conditions are evaluated at.
    pub s: Option<RationalInterval>,
    pub s_source: String,
    pub content: Option<ContentEstimate>,
    pub measure: Option<NaturalMeasure>,
    pub ahlfors: Option<AhlforsEnvelope>,
    /// Box slope below the root bracket by more than the drop margin.
    pub dimension_drop: Option<bool>,
    pub drop_explanation: String,
    pub verdicts: Vec<VerdictRow>,
    /// Sub-steps that hit a cap or budget.
    pub partial_steps: Vec<String>,
    pub disclaimer: String,
}

/// Box slope must fall this far below the root bracket to count as a drop.
pub const DROP_MARGIN: f64 = 0.02;
/// Growth of the spread max/min of the Ahlfors ratios from the coarsest to the
/// finest scale: below STABLE regularity is supported, from DEGRADING on it is
/// contradicted, in between the evidence is inconclusive.
pub const SPREAD_STABLE: f64 = 1.25;
pub const SPREAD_DEGRADING: f64 = 2.0;
/// Content bracket lower/upper at or above this supports positive measure.
pub const CONTENT_RATIO: f64 = 1.0 / 16.0;

fn step<T>(name: &str, partial: &mut Vec<String>, r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::Budget(_) | Error::DepthCap(_))) => {
            partial.push(format!("{name}: {e}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn spread(p: &ScaleRatio) -> f64 {
    let lo = to_f64(&p.min.lo);
    if lo > 0.0 {
        to_f64(&p.max.hi) / lo
    } else {
        f64::INFINITY
    }
}

/// The dimension-drop pipeline on a 1-D system.
pub fn cmd_dimension_drop(sys: &IFSystem, cfg: &RunConfig) -> Result<DimensionReport> {
    if sys.dimension != 1 {
        return Err(Error::Domain("dimension-drop needs a 1-D system".into()));
    }
    let mut partial = Vec::new();
    let rs = cfg.r_schedule.values();
    let root = step("pressure root", &mut partial, root(sys, cfg))?;
    let boxd = step("box dimension", &mut partial, box_dimension_estimate(sys, &rs, None))?;
    let overlaps = step("overlap scan", &mut partial, exact_overlap_scan(sys, cfg.overlap_len, cfg.word_budget))?;
    let ilc = step("ilc search", &mut partial, ilc_search(sys, cfg.ilc_max_len, &cfg.ilc_target))?;
    if overlaps.as_ref().is_some_and(|o| o.partial) {
        partial.push(format!("overlap scan: stopped at length {}", overlaps.as_ref().unwrap().searched_len));
    }
    if ilc.as_ref().is_some_and(|s| s.partial) {
        partial.push("ilc search: state budget reached".into());
    }

    let overlap_found = overlaps.as_ref().map(|o| o.first_len.is_some());
    let dimension_drop = match (&root, &boxd) {
        (Some(r), Some(b)) => Some(b.slope < to_f64(&r.s_lo) - DROP_MARGIN),
        _ => None,
    };
    let searched = overlaps.as_ref().map(|o| o.searched_len).unwrap_or(0);
    let drop_explanation = match (dimension_drop, overlap_found) {
        (Some(true), Some(true)) => format!(
            "dimension drop explained by an exact overlap at length {}",
            overlaps.as_ref().and_then(|o| o.first_len).unwrap_or(0)
        ),
        (Some(true), Some(false)) => format!(
            "box slope below the root without an exact overlap to length {searched}: a longer overlap, H^s(F) = 0 or slow convergence of the counts"
        ),
        (Some(false), Some(true)) => "exact overlap found but no drop resolved at the tested scales".into(),
        (Some(false), Some(false)) => format!("no drop and no exact overlap to length {searched}: consistent with dim = P^-1(0)"),
        _ => "incomplete: a sub-step hit its cap".into(),
    };

    // conditions are read at the root unless an overlap makes the box slope the better estimate
    let (s, s_source) = match (&root, &boxd, overlap_found) {
        (_, Some(b), Some(true)) => {
            let p = RationalScalar::from_float(b.slope).map(|x| round_down(&x, 40)).unwrap_or_default();
            (Some(RationalInterval::point(p)), "box slope (exact overlaps present)".to_string())
        }
        (Some(r), _, _) => (Some(RationalInterval::hull2(r.s_lo.clone(), r.s_hi.clone())), "pressure root bracket".to_string()),
        _ => (None, "unavailable".to_string()),
    };

    let mut content = None;
    let mut measure = None;
    let mut ahlfors = None;
    if let Some(s) = &s {
        content = step("content", &mut partial, content_estimate(sys, &s.lo, None, None))?;
        let mu = distinct_measure(sys, &s.lo)?;
        let xs = ahlfors_samples(sys, cfg.samples, &SeedStrategy::FirstFixedPoint)?;
        ahlfors = step("ahlfors", &mut partial, ahlfors_check(sys, &mu, s, &xs, &rs, None))?;
        measure = Some(mu);
    }

    let s_below_one = s.as_ref().map(|s| s.hi < RationalScalar::one());
    let ilc_verdict = match ilc.as_ref().and_then(|x| x.best.as_ref()) {
        Some(w) if w.delta.lo >= cfg.ilc_target => Verdict::Supported,
        Some(w) if w.delta.hi < cfg.ilc_target => Verdict::Contradicted,
        _ => Verdict::Inconclusive,
    };
    let ilc_obs = match ilc.as_ref().and_then(|x| x.best.as_ref()) {
        Some(w) => format!("best delta {} at length {} ({} vs {}), target {}", dec_iv(&w.delta), w.len(), w.i, w.j, fmt_rational(&cfg.ilc_target)),
        None => "no pair searched".into(),
    };
    let (ahl_verdict, ahl_obs) = match &ahlfors {
        Some(env) if !env.per_scale.is_empty() => {
            let first = spread(&env.per_scale[0]);
            let last = spread(env.per_scale.last().unwrap());
            let v = if !last.is_finite() || last >= SPREAD_DEGRADING * first {
                Verdict::Contradicted
            } else if last < SPREAD_STABLE * first {
                Verdict::Supported
            } else {
                Verdict::Inconclusive
            };
            (v, format!("ratio envelope {}, spread {first:.3} at the coarsest scale, {last:.3} at the finest", dec_iv(&env.envelope)))
        }
        _ => (Verdict::Inconclusive, "not computed".into()),
    };
    let (content_verdict, content_obs) = match &content {
        Some(c) if c.upper.is_positive() => {
            let ratio = to_f64(&c.lower) / to_f64(&c.upper);
            let v = if ratio >= CONTENT_RATIO { Verdict::Supported } else { Verdict::Inconclusive };
            (v, format!("H^s_inf(F) in [{:.6e}, {:.6e}]", to_f64(&c.lower), to_f64(&c.upper)))
        }
        _ => (Verdict::Inconclusive, "not computed".into()),
    };
    let assouad_verdict = if ahl_verdict == Verdict::Supported {
        Verdict::Supported
    } else if ilc_verdict == Verdict::Contradicted && s_below_one == Some(true) {
        Verdict::Contradicted
    } else {
        Verdict::Inconclusive
    };
    let verdicts = vec![
        VerdictRow {
            condition: 1,
            statement: "weak separation condition".into(),
            basis: "near-coincident maps (ILC witnesses) force unbounded Phi counts; their absence bounds them".into(),
            observed: ilc_obs.clone(),
            verdict: ilc_verdict.clone(),
        },
        VerdictRow {
            condition: 2,
            statement: "H^s(F) > 0".into(),
            basis: format!("two-sided H^s_inf bracket; supported when lower/upper >= {CONTENT_RATIO}"),
            observed: content_obs,
            verdict: content_verdict,
        },
        VerdictRow {
            condition: 3,
            statement: "Ahlfors s-regular".into(),
            basis: format!(
                "mu(B(x,r))/r^s over samples; spread growth across the schedule below {SPREAD_STABLE} supports, from {SPREAD_DEGRADING} contradicts"
            ),
            observed: ahl_obs,
            verdict: ahl_verdict,
        },
        VerdictRow {
            condition: 4,
            statement: "Assouad dimension equals s".into(),
            basis: "regularity gives it; ILC failure with s < 1 yields weak tangents of dimension 1".into(),
            observed: format!("s < 1: {}", s_below_one.map(|b| b.to_string()).unwrap_or_else(|| "unknown".into())),
            verdict: assouad_verdict,
        },
        VerdictRow {
            condition: 5,
            statement: "identity limit criterion".into(),
            basis: "minimum relative sup-distance over distinct restrictions".into(),
            observed: ilc_obs,
            verdict: ilc_verdict,
        },
    ];
    Ok(DimensionReport {
        system: sys.name.clone(),
        root,
        box_dimension: boxd,
        overlaps,
        ilc,
        s,
        s_source,
        content,
        measure,
        ahlfors,
        dimension_drop,
        drop_explanation,
        verdicts,
        partial_steps: partial,
        disclaimer: "finite-depth evidence over the tested scales and word lengths, not a proof".into(),
    })
}

fn dimension_drop_report(sys: &IFSystem, cfg: &RunConfig) -> Result<Report> {
    let d = cmd_dimension_drop(sys, cfg)?;
    let mut text = Vec::new();
    if let Some(r) = &d.root {
        text.push(format!("P^-1(0) in [{}, {}]", dec(&r.s_lo), dec(&r.s_hi)));
    }
    if let Some(b) = &d.box_dimension {
        text.push(format!("box slope {:.6}", b.slope));
    }
    if let Some(o) = &d.overlaps {
        match o.pairs.first() {
            Some((i, j)) => text.push(format!("exact overlap {i} ~ {j}; {} pairs to length {}", o.pair_count, o.searched_len)),
            None => text.push(format!("no exact overlap to length {}", o.searched_len)),
        }
    }
    text.push(d.drop_explanation.clone());
    text.push(format!("conditions read at s from {}", d.s_source));
    let mut csv = String::from("condition,statement,verdict,observed\n");
    for v in &d.verdicts {
        let verdict = match v.verdict {
            Verdict::Supported => "supported",
            Verdict::Contradicted => "contradicted",
            Verdict::Inconclusive => "inconclusive",
        };
        text.push(format!("({}) {:<28} {:<13} {}", v.condition, v.statement, verdict, v.observed));
        csv.push_str(&format!("{},{},{},{}\n", v.condition, csv_field(&v.statement), verdict, csv_field(&v.observed)));
    }
    text.push(d.disclaimer.clone());
    let status = if d.partial_steps.is_empty() { RunStatus::Certified } else { RunStatus::Partial };
    let mut rep = Report::new("dimension-drop", Some(sys), status, to_value(&d)).csv(csv).text(text);
    for p in &d.partial_steps {
        rep = rep.warn(format!("partial: {p}"));
    }
    Ok(rep)
}

/// Configuration from `--config`, then flags, then the precision variable.
pub fn resolve_config(cli: &Cli, precision_env: Option<&str>) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = &cli.system {
        cfg.system = Some(SystemSource::from_arg(s));
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(c) = cli.depth_cap {
        cfg.depth_cap = c;
    }
    match &cli.command {
        Command::Dim { tol, max_depth } => {
            if let Some(t) = tol {
                cfg.tol = q(t)?;
            }
            if let Some(m) = max_depth {
                cfg.max_depth = *m;
            }
        }
        Command::Boxdim { ratio, from, to, .. } => {
            if let Some(r) = ratio {
                cfg.r_schedule.ratio = q(r)?;
            }
            if let Some(f) = from {
                cfg.r_schedule.from = *f;
            }
            if let Some(t) = to {
                cfg.r_schedule.to = *t;
            }
        }
        Command::Ahlfors { samples: Some(n), .. } => cfg.samples = *n,
        Command::IlcSearch { max_len, target } => {
            if let Some(m) = max_len {
                cfg.ilc_max_len = *m;
            }
            if let Some(t) = target {
                cfg.ilc_target = q(t)?;
            }
        }
        Command::Amplify { max_len: Some(m), .. } | Command::Tangent { max_len: Some(m), .. } => cfg.ilc_max_len = *m,
        _ => {}
    }
    cfg.with_precision_override(precision_env)
}

fn dispatch(cli: &Cli, cfg: &RunConfig) -> Result<Report> {
    if let Command::Example { action } = &cli.command {
        return match action {
            ExampleAction::List => cmd_example_list(),
            ExampleAction::Verify { name, n } => cmd_example_verify(name, *n),
        };
    }
    let sys = cfg.load_system()?;
    match &cli.command {
        Command::Validate => Ok(cmd_validate(&sys)),
        Command::Pressure { s, depth } => cmd_pressure(&sys, cfg, &q(s)?, *depth),
        Command::Dim { .. } => cmd_dim(&sys, cfg),
        Command::Boxdim { no_envelope, .. } => cmd_boxdim(&sys, cfg, !no_envelope),
        Command::Content { s, delta, subset } => {
            let s = s.as_deref().map(q).transpose()?;
            let delta = delta.as_deref().map(q).transpose()?;
            let subset = subset.as_deref().map(|t| parse_subset(&sys, t)).transpose()?;
            cmd_content(&sys, cfg, s.as_ref(), delta.as_ref(), subset.as_ref())
        }
        Command::Nperr { r } => cmd_nperr(&sys, &q(r)?),
        Command::Ahlfors { s, .. } => {
            let s = s.as_deref().map(q).transpose()?;
            cmd_ahlfors(&sys, cfg, s.as_ref(), cfg.samples)
        }
        Command::WscCount { x, r, unrestricted } => {
            let mode = if *unrestricted { CountMode::Unrestricted } else { CountMode::Restricted };
            cmd_wsc_count(&sys, &GaussianRational::parse(x)?, &q(r)?, mode)
        }
        Command::IlcSearch { .. } => cmd_ilc_search(&sys, cfg.ilc_max_len, &cfg.ilc_target),
        Command::Amplify { n, .. } => cmd_amplify(&sys, cfg, *n, cfg.ilc_max_len),
        Command::Tangent { n, .. } => cmd_tangent(&sys, cfg, *n, cfg.ilc_max_len),
        Command::QuasiD => cmd_quasi_d(&sys),
        Command::DimensionDrop => dimension_drop_report(&sys, cfg),
        Command::Example { .. } => unreachable!(),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate => "validate",
        Command::Pressure { .. } => "pressure",
        Command::Dim { .. } => "dim",
        Command::Boxdim { .. } => "boxdim",
        Command::Content { .. } => "content",
        Command::Nperr { .. } => "nperr",
        Command::Ahlfors { .. } => "ahlfors",
        Command::WscCount { .. } => "wsc-count",
        Command::IlcSearch { .. } => "ilc-search",
        Command::Amplify { .. } => "amplify",
        Command::Tangent { .. } => "tangent",
        Command::QuasiD => "quasi-d",
        Command::Example { .. } => "example",
        Command::DimensionDrop => "dimension-drop",
    }
}

/// Runs a parsed command line; returns the rendered output and the outcome.
pub fn run(cli: &Cli, precision_env: Option<&str>) -> (String, RunStatus) {
    let name = command_name(&cli.command);
    let (report, format) = match resolve_config(cli, precision_env) {
        Ok(cfg) => {
            let label = cfg.system.as_ref().map(|s| s.label());
            let r = dispatch(cli, &cfg).unwrap_or_else(|e| Report::failure(name, label, &e));
            (r, cfg.format)
        }
        Err(e) => (Report::failure(name, None, &e), cli.format.unwrap_or_default()),
    };
    (cmd_report_render(&report, format), report.status)
}

/// Parses process-style arguments and runs; the precision variable is read
/// from the environment.
pub fn run_args<I, T>(args: I) -> std::result::Result<(String, RunStatus), clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let env = std::env::var(PRECISION_ENV).ok();
    Ok(run(&cli, env.as_deref()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn go(args: &[&str]) -> (String, RunStatus) {
        let cli = Cli::try_parse_from(std::iter::once("cil").chain(args.iter().copied())).unwrap();
        run(&cli, None)
    }

    #[test]
    fn validate_and_dim() {
        let (out, st) = go(&["validate", "--system", "cantor-1-3"]);
        assert_eq!(st, RunStatus::Certified);
        assert!(out.contains("\"certified\": true"));
        let (out, st) = go(&["dim", "--system", "cantor", "--tol", "1e-6"]);
        assert_eq!(st, RunStatus::Certified);
        let v: Value = serde_json::from_str(&out).unwrap();
        let lo = parse_rational(v["report"]["s_lo"].as_str().unwrap()).unwrap();
        let hi = parse_rational(v["report"]["s_hi"].as_str().unwrap()).unwrap();
        let s = 2f64.ln() / 3f64.ln();
        assert!(to_f64(&lo) <= s && s <= to_f64(&hi));
    }

    #[test]
    fn pressure_json_has_exact_strings() {
        let (out, st) = go(&["pressure", "--system", "interval-1-2", "--s", "1", "--depth", "3"]);
        assert_eq!(st, RunStatus::Certified);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["report"]["p_lo"], "0");
        assert_eq!(v["report"]["p_hi"], "0");
    }

    #[test]
    fn invalid_and_partial_exit_codes() {
        let (out, st) = go(&["validate", "--system", "no-such-system"]);
        assert_eq!(st, RunStatus::Invalid);
        assert!(out.contains("unknown system"));
        let (_, st) = go(&["pressure", "--system", "cantor", "--s", "1/2", "--depth", "40"]);
        assert_eq!(st, RunStatus::Partial);
        let cli = Cli::try_parse_from(["cil", "validate", "--system", "cantor"]).unwrap();
        assert_eq!(run(&cli, Some("12")).1, RunStatus::Invalid);
    }

    #[test]
    fn ambiguity_warning_in_text() {
        let c = SeparationCount {
            x: GaussianRational::zero(),
            r: rat(1, 9),
            mode: CountMode::Restricted,
            phi_count: 1,
            sigma_count: 1,
            ambiguous: 2,
            witnesses: vec![],
            class_sizes: vec![],
            classes_exact: true,
            x_near_f: Certified::True,
            words_examined: 3,
        };
        let mut rep = Report::new("wsc-count", None, RunStatus::Partial, to_value(&c));
        rep = rep.warn(format!("{} cut words could not be decided against the ball; the count is a lower bound", c.ambiguous));
        let text = cmd_report_render(&rep, OutputFormat::Text);
        assert!(text.lines().any(|l| l.starts_with("warning: 2 cut words could not be decided")));
        assert!(render_named(&rep, "yaml").is_err());
    }

    #[test]
    fn csv_fallback_flattens() {
        let (out, _) = go(&["quasi-d", "--system", "cantor", "--format", "csv"]);
        assert!(out.starts_with("field,value\n"));
        assert!(out.lines().any(|l| l == "d,3"));
    }

    #[test]
    fn count_command_on_cantor() {
        let (out, st) = go(&["wsc-count", "--system", "cantor", "--x", "0", "--r", "1/9", "--format", "text"]);
        assert_eq!(st, RunStatus::Certified, "{out}");
        assert!(out.contains("#Phi(0, 1/9) = "));
    }

    #[test]
    fn dimension_drop_triple_overlap() {
        let sys = registry::load("triple-overlap").unwrap();
        let cfg = RunConfig { r_schedule: crate::config::ScheduleSpec::new(rat(1, 3), 3, 7), ilc_max_len: 6, ..Default::default() };
        let d = cmd_dimension_drop(&sys, &cfg).unwrap();
        assert_eq!(d.dimension_drop, Some(true));
        assert_eq!(d.overlaps.as_ref().unwrap().first_len, Some(1));
        assert!(d.drop_explanation.contains("exact overlap at length 1"));
        assert_eq!(d.verdicts.len(), 5);
        assert_eq!(d.measure.as_ref().unwrap().weights[1], RationalScalar::zero());
    }
}
