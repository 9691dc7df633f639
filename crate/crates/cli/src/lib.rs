//! Batch front end: configuration, subcommands, and report rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use dstau::diffalg::{diffpoly_to_json, jet_name, render, DiffPoly, JetVar, VectorField};
use dstau::discrete::{
    discrete_miura, embedding_residual, parse_disc_poly, render_disc, shift_var, DiscPoly, DiscSeries, Window,
};
use dstau::gauge::{canonical_form, GaugeFrame};
use dstau::hierarchy::*;
use dstau::kacmoody::{build_algebra, LoopElement, LoopRealization};
use dstau::poly::{parse_rational, rat, Rational};
use dstau::ratfunc::RatFunc;
use dstau::resolvent::{resolvents_to_floor, LaxOperator};
use dstau::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Text,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            _ => Err(Error::Parse(format!("format must be json or text, got {s}"))),
        }
    }
}

/// Every run parameter. The TOML file uses the same keys; flags override it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "type")]
    pub kind: String,
    pub vertex: usize,
    /// `a:k` labels separated by commas.
    pub flows: String,
    pub eps_order: usize,
    pub jet_depth: u32,
    /// Admissible λ-powers `[min, max]`.
    pub lambda_window: Option<(i64, i64)>,
    /// Principal depth of the resolvents; computed when absent.
    pub depth: Option<i64>,
    pub t_degree: usize,
    pub gauge: String,
    pub format: Format,
    /// gBGW constants `C_α`.
    pub bgw: Option<Vec<String>>,
    /// Initial data `u_α(x)` as rational functions; overrides `bgw`.
    pub initial: Option<Vec<String>>,
    /// Include the generic-q gauge-invariance check in `verify`.
    pub gauge_check: bool,
    /// Discrete subcommand: `V_α` as ε-components.
    pub miura: Option<Vec<Vec<String>>>,
    pub samples: usize,
    pub shift_window: i64,
    pub seed: u64,
    /// Test fixture: adds 1 to one Ω entry, written `a:k;b:k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrupt_omega: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kind: "A1^(1)".into(),
            vertex: 0,
            flows: "1:0,1:1".into(),
            eps_order: 4,
            jet_depth: 8,
            lambda_window: None,
            depth: None,
            t_degree: 2,
            gauge: "lowest".into(),
            format: Format::Json,
            bgw: None,
            initial: None,
            gauge_check: true,
            miura: None,
            samples: 100,
            shift_window: 8,
            seed: 1,
            corrupt_omega: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml(&src)
    }

    pub fn labels(&self) -> Result<Vec<FlowLabel>> {
        let mut ls = FlowLabel::parse_list(&self.flows)?;
        ls.sort();
        ls.dedup();
        Ok(ls)
    }

    pub fn realization(&self) -> Result<Arc<LoopRealization>> {
        let mut g = build_algebra(&self.kind, self.vertex)?;
        if let Some(w) = self.lambda_window {
            if w.0 > w.1 {
                return Err(Error::Parse(format!("lambda window [{}, {}] is empty", w.0, w.1)));
            }
            g = g.with_window(w);
        }
        Ok(Arc::new(g))
    }
}

/// Validated run plan: labels, k-ranges, and the resolvent floor.
#[derive(Clone, Debug)]
pub struct Plan {
    pub realization: Arc<LoopRealization>,
    pub labels: Vec<FlowLabel>,
    pub max_k: usize,
    pub floor: i64,
}

pub fn plan(config: &RunConfig, extra: &[FlowLabel]) -> Result<Plan> {
    let g = config.realization()?;
    let mut labels = config.labels()?;
    labels.extend_from_slice(extra);
    labels.sort();
    labels.dedup();
    for l in &labels {
        l.check(&g)?;
    }
    let max_k = labels.iter().map(|l| l.k).max().unwrap_or(0);
    let needed = -required_floor(&g, max_k, max_k);
    let depth = match config.depth {
        Some(d) if d < needed => {
            return Err(Error::DepthInsufficient(format!("depth {d} < {needed} required for k ≤ {max_k}")));
        }
        Some(d) => d,
        None => needed,
    };
    Ok(Plan { realization: g, labels, max_k, floor: -depth })
}

/// Result of a subcommand: JSON payload, text rendering, and exit status.
#[derive(Clone, Debug)]
pub struct Output {
    pub json: Value,
    pub text: String,
    pub success: bool,
}

impl Output {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("serializable");
                s.push('\n');
                s
            }
            Format::Text => self.text.clone(),
        }
    }
}

fn header(config: &RunConfig) -> Value {
    json!({ "type": config.kind, "vertex": config.vertex, "gauge": config.gauge })
}

fn report_text(report: &Report) -> String {
    let mut out = String::new();
    for c in &report.checks {
        let _ = writeln!(out, "{} {}{}", if c.residual_zero { "ok  " } else { "FAIL" }, c.name, if c.residual_zero { String::new() } else { format!(": {}", c.residual) });
    }
    let _ = writeln!(out, "{}", if report.all_zero() { "all residuals zero" } else { "nonzero residuals" });
    out
}

fn hierarchy_for(config: &RunConfig, p: &Plan) -> Result<DsHierarchy> {
    DsHierarchy::new(p.realization.clone(), &config.gauge, p.floor)
}

fn flow_json(label: FlowLabel, field: &VectorField) -> Value {
    json!({
        "label": label.to_string(),
        "equations": render_flow(field),
        "characteristic": field.characteristic().iter().map(diffpoly_to_json).collect::<Vec<_>>(),
    })
}

pub fn cmd_derive(config: &RunConfig) -> Result<Output> {
    let p = plan(config, &[])?;
    let mut text = String::new();
    let mut flows = Vec::new();
    if !p.labels.is_empty() {
        let h = hierarchy_for(config, &p)?;
        for l in &p.labels {
            let f = h.flow(*l)?;
            let _ = writeln!(text, "[{l}]");
            for line in render_flow(&f) {
                let _ = writeln!(text, "  {line}");
            }
            flows.push(flow_json(*l, &f));
        }
    }
    Ok(Output { json: json!({ "algebra": header(config), "flows": flows }), text, success: true })
}

fn corrupt(table: &mut OmegaTable, spec: &str) -> Result<()> {
    let (i, j) = spec.split_once(';').ok_or_else(|| Error::Parse(format!("corrupt_omega {spec} is not a:k;b:k")))?;
    let (i, j) = (FlowLabel::parse(i)?, FlowLabel::parse(j)?);
    let e = table
        .entries
        .get_mut(&(i.a, i.k, j.a, j.k))
        .ok_or_else(|| Error::BadLabel(format!("Ω[{i};{j}] is not computed")))?;
    *e = &*e + &DiffPoly::int(1);
    Ok(())
}

fn omega_for(config: &RunConfig, h: &DsHierarchy, max_k: usize) -> Result<OmegaTable> {
    let mut t = h.omega(max_k)?;
    if let Some(spec) = &config.corrupt_omega {
        corrupt(&mut t, spec)?;
    }
    Ok(t)
}

pub fn cmd_omega(config: &RunConfig) -> Result<Output> {
    let p = plan(config, &[])?;
    let h = hierarchy_for(config, &p)?;
    let t = omega_for(config, &h, p.max_k)?;
    let mut text = String::new();
    for ((a, k1, b, k2), v) in &t.entries {
        let _ = writeln!(text, "Ω[{a}:{k1};{b}:{k2}] = {}", render(v, t.components, "u"));
    }
    Ok(Output { json: json!({ "algebra": header(config), "omega": t.to_json() }), text, success: true })
}

pub fn cmd_verify(config: &RunConfig) -> Result<Output> {
    let p = plan(config, &[FlowLabel::one()])?;
    let g = &p.realization;
    let h = hierarchy_for(config, &p)?;
    let mut sections: Vec<(&str, Report)> = Vec::new();
    sections.push(("structure", verify_structure(g)));
    sections.push(("resolvents", verify_resolvents(&h.lax, &h.resolvents, required_depth(g, p.max_k))));
    let mut d10 = Report::default();
    let translation = h.flow(FlowLabel::one())? == VectorField::total(h.components()).scale(&rat(-1));
    d10.push(Check::new("D[1:0] = -∂", translation, "0"));
    let unique = d10_unique_solve(&h);
    d10.push(Check::new(
        "ψ = -∂Q_can, θ = Q_can - b",
        unique.is_ok(),
        unique.err().map(|e| e.to_string()).unwrap_or_else(|| "0".into()),
    ));
    sections.push(("d10", d10));
    let flows = h.flows(&p.labels)?;
    let table = omega_for(config, &h, p.max_k)?;
    sections.push(("omega_symmetry", verify_omega_symmetry(&table)));
    sections.push(("tau_symmetry", verify_tau_symmetry(&table, &flows)?));
    sections.push(("commutativity", verify_integrability(&flows, config.eps_order, config.jet_depth)?));
    if config.gauge_check {
        let gen = GenericHierarchy::new(g.clone(), &config.gauge, required_floor(g, 0, p.max_k))?;
        let tq = compute_omega(&gen.lax, &gen.resolvents, p.max_k, Region::MuInside)?;
        let mut r = verify_gauge_invariance(&gen.frame, &tq)?;
        let tu = omega_in_coordinates(&tq, &mut gen.rewriter(), h.components())?;
        for (key, v) in &tu.entries {
            let (a, k1, b, k2) = *key;
            let other = table.entries.get(key).cloned().unwrap_or_default();
            r.push(Check::poly(format!("Ω[{a}:{k1};{b}:{k2}] from q equals Ω in u"), &(v - &other), h.components()));
        }
        sections.push(("gauge_invariance", r));
    }
    let (_, r) = tau_coordinate_check(&table, &flows, config.eps_order, config.jet_depth)?;
    sections.push(("miura", r));
    let mut all = Report::default();
    let mut text = String::new();
    let mut json_sections = serde_json::Map::new();
    for (name, r) in sections {
        let _ = writeln!(text, "== {name}");
        text.push_str(&report_text(&r));
        json_sections.insert(name.to_string(), r.to_json());
        all.extend(r);
    }
    let _ = writeln!(text, "{}", if all.all_zero() { "PASS" } else { "FAIL" });
    let success = all.all_zero();
    let json = json!({
        "algebra": header(config),
        "flows": p.labels.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
        "eps_order": config.eps_order,
        "jet_depth": config.jet_depth,
        "sections": json_sections,
        "residual_zero": success,
    });
    Ok(Output { json, text, success })
}

fn parse_rationals(items: &[String]) -> Result<Vec<Rational>> {
    items.iter().map(|s| parse_rational(s).ok_or_else(|| Error::Parse(format!("bad rational {s}")))).collect()
}

pub fn cmd_solve(config: &RunConfig) -> Result<Output> {
    let p = plan(config, &[])?;
    let h = hierarchy_for(config, &p)?;
    let l = h.components();
    let initial = match (&config.initial, &config.bgw) {
        (Some(init), _) => init.iter().map(|s| RatFunc::parse(s)).collect::<Result<Vec<_>>>()?,
        (None, Some(c)) => gbgw_initial(&h.frame, &parse_rationals(c)?)?,
        (None, None) => gbgw_initial(&h.frame, &vec![rat(1); l])?,
    };
    let flows: Vec<(FlowLabel, VectorField)> = h.flows(&p.labels)?.into_iter().collect();
    let sol = integrate_formal(&flows, &initial, config.t_degree)?;
    let table = omega_for(config, &h, p.max_k)?;
    let tp = two_point_functions(&sol, &table)?;
    let mut report = sol.consistency.clone();
    report.extend(tp.report.clone());
    let mut text = String::new();
    for (a, r) in initial.iter().enumerate() {
        let _ = writeln!(text, "u{}(x, 0) = {r}", a + 1);
    }
    for (b, vals) in &sol.coefficients {
        for (a, r) in vals.iter().enumerate() {
            let _ = writeln!(text, "∂t^{b:?} u{} = {r}", a + 1);
        }
    }
    for ((i, j), m) in &tp.values {
        for (b, r) in m {
            let _ = writeln!(text, "∂t^{b:?} Ω[{i};{j}] = {r}");
        }
    }
    text.push_str(&report_text(&report));
    let success = report.all_zero();
    let json = json!({
        "algebra": header(config),
        "solution": sol.to_json(),
        "two_point": tp.to_json(),
        "residual_zero": success,
    });
    Ok(Output { json, text, success })
}

fn element_json(g: &LoopRealization, x: &LoopElement, name: impl Fn(&JetVar) -> String) -> Vec<Value> {
    x.terms()
        .map(|((k, i), p)| {
            json!({
                "lambda": k,
                "basis": g.basis_name(*i),
                "principal_degree": g.principal_degree(*k, *i),
                "coeff": diffpoly_to_json(p),
                "text": p.render(&name),
            })
        })
        .collect()
}

fn element_text(g: &LoopRealization, x: &LoopElement, name: impl Fn(&JetVar) -> String) -> String {
    let mut out = String::new();
    for ((k, i), p) in x.terms() {
        let _ = writeln!(out, "    λ^{k} {}: {}", g.basis_name(*i), p.render(&name));
    }
    out
}

pub fn cmd_resolvent(config: &RunConfig) -> Result<Output> {
    let p = plan(config, &[])?;
    let g = &p.realization;
    let frame = GaugeFrame::new(g.clone(), &config.gauge)?;
    let lax = frame.canonical_lax();
    let (_, rs) = resolvents_to_floor(&lax, p.floor)?;
    let report = verify_resolvents(&lax, &rs, required_depth(g, p.max_k));
    let l = lax.components;
    let name = |v: &JetVar| jet_name(v, l, "u");
    let mut text = String::new();
    let mut items = Vec::new();
    for r in &rs {
        let _ = writeln!(text, "R_{} (exponent {}, down to degree {})", r.index, r.exponent, r.floor);
        text.push_str(&element_text(g, &r.element, name));
        items.push(json!({ "index": r.index, "exponent": r.exponent, "floor": r.floor, "terms": element_json(g, &r.element, name) }));
    }
    text.push_str(&report_text(&report));
    let success = report.all_zero();
    Ok(Output { json: json!({ "algebra": header(config), "resolvents": items, "report": report.to_json() }), text, success })
}

pub fn cmd_gauge_fix(config: &RunConfig) -> Result<Output> {
    let g = config.realization()?;
    let frame = GaugeFrame::new(g.clone(), &config.gauge)?;
    let lax = LaxOperator::generic(g.clone());
    let cf = canonical_form(&frame, &lax)?;
    let borel = g.borel_indices();
    let qname = |v: &JetVar| {
        let base = format!("q[{}]", g.basis_name(borel[v.alpha as usize - 1]));
        if v.order == 0 {
            base
        } else {
            format!("{base}_{}", "x".repeat(v.order as usize))
        }
    };
    let mut report = Report::default();
    let l = frame.components();
    let mut text = String::new();
    let _ = writeln!(text, "gauge {} with exponents {:?}", config.gauge, frame.gauge_exponents());
    let _ = writeln!(text, "S_can:");
    text.push_str(&element_text(&g, &cf.s, qname));
    let _ = writeln!(text, "Q_can:");
    text.push_str(&element_text(&g, &cf.q_can, qname));
    let mut coords = Vec::new();
    for (a, u) in cf.coordinates.iter().enumerate() {
        let _ = writeln!(text, "u{} = {}", a + 1, u.render(qname));
        coords.push(json!({ "coeff": diffpoly_to_json(u), "text": u.render(qname) }));
    }
    let mut act = dstau::gauge::GaugeAction::new(&frame)?;
    for (a, u) in cf.coordinates.iter().enumerate() {
        let r = act.residual(u);
        report.push(Check::poly(format!("f(u{}) = u{}", a + 1, a + 1), &r, l));
    }
    text.push_str(&report_text(&report));
    let success = report.all_zero();
    let json = json!({
        "algebra": header(config),
        "gauge_exponents": frame.gauge_exponents(),
        "s_can": element_json(&g, &cf.s, qname),
        "q_can": element_json(&g, &cf.q_can, qname),
        "coordinates": coords,
        "report": report.to_json(),
    });
    Ok(Output { json, text, success })
}

fn default_miura() -> Vec<Vec<String>> {
    vec![vec!["u".into(), "u[+1]".into()]]
}

fn random_disc_poly(rng: &mut rand_chacha::ChaCha8Rng, l: u32, reach: i64) -> DiscPoly {
    use rand::Rng;
    let mut p = DiscPoly::zero();
    for _ in 0..rng.gen_range(1..=4) {
        let mut t = DiscPoly::int(rng.gen_range(-5..=5));
        for _ in 0..rng.gen_range(0..=3) {
            t = &t * &shift_var(rng.gen_range(1..=l), rng.gen_range(-reach..=reach)).pow(rng.gen_range(1..=2));
        }
        p = &p + &t;
    }
    p
}

pub fn cmd_discrete(config: &RunConfig) -> Result<Output> {
    use rand::SeedableRng;
    let k = config.eps_order;
    let window = Window::symmetric(config.shift_window);
    let spec = config.miura.clone().unwrap_or_else(default_miura);
    let v: Vec<DiscSeries> = spec
        .iter()
        .map(|comps| Ok(DiscSeries::from_components(comps.iter().map(|c| parse_disc_poly(c)).collect::<Result<_>>()?, k)))
        .collect::<Result<_>>()?;
    let l = v.len();
    if l == 0 {
        return Err(Error::ArityMismatch { expected: 1, found: 0 });
    }
    let mut report = Report::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let reach = (config.shift_window / 2 - 1).max(0);
    let mut bad = 0;
    for _ in 0..config.samples {
        let p = random_disc_poly(&mut rng, l as u32, reach);
        if !embedding_residual(&p, k, window)?.is_zero() {
            bad += 1;
        }
    }
    report.push(Check::new(
        format!("embed(S p) = e^(ε∂) embed(p) mod ε^{} on {} samples", k + 1, config.samples),
        bad == 0,
        format!("{bad} nonzero"),
    ));
    let pair = discrete_miura(&v, k, window)?;
    let (uu, vv) = pair.round_trip_residuals()?;
    report.push(Check::new(format!("φ_V(ψ_U(u)) = u mod ε^{}", k + 1), uu.iter().all(|s| s.is_zero()), "0"));
    report.push(Check::new(format!("ψ_U(φ_V(v)) = v mod ε^{}", k + 1), vv.iter().all(|s| s.is_zero()), "0"));
    let mut text = String::new();
    for (a, s) in pair.inverse.iter().enumerate() {
        let parts: Vec<String> = s
            .components()
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(q, c)| format!("ε^{q}·({})", render_disc(c, l)))
            .collect();
        let _ = writeln!(text, "U{} = {}", a + 1, if parts.is_empty() { "0".into() } else { parts.join(" + ") });
    }
    text.push_str(&report_text(&report));
    let success = report.all_zero();
    let json = json!({
        "eps_order": k,
        "shift_window": [window.min, window.max],
        "seed": config.seed,
        "miura": pair.to_json(),
        "report": report.to_json(),
        "residual_zero": success,
    });
    Ok(Output { json, text, success })
}

/// Runs a subcommand by name.
pub fn run(command: &str, config: &RunConfig) -> Result<Output> {
    match command {
        "derive" => cmd_derive(config),
        "omega" => cmd_omega(config),
        "verify" => cmd_verify(config),
        "solve" => cmd_solve(config),
        "resolvent" => cmd_resolvent(config),
        "gauge-fix" => cmd_gauge_fix(config),
        "discrete" => cmd_discrete(config),
        _ => Err(Error::Parse(format!("unknown command {command}"))),
    }
}

/// Applies `key = value` pairs after the file, in order.
pub fn merge(base: RunConfig, overrides: BTreeMap<&str, Value>) -> Result<RunConfig> {
    let mut v = serde_json::to_value(&base).expect("serializable");
    let obj = v.as_object_mut().expect("object");
    for (k, val) in overrides {
        obj.insert(k.to_string(), val);
    }
    serde_json::from_value(v).map_err(|e| Error::Parse(format!("config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_toml() {
        let c = RunConfig::default();
        let s = toml::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_toml(&s).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("colour = 1").is_err());
    }

    #[test]
    fn insufficient_depth_is_reported() {
        let c = RunConfig { depth: Some(2), ..RunConfig::default() };
        assert!(matches!(plan(&c, &[]), Err(Error::DepthInsufficient(_))));
    }

    #[test]
    fn bad_label_is_reported() {
        let c = RunConfig { flows: "3:0".into(), ..RunConfig::default() };
        assert!(matches!(plan(&c, &[]), Err(Error::BadLabel(_))));
    }
}
