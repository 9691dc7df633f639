//! One pass/fail line per acceptance criterion.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use dstau::diffalg::{jet, EpsSeries, VectorField};
use dstau::discrete::{discrete_miura, embedding_residual, shift_var, DiscPoly, DiscSeries, Window};
use dstau::hierarchy::*;
use dstau::kacmoody::{build_algebra, LoopRealization};
use dstau::miura::{invert_miura, MiuraTuple};
use dstau::poly::rat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn algebra(name: &str) -> Arc<LoopRealization> {
    Arc::new(build_algebra(name, 0).expect("supported type"))
}

fn labels(n: usize, max_k: usize) -> Vec<FlowLabel> {
    (0..=max_k).flat_map(|k| (1..=n).map(move |a| FlowLabel::new(a, k))).collect()
}

fn summarize(report: &Report) -> (bool, String) {
    let failures = report.failures();
    if failures.is_empty() {
        (true, format!("{} identities", report.checks.len()))
    } else {
        (false, format!("{} of {} failed, first: {} ({})", failures.len(), report.checks.len(), failures[0].name, failures[0].residual))
    }
}

fn within(ok: bool, detail: String, elapsed: Duration, limit: Duration) -> (bool, String) {
    if elapsed > limit {
        (false, format!("{detail}; took {elapsed:.1?}, limit {limit:?}"))
    } else {
        (ok, detail)
    }
}

fn d10(name: &str) -> Result<bool, String> {
    let h = DsHierarchy::for_ranges(algebra(name), "lowest", 0, 0).map_err(|e| e.to_string())?;
    let d = h.flow(FlowLabel::one()).map_err(|e| e.to_string())?;
    d10_unique_solve(&h).map_err(|e| e.to_string())?;
    Ok(d == VectorField::total(h.components()).scale(&rat(-1)))
}

fn criterion_1() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["A1^(1)", "A2^(1)"] {
        let t = Instant::now();
        let pass = d10(name)?;
        let (pass, d) = within(pass, format!("{name} D[1:0] = -∂"), t.elapsed(), Duration::from_secs(10));
        ok &= pass;
        details.push(d);
    }
    Ok((ok, details.join("; ")))
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let mut report = Report::default();
    let cases = [
        ("A1^(1)", vec![FlowLabel::new(1, 0), FlowLabel::new(1, 1), FlowLabel::new(1, 2)]),
        ("A2^(1)", vec![FlowLabel::new(1, 0), FlowLabel::new(2, 0), FlowLabel::new(1, 1), FlowLabel::new(2, 1)]),
    ];
    for (name, ls) in cases {
        let kmax = ls.iter().map(|l| l.k).max().unwrap();
        let h = DsHierarchy::for_ranges(algebra(name), "lowest", kmax, 0).map_err(|e| e.to_string())?;
        let flows = h.flows(&ls).map_err(|e| e.to_string())?;
        report.extend(verify_integrability(&flows, 4, 8).map_err(|e| e.to_string())?);
    }
    let (ok, d) = summarize(&report);
    Ok(within(ok, d, t.elapsed(), Duration::from_secs(300)))
}

fn slice_omega(name: &str, max_k: usize) -> Result<(DsHierarchy, OmegaTable), String> {
    let h = DsHierarchy::for_ranges(algebra(name), "lowest", max_k, max_k).map_err(|e| e.to_string())?;
    let t = h.omega(max_k).map_err(|e| e.to_string())?;
    Ok((h, t))
}

fn criterion_3() -> Outcome {
    let mut report = Report::default();
    for name in ["A1^(1)", "A2^(1)", "A2^(2)"] {
        let (_, t) = slice_omega(name, 1)?;
        report.extend(verify_omega_symmetry(&t));
    }
    Ok(summarize(&report))
}

fn criterion_4() -> Outcome {
    let mut report = Report::default();
    for name in ["A1^(1)", "A2^(1)"] {
        let (h, t) = slice_omega(name, 1)?;
        let flows = h.flows(&labels(h.components(), 1)).map_err(|e| e.to_string())?;
        report.extend(verify_tau_symmetry(&t, &flows).map_err(|e| e.to_string())?);
    }
    Ok(summarize(&report))
}

fn criterion_5() -> Outcome {
    let mut report = Report::default();
    for name in ["A1^(1)", "A2^(1)"] {
        let g = algebra(name);
        let gen = GenericHierarchy::new(g.clone(), "lowest", required_floor(&g, 0, 1)).map_err(|e| e.to_string())?;
        let tq = compute_omega(&gen.lax, &gen.resolvents, 1, Region::MuInside).map_err(|e| e.to_string())?;
        report.extend(verify_gauge_invariance(&gen.frame, &tq).map_err(|e| e.to_string())?);
        let tu = omega_in_coordinates(&tq, &mut gen.rewriter(), gen.frame.components()).map_err(|e| e.to_string())?;
        let (_, slice) = slice_omega(name, 1)?;
        report.push(Check::new(format!("{name}: Ω(q) in coordinates u = Ω(u)"), tu.entries == slice.entries, "0"));
    }
    Ok(summarize(&report))
}

fn criterion_6() -> Outcome {
    let mut report = Report::default();
    for (name, max_k) in [("A1^(1)", 2), ("A2^(1)", 1)] {
        let g = algebra(name);
        let h = DsHierarchy::for_ranges(g.clone(), "lowest", max_k, 1).map_err(|e| e.to_string())?;
        report.extend(verify_resolvents(&h.lax, &h.resolvents, required_depth(&g, max_k)));
    }
    Ok(summarize(&report))
}

fn criterion_7() -> Outcome {
    let mut report = Report::default();
    for name in ["A1^(1)", "A2^(1)"] {
        let (h, t) = slice_omega(name, 1)?;
        let flows = h.flows(&[FlowLabel::one(), FlowLabel::new(1, 1)]).map_err(|e| e.to_string())?;
        let (_, r) = tau_coordinate_check(&t, &flows, 2, 6).map_err(|e| e.to_string())?;
        report.extend(r);
    }
    Ok(summarize(&report))
}

fn criterion_8() -> Outcome {
    let k = 4;
    let v = MiuraTuple::new(vec![EpsSeries::from_components(vec![jet(1, 0), jet(1, 1)], k)]).map_err(|e| e.to_string())?;
    let pair = invert_miura(&v, k, 8).map_err(|e| e.to_string())?;
    let (uu, vv) = pair.round_trip_residuals().map_err(|e| e.to_string())?;
    let ok = uu.iter().chain(&vv).all(|s| s.is_zero());
    Ok((ok, "V = (u + ε u_x), φ∘ψ = id and ψ∘φ = id mod ε^5".into()))
}

fn criterion_9() -> Outcome {
    let t = Instant::now();
    let g = algebra("A2^(2)");
    let mut report = verify_structure(&g);
    let pass = d10("A2^(2)")?;
    report.push(Check::new("A2^(2) D[1:0] = -∂", pass, "0"));
    let (h, tab) = slice_omega("A2^(2)", 1)?;
    report.extend(verify_omega_symmetry(&tab));
    report.extend(verify_resolvents(&h.lax, &h.resolvents, required_depth(&g, 1)));
    let (ok, d) = summarize(&report);
    Ok(within(ok, d, t.elapsed(), Duration::from_secs(120)))
}

fn random_disc_poly(rng: &mut ChaCha8Rng) -> DiscPoly {
    let mut p = DiscPoly::zero();
    for _ in 0..rng.gen_range(1..=4) {
        let mut t = DiscPoly::int(rng.gen_range(-5..=5));
        for _ in 0..rng.gen_range(0..=3) {
            t = &t * &shift_var(rng.gen_range(1..=2), rng.gen_range(-3..=3)).pow(rng.gen_range(1..=2));
        }
        p = &p + &t;
    }
    p
}

fn criterion_10() -> Outcome {
    let window = Window::symmetric(8);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut failures = 0;
    for _ in 0..100 {
        let p = random_disc_poly(&mut rng);
        if !embedding_residual(&p, 2, window).map_err(|e| e.to_string())?.is_zero() {
            failures += 1;
        }
    }
    let k = 2;
    let u = |a, m| shift_var(a, m);
    let tuples = [
        vec![DiscSeries::from_components(vec![u(1, 0), u(1, 1)], k)],
        vec![
            DiscSeries::from_components(vec![&u(1, 0) + &(&u(2, 0) * &u(2, 0)), &u(1, 1) * &u(2, -1)], k),
            DiscSeries::from_components(vec![u(2, 0).scale(&rat(3)), u(1, -1), u(2, 2)], k),
        ],
    ];
    let mut round_trips = true;
    for v in &tuples {
        let pair = discrete_miura(v, k, Window::symmetric(16)).map_err(|e| e.to_string())?;
        let (uu, vv) = pair.round_trip_residuals().map_err(|e| e.to_string())?;
        round_trips &= uu.iter().chain(&vv).all(|s| s.is_zero());
    }
    Ok((failures == 0 && round_trips, format!("{failures}/100 embedding residuals nonzero; round trips exact: {round_trips}")))
}

fn criterion_11() -> Outcome {
    let t = Instant::now();
    let (h, tab) = slice_omega("A1^(1)", 1)?;
    let flows: Vec<(FlowLabel, VectorField)> =
        h.flows(&[FlowLabel::one(), FlowLabel::new(1, 1)]).map_err(|e| e.to_string())?.into_iter().collect();
    let init = gbgw_initial(&h.frame, &[rat(1)]).map_err(|e| e.to_string())?;
    let sol = integrate_formal(&flows, &init, 2).map_err(|e| e.to_string())?;
    let tp = two_point_functions(&sol, &tab).map_err(|e| e.to_string())?;
    let mut report = sol.consistency.clone();
    report.extend(tp.report);
    let (ok, d) = summarize(&report);
    let d = format!("u(x,0) = {}; {d}", init[0]);
    Ok(within(ok, d, t.elapsed(), Duration::from_secs(60)))
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("D[1:0] = -∂ for sl2, sl3", criterion_1),
        ("pairwise commutators vanish", criterion_2),
        ("Ω symmetric", criterion_3),
        ("tau-symmetry, k ≤ 1", criterion_4),
        ("Ω gauge invariant", criterion_5),
        ("resolvent residuals and normalization", criterion_6),
        ("tau-coordinates reconstruct D[1:1]", criterion_7),
        ("Miura round trip mod ε^5", criterion_8),
        ("twisted A2^(2)", criterion_9),
        ("discrete embedding and Miura", criterion_10),
        ("gBGW two-point functions", criterion_11),
    ];
    let results: BTreeMap<usize, (Outcome, Duration)> = thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .enumerate()
            .map(|(i, (_, f))| {
                s.spawn(move || {
                    let t = Instant::now();
                    (i, (f(), t.elapsed()))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion panicked")).collect()
    });
    let mut all = true;
    for (i, (name, _)) in criteria.iter().enumerate() {
        let (outcome, elapsed) = &results[&i];
        let (ok, detail) = match outcome {
            Ok(r) => r.clone(),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= ok;
        println!("criterion {:>2} {} {name}: {detail} [{elapsed:.2?}]", i + 1, if ok { "PASS" } else { "FAIL" });
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
