//! Plain-text view of a [`RunReport`]. Everything shown here is read from
//! the report; nothing is recomputed.

use std::fmt::Write;

use crate::report::*;

fn flag(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn labels(echo: Option<&InstanceEcho>, n: usize, m: usize) -> (Vec<String>, Vec<String>) {
    match echo {
        Some(e) if e.characteristics.len() == n && e.states.len() == m => (e.characteristics.clone(), e.states.clone()),
        _ => (
            (1..=n).map(|i| format!("x{i}")).collect(),
            (1..=m).map(|j| format!("t{j}")).collect(),
        ),
    }
}

fn solution(out: &mut String, title: &str, s: &SolutionReport, echo: Option<&InstanceEcho>) {
    let n = s.nu_star.len();
    let m = s.ccp.first().map_or(0, Vec::len);
    let (xs, ts) = labels(echo, n, m);
    let width = xs.iter().chain(&ts).map(String::len).max().unwrap_or(1).max(12);
    let _ = writeln!(out, "{title}");
    let _ = write!(out, "  {:<width$}  {:>14}", "", "nu*");
    for t in &ts {
        let _ = write!(out, "  {:>14}", format!("P(.|{t})"));
    }
    out.push('\n');
    for (i, x) in xs.iter().enumerate() {
        let _ = write!(out, "  {:<width$}  {:>14.10}", x, s.nu_star[i]);
        for v in &s.ccp[i] {
            let _ = write!(out, "  {v:>14.10}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "  U*                    {:.10}", s.u_star);
    let _ = writeln!(out, "  f(nu*)                {:.10}", s.f_star);
    let _ = writeln!(out, "  E[u]                  {:.10}", s.expected_utility);
    let _ = writeln!(out, "  kappa                 {:.10}", s.kappa.total);
    let _ = writeln!(out, "    vertical            {:.10}", s.kappa.vertical);
    let _ = writeln!(out, "    mutual information  {:.10}", s.kappa.mutual_information);
    let _ = writeln!(out, "  FOC residual          {:.3e}", s.foc_residual);
    let _ = writeln!(out, "  row consistency       {:.3e}", s.consistency_residual);
    let _ = writeln!(
        out,
        "  outer iterations      {} ({})",
        s.outer_iterations,
        if s.converged { "converged" } else { "not converged" }
    );
}

fn bridge(out: &mut String, b: &BridgeReport) {
    let _ = writeln!(out, "bridge");
    let _ = writeln!(out, "  V(nu)                 {:.10}", b.value_v);
    let _ = writeln!(out, "  duality gap           {:.3e}", b.duality_gap);
    let _ = writeln!(out, "  marginal residual     {:.3e}", b.marginal_residual);
    let _ = writeln!(
        out,
        "  sweeps                {} ({})",
        b.iterations,
        if b.converged { "converged" } else { "not converged" }
    );
}

fn diagnostics(out: &mut String, d: &DiagnosticsSection) {
    let t = &d.thresholds;
    let p = &d.passes;
    let _ = writeln!(out, "diagnostics");
    let _ = writeln!(out, "  gibbs deviation       {:.3e}  <= {:.0e}  {}", d.gibbs_deviation, t.gibbs, flag(p.gibbs));
    for [eps, slope] in &d.fso_slopes {
        let _ = writeln!(out, "  fso slope @ {eps:<9.0e} {slope:.3e}");
    }
    let _ = writeln!(out, "  fso decay             >= {}x            {}", t.fso_decay, flag(p.fso));
    let _ = writeln!(
        out,
        "  directional @ {:<7.0e} {:.3e}  <= {:.0e}  {}",
        d.directional_eps,
        d.directional_derivative_error,
        t.directional,
        flag(p.directional)
    );
    let _ = writeln!(out, "  jensen gap            {:.3e}  <= {:.0e}  {}", d.jensen_gap, t.jensen, flag(p.jensen));
    let _ = writeln!(out, "  mnl residual          {:.3e}  <= {:.0e}  {}", d.mnl_residual, t.mnl, flag(p.mnl));
    let _ = writeln!(
        out,
        "  density nu/phi        [{:.4}, {:.4}]  min > {:.0e}  {}",
        d.density_min,
        d.density_max,
        t.density_min,
        flag(p.density)
    );
}

fn entry(out: &mut String, e: &EntrySection) {
    let _ = writeln!(out, "entry restrictions (tol {:.0e})", e.tol);
    let _ = writeln!(out, "  {:<12} {:<12} {:>12} {:>6} {:>14}", "first", "second", "deviation", "const", "alpha");
    for p in &e.pairs {
        let alpha = p.alpha.map_or_else(|| "-".to_string(), |a| format!("{a:.10}"));
        let _ = writeln!(
            out,
            "  {:<12} {:<12} {:>12.3e} {:>6} {:>14}",
            p.first,
            p.second,
            p.deviation,
            flag(p.constant),
            alpha
        );
    }
    match e.alpha_hat {
        Some(a) => {
            let _ = writeln!(out, "  alpha hat             {a:.10} (spread {:.3e})", e.alpha_spread);
        }
        None => {
            let _ = writeln!(out, "  alpha hat             unidentified");
        }
    }
    let _ = writeln!(out, "  restrictions          {}", flag(e.passed));
}

fn oracle(out: &mut String, o: &OracleSection) {
    let _ = writeln!(out, "oracle");
    let _ = writeln!(out, "  U oracle              {:.10}", o.u_oracle);
    let _ = writeln!(out, "  U solver              {:.10}", o.u_solver);
    let _ = writeln!(out, "  solver - oracle       {:.3e}", o.difference);
    let _ = writeln!(out, "  marginal gap          {:.3e}", o.marginal_gap);
    let _ = writeln!(out, "  gradient check        {:.3e}", o.gradient_check_error);
}

pub fn render(r: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", r.version, r.command);
    if let Some(i) = &r.instance {
        let _ = writeln!(
            out,
            "instance {} ({} x {}, alpha {}, lambda {})",
            &i.sha256[..12.min(i.sha256.len())],
            i.characteristics.len(),
            i.states.len(),
            i.alpha,
            i.lambda
        );
    }
    if let Some(s) = &r.solution {
        let title = if r.entrant_solution.is_some() { "base solution" } else { "solution" };
        solution(&mut out, title, s, r.instance.as_ref());
    }
    if let Some(s) = &r.entrant_solution {
        solution(&mut out, "entrant solution", s, r.entrant.as_ref());
    }
    if let Some(b) = &r.bridge {
        bridge(&mut out, b);
    }
    if let Some(d) = &r.diagnostics {
        diagnostics(&mut out, d);
    }
    if let Some(e) = &r.entry {
        entry(&mut out, e);
    }
    if let Some(o) = &r.oracle {
        oracle(&mut out, o);
    }
    if let Some(t) = &r.timings {
        let _ = writeln!(out, "wall clock            {:.3} s", t.total_seconds);
    }
    let _ = writeln!(out, "status                exit {}", r.status.exit_code);
    if let Some(m) = &r.status.message {
        let _ = writeln!(out, "  {m}");
    }
    out
}
