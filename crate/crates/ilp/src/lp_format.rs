//! CPLEX LP text export, for inspecting models with external solvers.

use std::fmt::Write;

use num_traits::{Signed, ToPrimitive, Zero};

use crate::model::{IlpModel, LinExpr, VarKind};
use crate::Rational;

fn num(r: &Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}", r.to_f64().unwrap_or(0.0))
    }
}

fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.".contains(c) { c } else { '_' })
        .collect();
    if s.starts_with(|c: char| c.is_ascii_digit() || c == '.') || s.is_empty() {
        format!("v_{s}")
    } else {
        s
    }
}

fn expr(out: &mut String, model: &IlpModel, e: &LinExpr) {
    if e.is_empty() {
        out.push_str("0 ");
        out.push_str(&sanitize(&model.vars()[0].name));
        return;
    }
    for (i, (v, c)) in e.terms().iter().enumerate() {
        let name = sanitize(&model.var(*v).name);
        let sign = if c.is_negative() { "-" } else if i > 0 { "+" } else { "" };
        let mag = c.abs();
        if i > 0 {
            out.push(' ');
        }
        out.push_str(sign);
        if !sign.is_empty() {
            out.push(' ');
        }
        if mag == Rational::from_integer(1.into()) {
            out.push_str(&name);
        } else {
            let _ = write!(out, "{} {}", num(&mag), name);
        }
    }
}

/// Renders `model` in CPLEX LP format.
pub fn to_lp_string(model: &IlpModel) -> String {
    let mut out = String::from("\\ generated by invsynth-ilp\nMinimize\n obj: ");
    match model.objective() {
        Some(o) if !o.is_empty() && model.num_vars() > 0 => expr(&mut out, model, o),
        _ => out.push_str("0"),
    }
    out.push_str("\nSubject To\n");
    for (i, c) in model.constraints().iter().enumerate() {
        let label = c.name.as_deref().map(sanitize).unwrap_or_else(|| format!("c{i}"));
        let _ = write!(out, " {label}: ");
        if c.expr.is_empty() {
            if model.num_vars() == 0 {
                continue;
            }
        }
        expr(&mut out, model, &c.expr);
        let _ = writeln!(out, " {} {}", c.relation, num(&c.rhs));
    }
    out.push_str("Bounds\n");
    for v in model.vars() {
        let name = sanitize(&v.name);
        match (&v.lower, &v.upper) {
            (Some(l), Some(h)) => {
                let _ = writeln!(out, " {} <= {} <= {}", num(l), name, num(h));
            }
            (Some(l), None) => {
                if !l.is_zero() {
                    let _ = writeln!(out, " {name} >= {}", num(l));
                }
            }
            (None, Some(h)) => {
                let _ = writeln!(out, " -inf <= {name} <= {}", num(h));
            }
            (None, None) => {
                let _ = writeln!(out, " {name} free");
            }
        }
    }
    let ints: Vec<String> = model
        .vars()
        .iter()
        .filter(|v| v.kind == VarKind::Integer)
        .map(|v| sanitize(&v.name))
        .collect();
    if !ints.is_empty() {
        out.push_str("General\n");
        for chunk in ints.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}
