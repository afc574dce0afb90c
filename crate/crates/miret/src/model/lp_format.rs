//! CPLEX-LP text export.
//!
//! Writes a [`MilpModel`] in the LP file format understood by CPLEX,
//! Gurobi, SCIP, HiGHS and friends, so full-size instances can be handed
//! to an industrial solver. The writer is bit-stable: identical models
//! produce identical bytes (terms in variable-id order, numbers in
//! Rust's shortest round-trip decimal form, fixed line-wrapping).

use std::fmt::Write as _;

use super::milp::{MilpModel, Sense, VarKind};

/// Longest line emitted before wrapping onto a continuation line. The
/// historical LP line limit is 255 characters; stay comfortably under.
const WRAP_COLUMN: usize = 200;

fn number(x: f64) -> String {
    // Normalize negative zero so "-0" never appears in the file.
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x}")
}

/// Appends `token` to `line`, flushing `line` into `out` (with a leading
/// space on continuations) whenever it would pass the wrap column.
fn push_token(out: &mut String, line: &mut String, token: &str) {
    if !line.is_empty() && line.len() + 1 + token.len() > WRAP_COLUMN {
        out.push_str(line);
        out.push('\n');
        line.clear();
        line.push(' ');
    }
    if !line.is_empty() && !line.ends_with(' ') {
        line.push(' ');
    }
    line.push_str(token);
}

fn flush(out: &mut String, line: &mut String) {
    if !line.trim().is_empty() {
        out.push_str(line);
        out.push('\n');
    }
    line.clear();
}

/// Emits `terms` as a signed linear expression, one token per sign and
/// one per `coeff name` pair. The first term carries its own minus sign
/// when negative; later terms use explicit `+`/`-` separators.
fn push_terms(out: &mut String, line: &mut String, terms: &[(String, f64)]) {
    let mut first = true;
    for (name, coeff) in terms {
        if *coeff == 0.0 {
            continue;
        }
        let magnitude = number(coeff.abs());
        if first {
            let tok = if *coeff < 0.0 {
                format!("-{magnitude} {name}")
            } else {
                format!("{magnitude} {name}")
            };
            push_token(out, line, &tok);
            first = false;
        } else {
            push_token(out, line, if *coeff < 0.0 { "-" } else { "+" });
            push_token(out, line, &format!("{magnitude} {name}"));
        }
    }
    if first {
        // Every term vanished (or there were none): keep the expression
        // syntactically valid with an explicit zero.
        push_token(out, line, "0");
    }
}

/// Renders the model as a CPLEX-LP document.
pub fn write_lp(model: &MilpModel, problem_name: &str) -> String {
    let mut out = String::new();
    let mut line = String::new();
    let _ = writeln!(out, "\\ Problem: {problem_name}");

    out.push_str("Minimize\n");
    let mut obj_terms: Vec<(String, f64)> = model
        .variables
        .iter()
        .zip(&model.objective.coeffs)
        .map(|(v, &c)| (v.name.clone(), c))
        .collect();
    obj_terms.retain(|(_, c)| *c != 0.0);
    line.push_str(" obj:");
    push_terms(&mut out, &mut line, &obj_terms);
    if model.objective.constant != 0.0 {
        let c = model.objective.constant;
        push_token(&mut out, &mut line, if c < 0.0 { "-" } else { "+" });
        push_token(&mut out, &mut line, &number(c.abs()));
    }
    flush(&mut out, &mut line);

    out.push_str("Subject To\n");
    for c in &model.constraints {
        line.push_str(&format!(" {}:", c.name));
        let terms: Vec<(String, f64)> = c
            .terms
            .iter()
            .map(|&(id, coeff)| (model.variables[id].name.clone(), coeff))
            .collect();
        push_terms(&mut out, &mut line, &terms);
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        push_token(&mut out, &mut line, sense);
        push_token(&mut out, &mut line, &number(c.rhs));
        flush(&mut out, &mut line);
    }

    out.push_str("Bounds\n");
    for v in &model.variables {
        // Binaries default to [0, 1]; only deviations need spelling out.
        if v.kind == VarKind::Binary && v.lb == 0.0 && v.ub == 1.0 {
            continue;
        }
        if v.lb == v.ub {
            let _ = writeln!(out, " {} = {}", v.name, number(v.lb));
            continue;
        }
        let lb = if v.lb.is_finite() {
            number(v.lb)
        } else {
            "-inf".into()
        };
        let ub = if v.ub.is_finite() {
            number(v.ub)
        } else {
            "+inf".into()
        };
        let _ = writeln!(out, " {lb} <= {} <= {ub}", v.name);
    }

    let binaries: Vec<&str> = model
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        line.push(' ');
        for name in binaries {
            push_token(&mut out, &mut line, name);
        }
        flush(&mut out, &mut line);
    }

    out.push_str("End\n");
    out
}
