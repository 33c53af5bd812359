use std::fmt::Write as _;
use std::io::{self, Write};

use super::problem::{LpProblem, Sense, VarRole};

fn var_name(j: usize, role: &VarRole) -> String {
    match role {
        VarRole::Pixel { row, col } => format!("x_{row}_{col}"),
        VarRole::Coeff { block, k, l } => format!("y_{block}_{k}_{l}"),
        VarRole::PairSlack { pair } => format!("h_{pair}"),
        VarRole::Other => format!("v{j}"),
    }
}

fn term(out: &mut String, first: bool, coef: f64, name: &str) {
    let sign = if coef < 0.0 { "-" } else { "+" };
    let mag = coef.abs();
    if first && coef >= 0.0 {
        let _ = write!(out, " ");
    } else {
        let _ = write!(out, " {sign} ");
    }
    if mag == 1.0 {
        let _ = write!(out, "{name}");
    } else {
        let _ = write!(out, "{mag:?} {name}");
    }
}

/// Readers cap the line length, so long expressions continue on new lines.
const WRAP_AT: usize = 200;

fn wrap<W: Write>(out: &mut W, line: &mut String) -> io::Result<()> {
    if line.len() > WRAP_AT {
        writeln!(out, "{line}")?;
        line.clear();
        line.push_str("  ");
    }
    Ok(())
}

/// Write the problem in CPLEX LP text format.
pub fn write_lp_format<W: Write>(problem: &LpProblem, mut out: W) -> io::Result<()> {
    let names: Vec<String> = problem
        .roles()
        .iter()
        .enumerate()
        .map(|(j, r)| var_name(j, r))
        .collect();
    let mut line = String::new();
    writeln!(out, "\\ {} variables, {} rows", problem.num_vars(), problem.num_rows())?;
    writeln!(out, "Minimize")?;
    line.push_str(" obj:");
    let mut first = true;
    for (j, c) in problem.objective() {
        term(&mut line, first, c, &names[j]);
        first = false;
        wrap(&mut out, &mut line)?;
    }
    if first {
        line.push_str(" 0 ");
        line.push_str(names.first().map(String::as_str).unwrap_or("v0"));
    }
    writeln!(out, "{line}")?;
    writeln!(out, "Subject To")?;
    let csr = problem.to_csr();
    for r in 0..csr.nrows {
        line.clear();
        let _ = write!(line, " c{r}:");
        let (idx, val) = csr.row(r);
        if idx.is_empty() {
            line.push_str(" 0 ");
            line.push_str(&names[0]);
        }
        for (p, (&j, &v)) in idx.iter().zip(val).enumerate() {
            term(&mut line, p == 0, v, &names[j]);
            wrap(&mut out, &mut line)?;
        }
        let op = match problem.senses()[r] {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        writeln!(out, "{line} {op} {:?}", problem.rhs()[r])?;
    }
    writeln!(out, "Bounds")?;
    for (j, name) in names.iter().enumerate() {
        let (lo, hi) = (problem.lower()[j], problem.upper()[j]);
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => writeln!(out, " {lo:?} <= {name} <= {hi:?}")?,
            (true, false) => writeln!(out, " {name} >= {lo:?}")?,
            (false, true) => writeln!(out, " -inf <= {name} <= {hi:?}")?,
            (false, false) => writeln!(out, " {name} free")?,
        }
    }
    writeln!(out, "End")?;
    Ok(())
}
