//! CPLEX-style LP files.
//!
//! The writer emits every variable in the `Bounds` section in id order, so
//! the reader can restore variable ids exactly.

use std::collections::HashMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::milp::{Constraint, LinExpr, MilpProblem, Relation, Variable};

const TERMS_PER_LINE: usize = 8;

fn write_terms(out: &mut String, problem: &MilpProblem, expr: &LinExpr, indent: &str) {
    if expr.terms().is_empty() && expr.constant == 0 {
        out.push_str(" 0");
        return;
    }
    for (k, &(id, c)) in expr.terms().iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push('\n');
            out.push_str(indent);
        }
        let sign = if c < 0 { "-" } else { "+" };
        let name = &problem.variables[id].name;
        if k == 0 && c >= 0 {
            if c == 1 {
                let _ = write!(out, " {name}");
            } else {
                let _ = write!(out, " {c} {name}");
            }
        } else if c.abs() == 1 {
            let _ = write!(out, " {sign} {name}");
        } else {
            let _ = write!(out, " {sign} {} {name}", c.abs());
        }
    }
    if expr.constant != 0 {
        let c = expr.constant;
        if expr.terms().is_empty() {
            let _ = write!(out, " {c}");
        } else {
            let sign = if c < 0 { "-" } else { "+" };
            let _ = write!(out, " {sign} {}", c.abs());
        }
    }
}

/// Writes `problem` in LP format. Output is deterministic.
pub fn export_lp(problem: &MilpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem: {}", problem.name);
    out.push_str("Minimize\n obj:");
    write_terms(&mut out, problem, &problem.objective, "     ");
    out.push('\n');

    out.push_str("Subject To\n");
    for c in &problem.constraints {
        let _ = write!(out, " {}:", c.name);
        write_terms(&mut out, problem, &c.expr, "   ");
        let _ = writeln!(out, " {} {}", c.relation.symbol(), c.rhs);
    }

    out.push_str("Bounds\n");
    for v in &problem.variables {
        match v.upper {
            Some(u) if u == v.lower => {
                let _ = writeln!(out, " {} = {}", v.name, u);
            }
            Some(u) => {
                let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, u);
            }
            None => {
                let _ = writeln!(out, " {} >= {}", v.name, v.lower);
            }
        }
    }

    let ints: Vec<&str> = problem
        .variables
        .iter()
        .filter(|v| v.integral)
        .map(|v| v.name.as_str())
        .collect();
    if !ints.is_empty() {
        out.push_str("Generals\n");
        for chunk in ints.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
    End,
}

fn section_of(line: &str) -> Option<Section> {
    let l = line.trim().to_ascii_lowercase();
    match l.as_str() {
        "minimize" | "minimise" | "minimum" | "min" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." | "st." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "generals" | "general" | "gen" | "integers" | "integer" => Some(Section::Generals),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "end" => Some(Section::End),
        _ => None,
    }
}

struct Reader {
    names: HashMap<String, usize>,
    vars: Vec<Variable>,
    bounds_order: Vec<usize>,
}

impl Reader {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&id) = self.names.get(name) {
            return id;
        }
        self.vars.push(Variable {
            name: name.to_string(),
            lower: 0,
            upper: None,
            integral: false,
        });
        let id = self.vars.len() - 1;
        self.names.insert(name.to_string(), id);
        id
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_int(tok: &str, line: usize) -> Result<i64> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(i64::MAX),
        "-inf" | "-infinity" => Ok(i64::MIN),
        _ => tok
            .parse::<i64>()
            .map_err(|_| parse_err(line, format!("expected an integer, found `{tok}`"))),
    }
}

fn is_number(tok: &str) -> bool {
    tok.parse::<f64>().is_ok()
}

fn relation_of(tok: &str) -> Option<Relation> {
    match tok {
        "<=" | "=<" | "<" => Some(Relation::Le),
        ">=" | "=>" | ">" => Some(Relation::Ge),
        "=" => Some(Relation::Eq),
        _ => None,
    }
}

/// Parses a linear expression token stream: `[+|-] [coef] name ...`, with
/// bare numbers accumulating into the constant.
fn parse_expr(reader: &mut Reader, toks: &[(usize, String)]) -> Result<LinExpr> {
    let mut expr = LinExpr::new();
    let mut sign = 1i64;
    let mut coef: Option<i64> = None;
    for (line, tok) in toks {
        match tok.as_str() {
            "+" => {}
            "-" => sign = -sign,
            t if is_number(t) => {
                if let Some(c) = coef.take() {
                    expr.constant += sign * c;
                    sign = 1;
                }
                coef = Some(parse_int(t, *line)?);
            }
            name => {
                let id = reader.var(name);
                expr.add_term(id, sign * coef.take().unwrap_or(1));
                sign = 1;
            }
        }
    }
    if let Some(c) = coef {
        expr.constant += sign * c;
    }
    Ok(expr)
}

fn tokens(text: &str, line: usize) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        // Split a leading sign glued to a name or number ("-3", "+x").
        let mut rest = raw;
        if rest.len() > 1 && (rest.starts_with('+') || rest.starts_with('-')) && !is_number(rest) {
            out.push((line, rest[..1].to_string()));
            rest = &rest[1..];
        }
        out.push((line, rest.to_string()));
    }
    out
}

/// Reads an LP file written by [`export_lp`] (or a compatible subset of the
/// format with integer coefficients).
pub fn parse_lp(text: &str) -> Result<MilpProblem> {
    let mut reader = Reader {
        names: HashMap::new(),
        vars: Vec::new(),
        bounds_order: Vec::new(),
    };
    let mut problem = MilpProblem::new("");
    let mut section = Section::Preamble;
    let mut objective_toks: Vec<(usize, String)> = Vec::new();
    let mut constraint_toks: Vec<(usize, String)> = Vec::new();
    let mut integral: Vec<String> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        if let Some(name) = raw.trim().strip_prefix("\\ Problem:") {
            problem.name = name.trim().to_string();
            continue;
        }
        let line = raw.split('\\').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if let Some(s) = section_of(line) {
            section = s;
            continue;
        }
        match section {
            Section::Preamble => {
                return Err(parse_err(line_no, "content before the objective section"))
            }
            Section::Objective => objective_toks.extend(tokens(line, line_no)),
            Section::Constraints => constraint_toks.extend(tokens(line, line_no)),
            Section::Bounds => parse_bound(&mut reader, line, line_no)?,
            Section::Generals | Section::Binaries => {
                for name in line.split_whitespace() {
                    integral.push(name.to_string());
                    if section == Section::Binaries {
                        let id = reader.var(name);
                        reader.vars[id].upper = Some(1);
                    }
                }
            }
            Section::End => return Err(parse_err(line_no, "content after End")),
        }
    }

    // Objective: optional "label:" prefix.
    let mut obj = &objective_toks[..];
    if let Some((_, first)) = obj.first() {
        if first.ends_with(':') {
            obj = &obj[1..];
        }
    }
    problem.objective = parse_expr(&mut reader, obj)?;

    // Constraints: "name: terms rel rhs", repeated.
    let mut rest = &constraint_toks[..];
    let mut unnamed = 0;
    while !rest.is_empty() {
        let (line, first) = &rest[0];
        let name = if let Some(n) = first.strip_suffix(':') {
            rest = &rest[1..];
            n.to_string()
        } else {
            unnamed += 1;
            format!("R{unnamed}")
        };
        let rel_pos = rest
            .iter()
            .position(|(_, t)| relation_of(t).is_some())
            .ok_or_else(|| parse_err(*line, format!("constraint {name} has no relation")))?;
        let relation = relation_of(&rest[rel_pos].1).unwrap();
        let expr = parse_expr(&mut reader, &rest[..rel_pos])?;
        // rhs: optional sign then number.
        let mut k = rel_pos + 1;
        let mut sign = 1;
        while k < rest.len() && (rest[k].1 == "-" || rest[k].1 == "+") {
            if rest[k].1 == "-" {
                sign = -sign;
            }
            k += 1;
        }
        let (rl, rtok) = rest
            .get(k)
            .ok_or_else(|| parse_err(*line, format!("constraint {name} has no right-hand side")))?;
        let rhs = sign * parse_int(rtok, *rl)?;
        problem.add_constraint(Constraint::new(name, expr, relation, rhs));
        rest = &rest[k + 1..];
    }

    for name in integral {
        let id = reader.var(&name);
        reader.vars[id].integral = true;
    }

    // Restore id order: variables in Bounds order first, the rest after.
    let mut order = reader.bounds_order.clone();
    let mut seen = vec![false; reader.vars.len()];
    order.retain(|&id| !std::mem::replace(&mut seen[id], true));
    order.extend((0..reader.vars.len()).filter(|&id| !seen[id]));
    let mut new_id = vec![0; reader.vars.len()];
    for (new, &old) in order.iter().enumerate() {
        new_id[old] = new;
    }
    problem.variables = order.iter().map(|&old| reader.vars[old].clone()).collect();
    let remap = |e: &LinExpr| {
        LinExpr::from_terms(e.terms().iter().map(|&(id, c)| (new_id[id], c)), e.constant)
    };
    problem.objective = remap(&problem.objective);
    for c in &mut problem.constraints {
        c.expr = remap(&c.expr);
    }
    Ok(problem)
}

fn parse_bound(reader: &mut Reader, line: &str, line_no: usize) -> Result<()> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    let bad = || parse_err(line_no, format!("unrecognized bound `{}`", line.trim()));
    let to_upper = |v: i64| (v != i64::MAX).then_some(v);
    let to_lower = |v: i64| if v == i64::MIN { None } else { Some(v) };
    match toks.as_slice() {
        [name, free] if free.eq_ignore_ascii_case("free") => {
            let id = reader.var(name);
            reader.bounds_order.push(id);
            let _ = id;
            Err(parse_err(
                line_no,
                format!("free variable {name} is not supported"),
            ))
        }
        [lo, r1, name, r2, hi]
            if relation_of(r1) == Some(Relation::Le) && relation_of(r2) == Some(Relation::Le) =>
        {
            let lo = to_lower(parse_int(lo, line_no)?)
                .ok_or_else(|| parse_err(line_no, "variables must be bounded below"))?;
            let hi = to_upper(parse_int(hi, line_no)?);
            let id = reader.var(name);
            reader.vars[id].lower = lo;
            reader.vars[id].upper = hi;
            reader.bounds_order.push(id);
            Ok(())
        }
        [a, r, b] => {
            let rel = relation_of(r).ok_or_else(bad)?;
            let (name, value, rel) = if is_number(a) {
                // "v <= x" means x >= v
                let flipped = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (*b, parse_int(a, line_no)?, flipped)
            } else {
                (*a, parse_int(b, line_no)?, rel)
            };
            let id = reader.var(name);
            match rel {
                Relation::Le => reader.vars[id].upper = to_upper(value),
                Relation::Ge => {
                    reader.vars[id].lower = to_lower(value)
                        .ok_or_else(|| parse_err(line_no, "variables must be bounded below"))?
                }
                Relation::Eq => {
                    reader.vars[id].lower = value;
                    reader.vars[id].upper = Some(value);
                }
            }
            reader.bounds_order.push(id);
            Ok(())
        }
        _ => Err(bad()),
    }
}
