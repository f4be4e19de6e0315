//! Plain-text instance files.
//!
//! ATSP: `n`, then `n` rows of `n` integers (diagonal ignored).
//! STSP: `n`, then the strict upper triangle row by row (a full upper
//! triangle including the diagonal is accepted too).
//! MAX-SAT: DIMACS CNF restricted to three-literal clauses.

use std::fmt::Write as _;
use std::str::FromStr;

use ssr_core::atsp::AtspInstance;
use ssr_core::maxsat::{Clause, CnfInstance};
use ssr_core::stsp::StspInstance;

use crate::error::{parse_err, Result};

/// Integers with their 1-based line numbers, skipping `#` comment lines.
fn tokens<T: FromStr>(text: &str) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim_start().starts_with('#') {
            continue;
        }
        for tok in line.split_whitespace() {
            let v = tok
                .parse()
                .map_err(|_| parse_err(i + 1, format!("expected an integer, got `{tok}`")))?;
            out.push((i + 1, v));
        }
    }
    Ok(out)
}

fn header(tokens: &[(usize, i64)]) -> Result<usize> {
    match tokens.first() {
        Some(&(_, n)) if n >= 3 => Ok(n as usize),
        Some(&(line, n)) => Err(parse_err(line, format!("city count must be at least 3, got {n}"))),
        None => Err(parse_err(1, "empty instance file")),
    }
}

fn last_line(tokens: &[(usize, i64)]) -> usize {
    tokens.last().map_or(1, |t| t.0)
}

pub fn read_atsp(text: &str) -> Result<AtspInstance> {
    let toks = tokens::<i64>(text)?;
    let n = header(&toks)?;
    let body = &toks[1..];
    if body.len() != n * n {
        return Err(parse_err(
            last_line(&toks),
            format!("expected {} matrix entries, got {}", n * n, body.len()),
        ));
    }
    Ok(AtspInstance::new(n, body.iter().map(|t| t.1).collect())?)
}

pub fn write_atsp(instance: &AtspInstance) -> String {
    let n = instance.n();
    let mut out = format!("{n}\n");
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| instance.cost(i, j).to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn read_stsp(text: &str) -> Result<StspInstance> {
    let toks = tokens::<i64>(text)?;
    let n = header(&toks)?;
    let body: Vec<i64> = toks[1..].iter().map(|t| t.1).collect();
    let strict = n * (n - 1) / 2;
    if body.len() == strict {
        return Ok(StspInstance::from_upper_triangle(n, &body)?);
    }
    if body.len() == strict + n {
        let mut upper = Vec::with_capacity(strict);
        let mut k = 0;
        for i in 0..n {
            k += 1; // diagonal
            upper.extend_from_slice(&body[k..k + (n - 1 - i)]);
            k += n - 1 - i;
        }
        return Ok(StspInstance::from_upper_triangle(n, &upper)?);
    }
    Err(parse_err(
        last_line(&toks),
        format!("expected {strict} upper-triangular entries, got {}", body.len()),
    ))
}

pub fn write_stsp(instance: &StspInstance) -> String {
    let n = instance.n();
    let mut out = format!("{n}\n");
    for i in 0..n - 1 {
        let row: Vec<String> = (i + 1..n).map(|j| instance.cost(i, j).to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn read_dimacs(text: &str) -> Result<CnfInstance> {
    let mut declared: Option<(usize, usize, usize)> = None;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    let mut current_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if let Some(rest) = line.strip_prefix('p') {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let parsed = match parts.as_slice() {
                ["cnf", v, c] => v.parse().ok().zip(c.parse().ok()),
                _ => None,
            };
            let (v, c) = parsed.ok_or_else(|| parse_err(line_no, "malformed `p cnf` header"))?;
            if declared.is_some() {
                return Err(parse_err(line_no, "second `p cnf` header"));
            }
            declared = Some((v, c, line_no));
            continue;
        }
        if declared.is_none() {
            return Err(parse_err(line_no, "clause before `p cnf` header"));
        }
        for tok in line.split_whitespace() {
            let lit: i32 = tok
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad literal `{tok}`")))?;
            if current.is_empty() {
                current_line = line_no;
            }
            if lit == 0 {
                let clause: Clause = current.as_slice().try_into().map_err(|_| {
                    parse_err(
                        current_line,
                        format!("only 3-literal clauses are supported, got {}", current.len()),
                    )
                })?;
                clauses.push(clause);
                current.clear();
            } else {
                current.push(lit);
            }
        }
    }
    let (vars, count, header_line) = declared.ok_or_else(|| parse_err(1, "missing `p cnf` header"))?;
    if !current.is_empty() {
        return Err(parse_err(current_line, "clause not terminated by 0"));
    }
    if clauses.len() != count {
        return Err(parse_err(
            header_line,
            format!("header declares {count} clauses, found {}", clauses.len()),
        ));
    }
    Ok(CnfInstance::new(vars, clauses)?)
}

pub fn write_dimacs(instance: &CnfInstance) -> String {
    let mut out = format!("p cnf {} {}\n", instance.num_vars(), instance.clauses().len());
    for c in instance.clauses() {
        let _ = writeln!(out, "{} {} {} 0", c[0], c[1], c[2]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::BenchError;

    #[test]
    fn stsp_accepts_full_upper_triangle() {
        let strict = read_stsp("3\n4 5\n6\n").unwrap();
        let full = read_stsp("3\n0 4 5\n0 6\n0\n").unwrap();
        assert_eq!(strict, full);
        assert_eq!(strict.cost(2, 1), 6);
    }

    #[test]
    fn atsp_ignores_diagonal() {
        let a = read_atsp("3\n9 1 2\n3 9 4\n5 6 9\n").unwrap();
        assert_eq!(a.cost(0, 0), 0);
        assert_eq!(a.cost(2, 1), 6);
    }

    #[test]
    fn dimacs_errors_carry_lines() {
        let err = read_dimacs("c hi\np cnf 3 1\n1 -2 0\n").unwrap_err();
        assert!(matches!(err, BenchError::Parse { line: 3, .. }), "{err}");
        let err = read_dimacs("p cnf 3 2\n1 2 3 0\n").unwrap_err();
        assert!(matches!(err, BenchError::Parse { line: 1, .. }), "{err}");
        let err = read_dimacs("p cnf 3 1\n1 2\n3 x 0\n").unwrap_err();
        assert!(matches!(err, BenchError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn dimacs_clause_may_span_lines() {
        let cnf = read_dimacs("p cnf 4 2\n1 -2\n3 0 2 3 -4 0\n%\n0\n").unwrap();
        assert_eq!(cnf.clauses(), &[[1, -2, 3], [2, 3, -4]]);
    }
}
