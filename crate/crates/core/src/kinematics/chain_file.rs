//! Plain-text chain definition files.
//!
//! One revolute joint per line, six whitespace-separated numbers:
//!
//! ```text
//! a  d  alpha  theta0  q_min  q_max
//! ```
//!
//! Lengths are meters, angles radians. `#` starts a comment that runs to the
//! end of the line. Directives start with `@`:
//!
//! - `@name <id>`
//! - `@convention classic|modified` (default `classic`)
//! - `@task xyz|xy` task-space rows used by solvers and metrics (default `xyz`)
//! - `@tool a d alpha theta` fixed transform appended after the last joint,
//!   expressed in the chain's convention

use super::{Convention, DhRow, KinematicChain, TaskSpace};
use crate::error::{Error, Result};

pub fn parse(text: &str) -> Result<KinematicChain> {
    let mut name = String::from("unnamed");
    let mut convention = Convention::Classic;
    let mut task = TaskSpace::Xyz;
    let mut tool = None;
    let mut joints = Vec::new();
    let mut q_min = Vec::new();
    let mut q_max = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::ChainParse { line: line_no, msg };

        if let Some(directive) = line.strip_prefix('@') {
            let mut parts = directive.split_whitespace();
            let key = parts.next().unwrap_or("");
            let args: Vec<&str> = parts.collect();
            match key {
                "name" => {
                    name = args
                        .first()
                        .ok_or_else(|| err("@name needs a value".into()))?
                        .to_string()
                }
                "convention" => {
                    convention = match args.first().copied() {
                        Some("classic") => Convention::Classic,
                        Some("modified") => Convention::Modified,
                        other => return Err(err(format!("unknown convention {other:?}"))),
                    }
                }
                "task" => {
                    task = match args.first().copied() {
                        Some("xyz") => TaskSpace::Xyz,
                        Some("xy") => TaskSpace::Xy,
                        other => return Err(err(format!("unknown task space {other:?}"))),
                    }
                }
                "tool" => {
                    let v = numbers(&args).map_err(err)?;
                    if v.len() != 4 {
                        return Err(err(format!("@tool needs 4 numbers, got {}", v.len())));
                    }
                    tool = Some(DhRow { a: v[0], d: v[1], alpha: v[2], theta0: v[3] });
                }
                other => return Err(err(format!("unknown directive @{other}"))),
            }
            continue;
        }

        let fields: Vec<&str> = line.split_whitespace().collect();
        let v = numbers(&fields).map_err(err)?;
        if v.len() != 6 {
            return Err(err(format!("expected 6 numbers per joint row, got {}", v.len())));
        }
        joints.push(DhRow { a: v[0], d: v[1], alpha: v[2], theta0: v[3] });
        q_min.push(v[4]);
        q_max.push(v[5]);
    }

    KinematicChain::new(name, convention, task, joints, q_min, q_max, tool)
}

fn numbers(fields: &[&str]) -> std::result::Result<Vec<f64>, String> {
    fields
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("not a finite number: `{s}`"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rows_and_directives() {
        let text = "# demo\n@name two\n@task xy\n1 0 0 0 -1 1 # first\n0.5 0 0 0.1 -2 2\n";
        let chain = parse(text).unwrap();
        assert_eq!(chain.name(), "two");
        assert_eq!(chain.dof(), 2);
        assert_eq!(chain.task_space(), TaskSpace::Xy);
        assert_eq!(chain.joints()[1].theta0, 0.1);
        assert_eq!(chain.q_max()[1], 2.0);
    }

    #[test]
    fn rejects_short_rows_with_line_number() {
        let err = parse("@name x\n1 0 0 0 -1\n").unwrap_err();
        match err {
            Error::ChainParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_inverted_limits() {
        assert!(matches!(parse("1 0 0 0 1 -1\n"), Err(Error::InvalidChain(_))));
    }

    #[test]
    fn rejects_empty_chain() {
        assert!(parse("# nothing\n").is_err());
    }

    #[test]
    fn rejects_unknown_directive() {
        assert!(parse("@frobnicate 1\n1 0 0 0 -1 1\n").is_err());
    }
}
