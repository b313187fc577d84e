//! Step files for scripted simulation.
//!
//! One step per line: a transition name, bare or double-quoted, followed by
//! zero or more `var=value` pairs fixing part of the binding. Values are bare
//! or quoted constant names, or pool values `T#i`. `//` starts a comment.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StepError {
    #[error("{file}:{line}: {msg}")]
    Syntax { file: String, line: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepValue {
    Named(String),
    Pool(String, u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub line: usize,
    pub transition: String,
    pub fixed: Vec<(String, StepValue)>,
}

fn words(line: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut any = false;
    for c in line.chars() {
        match c {
            '"' => {
                quoted = !quoted;
                any = true;
            }
            c if c.is_whitespace() && !quoted => {
                if any {
                    out.push(std::mem::take(&mut cur));
                    any = false;
                }
            }
            c => {
                cur.push(c);
                any = true;
            }
        }
    }
    if quoted {
        return Err("unterminated quote".into());
    }
    if any {
        out.push(cur);
    }
    Ok(out)
}

fn value(text: &str) -> StepValue {
    if let Some((ty, i)) = text.split_once('#') {
        if let Ok(i) = i.parse() {
            return StepValue::Pool(ty.to_string(), i);
        }
    }
    StepValue::Named(text.to_string())
}

pub fn parse_steps(file: &str, src: &str) -> Result<Vec<Step>, StepError> {
    let mut steps = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split("//").next().unwrap_or("");
        let err = |msg: String| StepError::Syntax { file: file.to_string(), line: i + 1, msg };
        let ws = words(line).map_err(err)?;
        let Some((name, rest)) = ws.split_first() else { continue };
        let mut fixed = Vec::new();
        for w in rest {
            let (var, val) = w.split_once('=').ok_or_else(|| err(format!("expected `var=value`, found `{w}`")))?;
            if var.is_empty() || val.is_empty() {
                return Err(err(format!("expected `var=value`, found `{w}`")));
            }
            fixed.push((var.to_string(), value(val)));
        }
        steps.push(Step { line: i + 1, transition: name.clone(), fixed });
    }
    Ok(steps)
}
