//! Line-oriented query grammar:
//!
//! ```text
//! WATCH "ref" | COUNT "ref"
//! FOCUS "ref"
//! TRACK "target" FROM "ref" TO "ref" [BETWEEN t0 AND t1]
//! ROUTE "ref" THEN "ref" [THEN "ref" ...]
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("query syntax error at byte {pos}: {message}")]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Task {
    Focal { scope: String },
    Panoramic { scope: String },
    Track { from: String, to: String, target: String },
    Hybrid { stops: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub raw: String,
    pub task: Task,
    /// Location references in query order, verbatim.
    pub refs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_window: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_desc: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Int(i64),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'"' {
            let start = i;
            let close = text[i + 1..].find('"').ok_or(ParseError {
                pos: start,
                message: "unterminated string".into(),
            })?;
            out.push((start, Tok::Str(text[i + 1..i + 1 + close].to_string())));
            i += close + 2;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = text[start..i].parse().map_err(|_| ParseError {
                pos: start,
                message: "integer out of range".into(),
            })?;
            out.push((start, Tok::Int(n)));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
                i += 1;
            }
            out.push((start, Tok::Word(text[start..i].to_ascii_uppercase())));
        } else {
            return Err(ParseError {
                pos: i,
                message: format!("unexpected character {:?}", text[i..].chars().next().unwrap()),
            });
        }
    }
    Ok(out)
}

struct Cursor {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Cursor {
    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.0)
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            pos: self.pos(),
            message: message.into(),
        }
    }

    fn peek_word(&self, w: &str) -> bool {
        matches!(self.toks.get(self.at), Some((_, Tok::Word(x))) if x == w)
    }

    fn word(&mut self, w: &str) -> Result<(), ParseError> {
        if self.peek_word(w) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {w}")))
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        match self.toks.get(self.at) {
            Some((_, Tok::Str(s))) if !s.trim().is_empty() => {
                self.at += 1;
                Ok(s.clone())
            }
            Some((_, Tok::Str(_))) => Err(self.err("empty reference")),
            _ => Err(self.err("expected a double-quoted string")),
        }
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        match self.toks.get(self.at) {
            Some((_, Tok::Int(n))) => {
                self.at += 1;
                Ok(*n)
            }
            _ => Err(self.err("expected integer seconds")),
        }
    }

    fn done(&self) -> Result<(), ParseError> {
        if self.at == self.toks.len() {
            Ok(())
        } else {
            Err(self.err("unexpected trailing input"))
        }
    }
}

pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    let mut c = Cursor {
        toks: lex(text)?,
        at: 0,
        end: text.len(),
    };
    let verb = match c.toks.first() {
        Some((_, Tok::Word(w))) => w.clone(),
        Some(_) => return Err(c.err("expected a verb")),
        None => return Err(c.err("empty query")),
    };
    c.at = 1;
    let mut time_window = None;
    let mut target_desc = None;
    let (task, refs) = match verb.as_str() {
        "WATCH" | "COUNT" => {
            let scope = c.string()?;
            (Task::Panoramic { scope: scope.clone() }, vec![scope])
        }
        "FOCUS" => {
            let scope = c.string()?;
            (Task::Focal { scope: scope.clone() }, vec![scope])
        }
        "TRACK" => {
            let target = c.string()?;
            c.word("FROM")?;
            let from = c.string()?;
            c.word("TO")?;
            let to = c.string()?;
            if c.peek_word("BETWEEN") {
                c.at += 1;
                let t0 = c.int()?;
                c.word("AND")?;
                let pos = c.pos();
                let t1 = c.int()?;
                if t1 <= t0 {
                    return Err(ParseError {
                        pos,
                        message: "time window must end after it starts".into(),
                    });
                }
                time_window = Some((t0 as f64, t1 as f64));
            }
            target_desc = Some(target.clone());
            (
                Task::Track {
                    from: from.clone(),
                    to: to.clone(),
                    target,
                },
                vec![from, to],
            )
        }
        "ROUTE" => {
            let mut stops = vec![c.string()?];
            c.word("THEN")?;
            stops.push(c.string()?);
            while c.peek_word("THEN") {
                c.at += 1;
                stops.push(c.string()?);
            }
            (Task::Hybrid { stops: stops.clone() }, stops)
        }
        other => {
            c.at = 0;
            return Err(c.err(format!("unknown verb {other}")));
        }
    };
    c.done()?;
    Ok(Query {
        raw: text.to_string(),
        task,
        refs,
        time_window,
        target_desc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn track_with_two_refs() {
        let q = parse_query(
            r#"TRACK "red umbrella" FROM "North Hall 3F lounge" TO "chemistry lab""#,
        )
        .unwrap();
        assert_eq!(
            q.refs,
            vec!["North Hall 3F lounge", "chemistry lab"]
        );
        assert_eq!(q.target_desc.as_deref(), Some("red umbrella"));
        assert!(matches!(q.task, Task::Track { .. }));
    }

    #[test]
    fn watch_is_panoramic() {
        let q = parse_query(r#"WATCH "assembly room""#).unwrap();
        assert_eq!(q.task, Task::Panoramic { scope: "assembly room".into() });
        assert!(matches!(parse_query(r#"count "x""#).unwrap().task, Task::Panoramic { .. }));
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(parse_query("").unwrap_err().pos, 0);
    }

    #[test]
    fn time_window() {
        let q = parse_query(r#"TRACK "t" FROM "a" TO "b" BETWEEN 10 AND 70"#).unwrap();
        assert_eq!(q.time_window, Some((10.0, 70.0)));
        let e = parse_query(r#"TRACK "t" FROM "a" TO "b" BETWEEN 70 AND 10"#).unwrap_err();
        assert_eq!(e.pos, 41);
    }

    #[test]
    fn route_needs_two_stops() {
        let e = parse_query(r#"ROUTE "a""#).unwrap_err();
        assert_eq!(e.pos, 9);
        let q = parse_query(r#"ROUTE "a" THEN "b" THEN "c""#).unwrap();
        assert_eq!(q.refs.len(), 3);
    }

    #[test]
    fn errors_point_at_the_offending_token() {
        assert_eq!(parse_query(r#"FOCUS "a" extra"#).unwrap_err().pos, 10);
        assert_eq!(parse_query(r#"FOCUS "a"#).unwrap_err().pos, 6);
        assert_eq!(parse_query(r#"JUMP "a""#).unwrap_err().pos, 0);
        assert_eq!(parse_query(r#"TRACK "t" TO "b""#).unwrap_err().pos, 10);
    }
}
