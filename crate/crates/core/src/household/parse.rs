//! Household action grammar.
//!
//! ```text
//! action  := "go" "to" ENTITY
//!          | "take" ENTITY "from" ENTITY
//!          | "put" ENTITY ("in/on" | "in" | "on") ENTITY
//!          | "open" ENTITY | "close" ENTITY | "use" ENTITY
//!          | ("heat" | "clean" | "cool") ENTITY "with" ENTITY
//! ENTITY  := WORD+ NUMBER
//! ```
//!
//! Words are lowercase ASCII letters; numbers are positive decimal integers.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::mdp::MalformedAction;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HouseholdAction {
    GoTo(String),
    Take { object: String, from: String },
    Put { object: String, to: String },
    Open(String),
    Close(String),
    Heat { object: String, with: String },
    Clean { object: String, with: String },
    Cool { object: String, with: String },
    Use(String),
}

impl HouseholdAction {
    pub fn render(&self) -> String {
        match self {
            HouseholdAction::GoTo(r) => format!("go to {r}"),
            HouseholdAction::Take { object, from } => format!("take {object} from {from}"),
            HouseholdAction::Put { object, to } => format!("put {object} in/on {to}"),
            HouseholdAction::Open(r) => format!("open {r}"),
            HouseholdAction::Close(r) => format!("close {r}"),
            HouseholdAction::Heat { object, with } => format!("heat {object} with {with}"),
            HouseholdAction::Clean { object, with } => format!("clean {object} with {with}"),
            HouseholdAction::Cool { object, with } => format!("cool {object} with {with}"),
            HouseholdAction::Use(r) => format!("use {r}"),
        }
    }
}

impl fmt::Display for HouseholdAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

struct Tok<'a> {
    text: &'a str,
    span: Range<usize>,
}

fn tokenize(input: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in input.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Tok { text: &input[s..i], span: s..i });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok { text: &input[s..], span: s..input.len() });
    }
    out
}

fn is_word(t: &str) -> bool {
    !t.is_empty() && t.bytes().all(|b| b.is_ascii_lowercase())
}

fn is_number(t: &str) -> bool {
    !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit()) && !t.starts_with('0')
}

struct Cursor<'a, 'b> {
    input: &'a str,
    toks: &'b [Tok<'a>],
    pos: usize,
}

impl<'a, 'b> Cursor<'a, 'b> {
    fn end_span(&self) -> Range<usize> {
        self.input.len()..self.input.len()
    }

    fn err_here(&self, msg: &str) -> MalformedAction {
        let span = self.toks.get(self.pos).map(|t| t.span.clone()).unwrap_or_else(|| self.end_span());
        MalformedAction::new(msg, span)
    }

    fn keyword(&mut self, options: &[&str]) -> Result<&'a str, MalformedAction> {
        match self.toks.get(self.pos) {
            Some(t) if options.contains(&t.text) => {
                self.pos += 1;
                Ok(t.text)
            }
            _ => Err(self.err_here(&format!("expected `{}`", options.join("` or `")))),
        }
    }

    fn entity(&mut self, stop: &[&str]) -> Result<String, MalformedAction> {
        let start = self.pos;
        while let Some(t) = self.toks.get(self.pos) {
            if is_word(t.text) && !stop.contains(&t.text) {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(self.err_here("expected an entity name"));
        }
        match self.toks.get(self.pos) {
            Some(t) if is_number(t.text) => {
                self.pos += 1;
                let words: Vec<&str> = self.toks[start..self.pos].iter().map(|t| t.text).collect();
                Ok(words.join(" "))
            }
            _ => Err(self.err_here("expected an instance number")),
        }
    }

    fn finish(&self) -> Result<(), MalformedAction> {
        if self.pos < self.toks.len() {
            Err(self.err_here("unexpected trailing text"))
        } else {
            Ok(())
        }
    }
}

/// Parses one household command.
pub fn parse_household_action(text: &str) -> Result<HouseholdAction, MalformedAction> {
    let toks = tokenize(text);
    let mut c = Cursor { input: text, toks: &toks, pos: 0 };
    let Some(verb) = toks.first() else {
        return Err(MalformedAction::new("empty action", 0..text.len()));
    };
    c.pos = 1;
    let action = match verb.text {
        "go" => {
            c.keyword(&["to"])?;
            HouseholdAction::GoTo(c.entity(&[])?)
        }
        "take" => {
            let object = c.entity(&["from"])?;
            c.keyword(&["from"])?;
            HouseholdAction::Take { object, from: c.entity(&[])? }
        }
        "put" => {
            let object = c.entity(&["in", "on"])?;
            c.keyword(&["in/on", "in", "on"])?;
            HouseholdAction::Put { object, to: c.entity(&[])? }
        }
        "open" => HouseholdAction::Open(c.entity(&[])?),
        "close" => HouseholdAction::Close(c.entity(&[])?),
        "use" => HouseholdAction::Use(c.entity(&[])?),
        "heat" | "clean" | "cool" => {
            let object = c.entity(&["with"])?;
            c.keyword(&["with"])?;
            let with = c.entity(&[])?;
            match verb.text {
                "heat" => HouseholdAction::Heat { object, with },
                "clean" => HouseholdAction::Clean { object, with },
                _ => HouseholdAction::Cool { object, with },
            }
        }
        _ => return Err(MalformedAction::new("unknown command", verb.span.clone())),
    };
    c.finish()?;
    Ok(action)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_production() {
        let cases = [
            ("go to diningtable 1", HouseholdAction::GoTo("diningtable 1".into())),
            (
                "take mug 1 from diningtable 1",
                HouseholdAction::Take { object: "mug 1".into(), from: "diningtable 1".into() },
            ),
            (
                "put mug 1 in/on sidetable 1",
                HouseholdAction::Put { object: "mug 1".into(), to: "sidetable 1".into() },
            ),
            ("open drawer 1", HouseholdAction::Open("drawer 1".into())),
            ("close drawer 1", HouseholdAction::Close("drawer 1".into())),
            (
                "heat mug 1 with microwave 1",
                HouseholdAction::Heat { object: "mug 1".into(), with: "microwave 1".into() },
            ),
            (
                "clean spatula 2 with sinkbasin 1",
                HouseholdAction::Clean { object: "spatula 2".into(), with: "sinkbasin 1".into() },
            ),
            (
                "cool apple 1 with fridge 1",
                HouseholdAction::Cool { object: "apple 1".into(), with: "fridge 1".into() },
            ),
            ("use desklamp 1", HouseholdAction::Use("desklamp 1".into())),
        ];
        for (text, want) in cases {
            assert_eq!(parse_household_action(text).unwrap(), want, "{text}");
            assert_eq!(want.render(), text);
        }
    }

    #[test]
    fn accepts_single_preposition_put() {
        assert_eq!(
            parse_household_action("put mug 1 on sidetable 1").unwrap().render(),
            "put mug 1 in/on sidetable 1"
        );
    }

    #[test]
    fn rejects_outside_grammar_with_span() {
        let e = parse_household_action("jump over sofa 1").unwrap_err();
        assert_eq!(e.span, 0..4);
        let e = parse_household_action("take mug from table 1").unwrap_err();
        assert_eq!(&"take mug from table 1"[e.span.clone()], "from");
        let e = parse_household_action("go to drawer 1 now").unwrap_err();
        assert_eq!(&"go to drawer 1 now"[e.span.clone()], "now");
        assert!(parse_household_action("").is_err());
        assert!(parse_household_action("go to drawer 01").is_err());
    }
}
