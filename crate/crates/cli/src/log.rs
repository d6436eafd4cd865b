//! Stage log.  Every printed number carries a method tag saying what it
//! rests on.

use std::fmt::Display;
use std::path::Path;

#[derive(Clone, Copy)]
pub enum Tag {
    /// Supplied by the user.
    Input,
    /// Exact computation, no hypothesis.
    Unconditional,
    /// Depends on GRH.
    Grh,
    /// Depends on the Bach (or Belabas) generation bound, hence on GRH.
    Bach,
    /// A model estimate, not a bound.
    Heuristic,
}

impl Tag {
    fn label(self) -> &'static str {
        match self {
            Tag::Input => "[input]",
            Tag::Unconditional => "[unconditional]",
            Tag::Grh => "[GRH-conditional]",
            Tag::Bach => "[bach-bound]",
            Tag::Heuristic => "[heuristic]",
        }
    }
}

#[derive(Default)]
pub struct Log {
    lines: Vec<String>,
}

impl Log {
    pub fn put(&mut self, tag: Tag, key: &str, value: impl Display) {
        self.line(format!("{} {key} = {value}", tag.label()));
    }

    /// A line without a number.
    pub fn note(&mut self, msg: impl Display) {
        self.line(format!("# {msg}"));
    }

    fn line(&mut self, s: String) {
        println!("{s}");
        self.lines.push(s);
    }

    pub fn save(&self, dir: &Path, stage: &str) -> std::io::Result<()> {
        let mut text = self.lines.join("\n");
        text.push('\n');
        std::fs::write(dir.join(format!("{stage}.log")), text)
    }
}
