//! State and model expressions: `bell:phi+`, `werner:0.35`,
//! `random:2x2[:rank=k][:seed=n]`, `file:path.json`, `prbox`, `classical:n`,
//! `gbit`.

use std::fmt;
use std::path::PathBuf;

use infoinv::matcore::DimSplit;
use infoinv::qstate::BellKind;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Bell(BellKind),
    Werner(f64),
    Random {
        split: DimSplit,
        rank: Option<usize>,
        seed: Option<u64>,
    },
    File(PathBuf),
    PrBox,
    Classical(usize),
    Gbit,
}

impl Expr {
    pub fn is_model(&self) -> bool {
        matches!(self, Expr::Classical(_) | Expr::Gbit)
    }
}

/// Parse failure pointing at a byte offset of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub input: String,
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let caret = self.input[..self.pos.min(self.input.len())].chars().count();
        write!(
            f,
            "{} (at position {})\n  {}\n  {}^",
            self.msg,
            self.pos,
            self.input,
            " ".repeat(caret)
        )
    }
}

impl std::error::Error for ParseError {}

struct Cursor<'a> {
    input: &'a str,
}

impl Cursor<'_> {
    fn err(&self, pos: usize, msg: impl Into<String>) -> ParseError {
        ParseError {
            input: self.input.to_string(),
            pos,
            msg: msg.into(),
        }
    }
}

const KINDS: &str = "bell, werner, random, file, prbox, classical or gbit";

pub fn parse(input: &str) -> Result<Expr, ParseError> {
    let cur = Cursor { input };
    let (head, rest) = match input.find(':') {
        Some(i) => (&input[..i], Some((i + 1, &input[i + 1..]))),
        None => (input, None),
    };
    let require = |what: &str| rest.ok_or_else(|| cur.err(input.len(), format!("'{head}' needs an argument: {what}")));
    let no_args = |e: Expr| match rest {
        None => Ok(e),
        Some((pos, _)) => Err(cur.err(pos - 1, format!("'{head}' takes no arguments"))),
    };
    match head {
        "bell" => {
            let (pos, arg) = require("one of phi+, phi-, psi+, psi-")?;
            arg.parse().map(Expr::Bell).map_err(|_| {
                cur.err(
                    pos,
                    format!("unknown Bell state '{arg}' (expected phi+, phi-, psi+ or psi-)"),
                )
            })
        }
        "werner" => {
            let (pos, arg) = require("a mixing parameter in [0, 1]")?;
            let p: f64 = arg
                .parse()
                .map_err(|_| cur.err(pos, format!("expected a number, found '{arg}'")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(cur.err(pos, format!("Werner parameter must lie in [0, 1], got {arg}")));
            }
            Ok(Expr::Werner(p))
        }
        "random" => {
            let (pos, arg) = require("dimensions such as 2x2")?;
            let mut parts = arg.split(':');
            let dims = parts.next().unwrap_or("");
            let split = parse_dims(&cur, pos, dims)?;
            let mut offset = pos + dims.len() + 1;
            let (mut rank, mut seed) = (None, None);
            for opt in parts {
                let (key, value) = opt
                    .split_once('=')
                    .ok_or_else(|| cur.err(offset, format!("expected key=value, found '{opt}'")))?;
                let vpos = offset + key.len() + 1;
                match key {
                    "rank" => {
                        let k: usize = value
                            .parse()
                            .map_err(|_| cur.err(vpos, format!("expected a rank, found '{value}'")))?;
                        if k == 0 || k > split.total() {
                            return Err(cur.err(vpos, format!("rank must lie in 1..={}, got {k}", split.total())));
                        }
                        rank = Some(k);
                    }
                    "seed" => {
                        seed = Some(
                            value
                                .parse()
                                .map_err(|_| cur.err(vpos, format!("expected a seed, found '{value}'")))?,
                        );
                    }
                    _ => return Err(cur.err(offset, format!("unknown option '{key}' (expected rank or seed)"))),
                }
                offset += opt.len() + 1;
            }
            Ok(Expr::Random { split, rank, seed })
        }
        "file" => {
            let (pos, arg) = require("a path")?;
            if arg.is_empty() {
                return Err(cur.err(pos, "empty path"));
            }
            Ok(Expr::File(PathBuf::from(arg)))
        }
        "classical" => {
            let (pos, arg) = require("a number of outcomes")?;
            let n: usize = arg
                .parse()
                .map_err(|_| cur.err(pos, format!("expected a count, found '{arg}'")))?;
            if n < 2 {
                return Err(cur.err(pos, format!("a classical system needs at least 2 outcomes, got {n}")));
            }
            Ok(Expr::Classical(n))
        }
        "prbox" => no_args(Expr::PrBox),
        "gbit" => no_args(Expr::Gbit),
        _ => Err(cur.err(0, format!("unknown expression kind '{head}' (expected {KINDS})"))),
    }
}

fn parse_dims(cur: &Cursor<'_>, pos: usize, dims: &str) -> Result<DimSplit, ParseError> {
    let (a, b) = dims
        .split_once('x')
        .ok_or_else(|| cur.err(pos, format!("expected dimensions like 2x2, found '{dims}'")))?;
    let da: usize = a
        .parse()
        .map_err(|_| cur.err(pos, format!("expected a dimension, found '{a}'")))?;
    let bpos = pos + a.len() + 1;
    let db: usize = b
        .parse()
        .map_err(|_| cur.err(bpos, format!("expected a dimension, found '{b}'")))?;
    if da == 0 || db == 0 || da * db > 16 {
        return Err(cur.err(
            pos,
            format!("dimensions must be positive with a product of at most 16, got {dims}"),
        ));
    }
    Ok(DimSplit::new(da, db).expect("checked positive"))
}
