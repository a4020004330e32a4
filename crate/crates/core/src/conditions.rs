//! Absolute and relational conditions over an intermediate answer.
//!
//! Expression grammar (slot and element numbers are 1-based):
//!
//! ```text
//! condition   := absolute | relational
//! absolute    := "slot(" INT ")" "=" ( "elem(" INT ")" | "correct" )
//! relational  := "val(slot(" INT "))" OP "val(slot(" INT "))"
//!              | "pos(elem(" INT "))" OP "pos(elem(" INT "))"
//!              | "adjacent(elem(" INT "), elem(" INT "))"
//!              | "not_adjacent(elem(" INT "), elem(" INT "))"
//! OP          := "<" | "<=" | "=" | "!=" | ">=" | ">"
//! ```
//!
//! Any operand that refers to an empty slot or an unplaced element makes the
//! condition false.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::answer::{ElementId, IntermediateAnswer};
use crate::manifest::QuestionManifest;

/// Conditions are stored as bits of a `u32`.
pub const MAX_CONDITIONS: usize = 32;

pub type Stage = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConditionError {
    #[error("syntax error at position {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("unknown reference: {0}")]
    UnknownReference(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionKind {
    Absolute,
    Relational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CompareOp {
    fn holds<T: PartialOrd>(self, a: T, b: T) -> bool {
        match self {
            CompareOp::Lt => a < b,
            CompareOp::Le => a <= b,
            CompareOp::Eq => a == b,
            CompareOp::Ne => a != b,
            CompareOp::Ge => a >= b,
            CompareOp::Gt => a > b,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Ge => ">=",
            CompareOp::Gt => ">",
        }
    }
}

/// Parsed condition expression. Slot numbers are 1-based as written.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConditionExpr {
    SlotIs { slot: usize, element: ElementId },
    SlotCorrect { slot: usize },
    CompareValues { left: usize, op: CompareOp, right: usize },
    ComparePositions { left: ElementId, op: CompareOp, right: ElementId },
    Adjacent { a: ElementId, b: ElementId },
    NotAdjacent { a: ElementId, b: ElementId },
}

impl ConditionExpr {
    pub fn kind(&self) -> ConditionKind {
        match self {
            ConditionExpr::SlotIs { .. } | ConditionExpr::SlotCorrect { .. } => {
                ConditionKind::Absolute
            }
            _ => ConditionKind::Relational,
        }
    }

    pub fn slots(&self) -> Vec<usize> {
        match *self {
            ConditionExpr::SlotIs { slot, .. } | ConditionExpr::SlotCorrect { slot } => vec![slot],
            ConditionExpr::CompareValues { left, right, .. } => vec![left, right],
            _ => Vec::new(),
        }
    }

    pub fn elements(&self) -> Vec<ElementId> {
        match *self {
            ConditionExpr::SlotIs { element, .. } => vec![element],
            ConditionExpr::ComparePositions { left, right, .. } => vec![left, right],
            ConditionExpr::Adjacent { a, b } | ConditionExpr::NotAdjacent { a, b } => vec![a, b],
            _ => Vec::new(),
        }
    }

    /// Checks that every slot and element the expression mentions is declared.
    pub fn check_references(
        &self,
        slot_count: usize,
        is_element: impl Fn(ElementId) -> bool,
    ) -> Result<(), ConditionError> {
        for slot in self.slots() {
            if slot == 0 || slot > slot_count {
                return Err(ConditionError::UnknownReference(format!(
                    "slot({slot}) (question has {slot_count} slots)"
                )));
            }
        }
        for element in self.elements() {
            if !is_element(element) {
                return Err(ConditionError::UnknownReference(format!("elem({element})")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for ConditionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionExpr::SlotIs { slot, element } => write!(f, "slot({slot}) = elem({element})"),
            ConditionExpr::SlotCorrect { slot } => write!(f, "slot({slot}) = correct"),
            ConditionExpr::CompareValues { left, op, right } => {
                write!(f, "val(slot({left})) {} val(slot({right}))", op.symbol())
            }
            ConditionExpr::ComparePositions { left, op, right } => {
                write!(f, "pos(elem({left})) {} pos(elem({right}))", op.symbol())
            }
            ConditionExpr::Adjacent { a, b } => write!(f, "adjacent(elem({a}), elem({b}))"),
            ConditionExpr::NotAdjacent { a, b } => write!(f, "not_adjacent(elem({a}), elem({b}))"),
        }
    }
}

impl FromStr for ConditionExpr {
    type Err = ConditionError;

    /// Syntax only; references are checked against a manifest separately.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Parser::new(s).parse()
    }
}

impl Serialize for ConditionExpr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ConditionExpr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// One designer-specified condition as stored in a question manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub id: u32,
    pub kind: ConditionKind,
    pub expr: ConditionExpr,
    #[serde(default)]
    pub label: String,
}

// --- parser ---------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Int(u32),
    LParen,
    RParen,
    Comma,
    Op(CompareOp),
    End,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "`{s}`"),
            Token::Int(n) => write!(f, "`{n}`"),
            Token::LParen => f.write_str("`(`"),
            Token::RParen => f.write_str("`)`"),
            Token::Comma => f.write_str("`,`"),
            Token::Op(op) => write!(f, "`{}`", op.symbol()),
            Token::End => f.write_str("end of input"),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    /// Returns the next token and the position it starts at.
    fn next_token(&mut self) -> Result<(Token, usize), ConditionError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[self.pos..];
        let Some(c) = rest.chars().next() else {
            return Ok((Token::End, start));
        };
        let two = rest.get(..2);
        let (tok, len) = match c {
            '(' => (Token::LParen, 1),
            ')' => (Token::RParen, 1),
            ',' => (Token::Comma, 1),
            '<' if two == Some("<=") => (Token::Op(CompareOp::Le), 2),
            '>' if two == Some(">=") => (Token::Op(CompareOp::Ge), 2),
            '!' if two == Some("!=") => (Token::Op(CompareOp::Ne), 2),
            '<' => (Token::Op(CompareOp::Lt), 1),
            '>' => (Token::Op(CompareOp::Gt), 1),
            '=' => (Token::Op(CompareOp::Eq), 1),
            c if c.is_ascii_digit() => {
                let len = rest.bytes().take_while(u8::is_ascii_digit).count();
                let n = rest[..len].parse().map_err(|_| ConditionError::Syntax {
                    position: start,
                    expected: "an integer below 2^32".into(),
                    found: format!("`{}`", &rest[..len]),
                })?;
                (Token::Int(n), len)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let len = rest
                    .bytes()
                    .take_while(|b| b.is_ascii_alphanumeric() || *b == b'_')
                    .count();
                (Token::Ident(rest[..len].to_string()), len)
            }
            other => {
                return Err(ConditionError::Syntax {
                    position: start,
                    expected: "a token".into(),
                    found: format!("`{other}`"),
                })
            }
        };
        self.pos += len;
        Ok((tok, start))
    }

    fn expect(&mut self, want: Token, expected: &str) -> Result<(), ConditionError> {
        let (tok, at) = self.next_token()?;
        if tok == want {
            Ok(())
        } else {
            Err(syntax(at, expected, &tok))
        }
    }

    fn keyword(&mut self, word: &str) -> Result<(), ConditionError> {
        self.expect(Token::Ident(word.into()), &format!("`{word}`"))
    }

    fn int(&mut self) -> Result<u32, ConditionError> {
        match self.next_token()? {
            (Token::Int(n), _) => Ok(n),
            (tok, at) => Err(syntax(at, "an integer", &tok)),
        }
    }

    fn op(&mut self) -> Result<CompareOp, ConditionError> {
        match self.next_token()? {
            (Token::Op(op), _) => Ok(op),
            (tok, at) => Err(syntax(at, "a comparison operator", &tok)),
        }
    }

    /// `name(INT)`
    fn call_int(&mut self, name: &str) -> Result<u32, ConditionError> {
        self.keyword(name)?;
        self.expect(Token::LParen, "`(`")?;
        let n = self.int()?;
        self.expect(Token::RParen, "`)`")?;
        Ok(n)
    }

    /// `outer(inner(INT))`
    fn wrapped(&mut self, outer: &str, inner: &str) -> Result<u32, ConditionError> {
        self.keyword(outer)?;
        self.expect(Token::LParen, "`(`")?;
        let n = self.call_int(inner)?;
        self.expect(Token::RParen, "`)`")?;
        Ok(n)
    }

    fn parse(mut self) -> Result<ConditionExpr, ConditionError> {
        let saved = self.pos;
        let (head, at) = self.next_token()?;
        self.pos = saved;
        let expr = match &head {
            Token::Ident(w) if w == "slot" => {
                let slot = self.call_int("slot")? as usize;
                self.expect(Token::Op(CompareOp::Eq), "`=`")?;
                let saved = self.pos;
                match self.next_token()? {
                    (Token::Ident(w), _) if w == "correct" => ConditionExpr::SlotCorrect { slot },
                    (Token::Ident(w), _) if w == "elem" => {
                        self.pos = saved;
                        let element = ElementId(self.call_int("elem")?);
                        ConditionExpr::SlotIs { slot, element }
                    }
                    (tok, at) => return Err(syntax(at, "`elem` or `correct`", &tok)),
                }
            }
            Token::Ident(w) if w == "val" => {
                let left = self.wrapped("val", "slot")? as usize;
                let op = self.op()?;
                let right = self.wrapped("val", "slot")? as usize;
                ConditionExpr::CompareValues { left, op, right }
            }
            Token::Ident(w) if w == "pos" => {
                let left = ElementId(self.wrapped("pos", "elem")?);
                let op = self.op()?;
                let right = ElementId(self.wrapped("pos", "elem")?);
                ConditionExpr::ComparePositions { left, op, right }
            }
            Token::Ident(w) if w == "adjacent" || w == "not_adjacent" => {
                let negated = w == "not_adjacent";
                self.next_token()?;
                self.expect(Token::LParen, "`(`")?;
                let a = ElementId(self.call_int("elem")?);
                self.expect(Token::Comma, "`,`")?;
                let b = ElementId(self.call_int("elem")?);
                self.expect(Token::RParen, "`)`")?;
                if negated {
                    ConditionExpr::NotAdjacent { a, b }
                } else {
                    ConditionExpr::Adjacent { a, b }
                }
            }
            tok => {
                return Err(syntax(
                    at,
                    "`slot`, `val`, `pos`, `adjacent` or `not_adjacent`",
                    tok,
                ))
            }
        };
        match self.next_token()? {
            (Token::End, _) => Ok(expr),
            (tok, at) => Err(syntax(at, "end of input", &tok)),
        }
    }
}

fn syntax(position: usize, expected: &str, found: &Token) -> ConditionError {
    ConditionError::Syntax {
        position,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

/// Parses `text` and validates its references against `manifest`.
pub fn parse_condition(
    text: &str,
    manifest: &QuestionManifest,
) -> Result<ConditionExpr, ConditionError> {
    let expr: ConditionExpr = text.parse()?;
    expr.check_references(manifest.slot_count, |e| manifest.has_element(e))?;
    Ok(expr)
}

// --- evaluation -------------------------------------------------------------

/// Fixed-length fulfilment bit string; bit `i` is condition `i + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConditionArray {
    bits: u32,
    len: u8,
}

impl ConditionArray {
    pub fn new(len: usize) -> Self {
        assert!(len <= MAX_CONDITIONS, "at most {MAX_CONDITIONS} conditions");
        Self {
            bits: 0,
            len: len as u8,
        }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Zero-based.
    pub fn get(&self, index: usize) -> bool {
        index < self.len() && self.bits & (1 << index) != 0
    }

    pub fn set(&mut self, index: usize, value: bool) {
        assert!(index < self.len());
        if value {
            self.bits |= 1 << index;
        } else {
            self.bits &= !(1 << index);
        }
    }

    pub fn stage(&self) -> Stage {
        self.bits.count_ones() as Stage
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }
}

impl fmt::Display for ConditionArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in self.iter() {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for ConditionArray {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() > MAX_CONDITIONS {
            return Err(format!("condition array longer than {MAX_CONDITIONS}"));
        }
        let mut out = ConditionArray::new(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => out.set(i, true),
                other => return Err(format!("invalid bit `{other}`")),
            }
        }
        Ok(out)
    }
}

impl Serialize for ConditionArray {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ConditionArray {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Evaluates one condition. Slots are 1-based in `expr`.
pub fn eval_condition(
    expr: &ConditionExpr,
    answer: &IntermediateAnswer,
    manifest: &QuestionManifest,
) -> bool {
    let value_at = |slot: usize| {
        answer
            .get(slot - 1)
            .and_then(|e| manifest.element_value(e))
    };
    let pos = |e: ElementId| answer.position_of(e);
    match *expr {
        ConditionExpr::SlotIs { slot, element } => answer.get(slot - 1) == Some(element),
        ConditionExpr::SlotCorrect { slot } => match answer.get(slot - 1) {
            Some(e) => manifest.correct_answer.get(slot - 1) == Some(e),
            None => false,
        },
        ConditionExpr::CompareValues { left, op, right } => {
            match (value_at(left), value_at(right)) {
                (Some(a), Some(b)) => op.holds(a, b),
                _ => false,
            }
        }
        ConditionExpr::ComparePositions { left, op, right } => match (pos(left), pos(right)) {
            (Some(a), Some(b)) => op.holds(a, b),
            _ => false,
        },
        ConditionExpr::Adjacent { a, b } => match (pos(a), pos(b)) {
            (Some(pa), Some(pb)) => pa.abs_diff(pb) == 1,
            _ => false,
        },
        ConditionExpr::NotAdjacent { a, b } => match (pos(a), pos(b)) {
            (Some(pa), Some(pb)) => pa.abs_diff(pb) != 1,
            _ => false,
        },
    }
}

/// Condition array and stage of `answer` under the manifest's conditions.
pub fn eval_all(answer: &IntermediateAnswer, manifest: &QuestionManifest) -> (ConditionArray, Stage) {
    let mut array = ConditionArray::new(manifest.conditions.len());
    for (i, spec) in manifest.conditions.iter().enumerate() {
        array.set(i, eval_condition(&spec.expr, answer, manifest));
    }
    let stage = array.stage();
    (array, stage)
}

pub fn stage_of(answer: &IntermediateAnswer, manifest: &QuestionManifest) -> Stage {
    eval_all(answer, manifest).1
}
