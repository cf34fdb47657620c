//! formlang v1: a small text syntax for tuples of quadratic forms.
//!
//! ```text
//! text  := ['@d=' integer] tuple
//! tuple := form (';' form)*
//! form  := '0' | ['-'] term (('+' | '-') term)*
//! term  := [coef '*'] var ('*' var | '^2')
//! coef  := integer | integer '/' integer
//! var   := 'x' index            (1-based)
//! ```
//!
//! Whitespace between tokens is ignored. The dimension is the largest
//! variable index unless declared with `@d=k`. Like terms are combined.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::forms::{FormTuple, QuadraticForm};
use crate::linalg::{format_rat, Rat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    SyntaxError { offset: usize, message: String },
    #[error("term at byte {offset} does not have degree 2")]
    DegreeError { offset: usize },
    #[error("unknown variable x{index} at byte {offset}")]
    UnknownVariable { offset: usize, index: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            Self::SyntaxError { offset, .. } | Self::DegreeError { offset } | Self::UnknownVariable { offset, .. } => {
                *offset
            }
        }
    }
}

fn syntax(offset: usize, message: &str) -> ParseError {
    ParseError::SyntaxError { offset, message: message.to_string() }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Var(usize),
    Slash,
    Star,
    Caret,
    Plus,
    Minus,
    Semi,
}

fn lex(text: &str, start: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = start;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            b'/' => Some(Tok::Slash),
            b'*' => Some(Tok::Star),
            b'^' => Some(Tok::Caret),
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, i));
            i += 1;
        } else if c.is_ascii_digit() {
            let s = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            out.push((Tok::Int(text[s..i].parse().expect("digits")), s));
        } else if c == b'x' {
            let s = i;
            i += 1;
            let ds = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            if ds == i {
                return Err(syntax(s, "expected a variable index after 'x'"));
            }
            let index = text[ds..i].parse::<usize>().map_err(|_| syntax(s, "variable index too large"))?;
            if index == 0 {
                return Err(ParseError::UnknownVariable { offset: s, index });
            }
            out.push((Tok::Var(index), s));
        } else {
            return Err(syntax(i, &format!("unexpected character {:?}", text[i..].chars().next().unwrap())));
        }
    }
    Ok(out)
}

struct Term {
    coef: Rat,
    i: usize,
    j: usize,
    var_offsets: [usize; 2],
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn at_term_end(&self) -> bool {
        matches!(self.peek(), None | Some(Tok::Plus | Tok::Minus | Tok::Semi))
    }

    fn var(&mut self) -> Result<(usize, usize), ParseError> {
        match self.bump() {
            Some((Tok::Var(k), o)) => Ok((k, o)),
            Some((_, o)) => Err(syntax(o, "expected a variable")),
            None => Err(syntax(self.end, "expected a variable")),
        }
    }

    /// Returns `None` for a lone integer `0`.
    fn term(&mut self, negative: bool) -> Result<Option<Term>, ParseError> {
        let offset = self.offset();
        let mut coef = Rat::one();
        if let Some(Tok::Int(_)) = self.peek() {
            let Some((Tok::Int(p), _)) = self.bump() else { unreachable!() };
            let mut c = Rat::from_integer(p);
            if self.peek() == Some(&Tok::Slash) {
                self.bump();
                match self.bump() {
                    Some((Tok::Int(q), o)) => {
                        if q.is_zero() {
                            return Err(syntax(o, "zero denominator"));
                        }
                        c /= Rat::from_integer(q);
                    }
                    Some((_, o)) => return Err(syntax(o, "expected a denominator")),
                    None => return Err(syntax(self.end, "expected a denominator")),
                }
            }
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                }
                Some(Tok::Var(_)) => return Err(syntax(self.offset(), "implicit multiplication")),
                _ if self.at_term_end() => {
                    if c.is_zero() {
                        return Ok(None);
                    }
                    return Err(ParseError::DegreeError { offset });
                }
                _ => return Err(syntax(self.offset(), "expected '*'")),
            }
            coef = c;
        }
        let (i, oi) = self.var()?;
        let (j, oj) = match self.peek() {
            Some(Tok::Star) => {
                self.bump();
                self.var()?
            }
            Some(Tok::Caret) => {
                self.bump();
                match self.bump() {
                    Some((Tok::Int(e), _)) if e == BigInt::from(2) => (i, oi),
                    Some((Tok::Int(_), _)) => return Err(ParseError::DegreeError { offset }),
                    Some((_, o)) => return Err(syntax(o, "expected an exponent")),
                    None => return Err(syntax(self.end, "expected an exponent")),
                }
            }
            _ if self.at_term_end() => return Err(ParseError::DegreeError { offset }),
            Some(Tok::Var(_)) => return Err(syntax(self.offset(), "implicit multiplication")),
            _ => return Err(syntax(self.offset(), "unexpected token")),
        };
        match self.peek() {
            Some(Tok::Star | Tok::Caret) => return Err(ParseError::DegreeError { offset }),
            Some(Tok::Var(_)) => return Err(syntax(self.offset(), "implicit multiplication")),
            Some(Tok::Int(_) | Tok::Slash) => return Err(syntax(self.offset(), "unexpected token")),
            _ => {}
        }
        if negative {
            coef = -coef;
        }
        Ok(Some(Term { coef, i, j, var_offsets: [oi, oj] }))
    }

    /// A form as a list of terms; an empty list is the zero form.
    fn form(&mut self) -> Result<Vec<Term>, ParseError> {
        let start = self.offset();
        let mut negative = false;
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            negative = true;
        }
        if matches!(self.peek(), None | Some(Tok::Semi)) {
            return Err(syntax(self.offset(), "expected a term"));
        }
        let first = self.term(negative)?;
        let Some(first) = first else {
            // "0" is only valid as the entire form.
            if negative || !matches!(self.peek(), None | Some(Tok::Semi)) {
                return Err(ParseError::DegreeError { offset: start });
            }
            return Ok(Vec::new());
        };
        let mut terms = vec![first];
        loop {
            match self.peek() {
                Some(Tok::Plus) | Some(Tok::Minus) => {
                    let neg = self.peek() == Some(&Tok::Minus);
                    self.bump();
                    let o = self.offset();
                    match self.term(neg)? {
                        Some(t) => terms.push(t),
                        None => return Err(ParseError::DegreeError { offset: o }),
                    }
                }
                _ => return Ok(terms),
            }
        }
    }
}

/// Parses formlang v1. `declared_d` acts like an `@d=` header.
pub fn parse_tuple(text: &str, declared_d: Option<usize>) -> Result<FormTuple, ParseError> {
    let bytes = text.as_bytes();
    let mut start = 0;
    while start < bytes.len() && bytes[start].is_ascii_whitespace() {
        start += 1;
    }
    let mut header = None;
    if text[start..].starts_with("@d=") {
        let s = start + 3;
        let mut e = s;
        while e < bytes.len() && bytes[e].is_ascii_digit() {
            e += 1;
        }
        let d = text[s..e].parse::<usize>().map_err(|_| syntax(s, "expected the dimension after '@d='"))?;
        if d == 0 {
            return Err(syntax(s, "dimension must be positive"));
        }
        header = Some((d, start));
        start = e;
    }
    let declared = match (header, declared_d) {
        (Some((h, o)), Some(a)) if h != a => return Err(syntax(o, "conflicting dimension declarations")),
        (Some((h, _)), _) => Some(h),
        (None, a) => a,
    };
    let toks = lex(text, start)?;
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let mut forms = vec![p.form()?];
    while let Some(t) = p.peek() {
        if *t == Tok::Semi {
            p.bump();
            forms.push(p.form()?);
        } else {
            return Err(syntax(p.offset(), "expected '+', '-' or ';'"));
        }
    }
    let max_index = forms.iter().flatten().map(|t| t.i.max(t.j)).max().unwrap_or(0);
    let d = match declared {
        Some(d) => {
            if let Some((t, k)) = forms.iter().flatten().find_map(|t| {
                if t.i > d {
                    Some((t.var_offsets[0], t.i))
                } else if t.j > d {
                    Some((t.var_offsets[1], t.j))
                } else {
                    None
                }
            }) {
                return Err(ParseError::UnknownVariable { offset: t, index: k });
            }
            d
        }
        None if max_index == 0 => return Err(syntax(0, "cannot infer the dimension; add '@d=k'")),
        None => max_index,
    };
    let forms = forms
        .iter()
        .map(|terms| {
            QuadraticForm::from_terms(d, &terms.iter().map(|t| (t.i - 1, t.j - 1, t.coef.clone())).collect::<Vec<_>>())
        })
        .collect();
    Ok(FormTuple::new(d, forms).expect("parsed tuple is well formed"))
}

/// Either formlang or the JSON tuple format (detected by a leading '{').
pub fn parse_input(text: &str) -> Result<FormTuple, ParseError> {
    if text.trim_start().starts_with('{') {
        FormTuple::from_json(text).map_err(|e| syntax(0, &format!("invalid tuple JSON: {e}")))
    } else {
        parse_tuple(text, None)
    }
}

/// Canonical rendering; `parse_tuple(&format_tuple(q), None) == Ok(q)`.
pub fn format_tuple(q: &FormTuple) -> String {
    let d = q.d();
    let mut used = 0;
    let rendered: Vec<String> = q
        .forms()
        .iter()
        .map(|f| {
            let mut s = String::new();
            for i in 0..d {
                for j in i..d {
                    let c = f.coefficient(i, j);
                    if c.is_zero() {
                        continue;
                    }
                    used = used.max(j + 1);
                    if s.is_empty() {
                        if c.is_negative() {
                            s.push('-');
                        }
                    } else {
                        s.push_str(if c.is_negative() { " - " } else { " + " });
                    }
                    let a = c.abs();
                    if !a.is_one() {
                        s.push_str(&format_rat(&a));
                        s.push('*');
                    }
                    if i == j {
                        s.push_str(&format!("x{}^2", i + 1));
                    } else {
                        s.push_str(&format!("x{}*x{}", i + 1, j + 1));
                    }
                }
            }
            if s.is_empty() {
                s.push('0');
            }
            s
        })
        .collect();
    let body = rendered.join("; ");
    if used == d {
        body
    } else {
        format!("@d={d} {body}")
    }
}
