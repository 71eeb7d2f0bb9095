//! Numeric values in configs: plain numbers or small arithmetic expressions
//! such as `0.4/256`, `2pi/512` or `1/(2*1024)`.

use crate::{Error, Result};

pub fn parse_value(text: &str) -> Result<f64> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("trailing characters"));
    }
    if !v.is_finite() {
        return Err(Error::Config(format!("`{text}` is not a finite number")));
    }
    Ok(v)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::Config(format!(
            "cannot parse `{}` as a number: {what} at offset {}",
            String::from_utf8_lossy(self.src),
            self.pos
        ))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<f64> {
        let mut v = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let r = self.term()?;
            v = if c == b'+' { v + r } else { v - r };
        }
        Ok(v)
    }

    fn term(&mut self) -> Result<f64> {
        let mut v = self.unary()?;
        loop {
            match self.peek() {
                Some(c @ (b'*' | b'/')) => {
                    self.pos += 1;
                    let r = self.unary()?;
                    v = if c == b'*' { v * r } else { v / r };
                }
                // Juxtaposition multiplies: `2pi`, `3(1+1)`.
                Some(b'(') | Some(b'p') => v *= self.unary()?,
                _ => return Ok(v),
            }
        }
    }

    fn unary(&mut self) -> Result<f64> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<f64> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(b'p') if self.src[self.pos..].starts_with(b"pi") => {
                self.pos += 2;
                Ok(std::f64::consts::PI)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len() {
                    let c = self.src[self.pos];
                    let exp_sign = (c == b'-' || c == b'+')
                        && matches!(self.src.get(self.pos.wrapping_sub(1)), Some(b'e' | b'E'));
                    if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                std::str::from_utf8(&self.src[start..self.pos])
                    .ok()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| self.error("malformed number"))
            }
            _ => Err(self.error("expected a number")),
        }
    }
}

/// Comma-separated list of values.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(parse_value)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn evaluates_expressions() {
        assert_eq!(parse_value("0.25").unwrap(), 0.25);
        assert_eq!(parse_value("0.4/256").unwrap(), 0.4 / 256.0);
        assert_eq!(parse_value("2pi/512").unwrap(), 2.0 * PI / 512.0);
        assert_eq!(parse_value("2*pi/512").unwrap(), 2.0 * PI / 512.0);
        assert_eq!(parse_value("-pi").unwrap(), -PI);
        assert_eq!(parse_value("1/(2*1024)").unwrap(), 1.0 / 2048.0);
        assert_eq!(parse_value("1e-3").unwrap(), 1e-3);
        assert_eq!(parse_value(" 3 - 1 - 1 ").unwrap(), 1.0);
        assert_eq!(parse_list("1/64, 1/128,1/256").unwrap(), vec![1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0]);
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "abc", "1/", "(1", "1)", "1/0", "2 pie"] {
            assert!(parse_value(s).is_err(), "{s}");
        }
    }
}
