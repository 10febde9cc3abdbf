//! Arithmetic for numeric flags: `0.0625`, `1/16`, `1/(3*sqrt(3))`.

use anyhow::{bail, Result};

pub fn eval(text: &str) -> Result<f64> {
    let tokens: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut p = Parser { tokens, pos: 0 };
    let v = p.sum()?;
    if p.pos != p.tokens.len() {
        bail!("unexpected `{}` in `{text}`", p.tokens[p.pos]);
    }
    if !v.is_finite() {
        bail!("`{text}` is not a finite number");
    }
    Ok(v)
}

struct Parser {
    tokens: Vec<char>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.tokens.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<f64> {
        let mut v = self.product()?;
        loop {
            if self.eat('+') {
                v += self.product()?;
            } else if self.eat('-') {
                v -= self.product()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn product(&mut self) -> Result<f64> {
        let mut v = self.unary()?;
        loop {
            if self.eat('*') {
                v *= self.unary()?;
            } else if self.eat('/') {
                v /= self.unary()?;
            } else if self.peek() == Some('√') {
                v *= self.unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<f64> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<f64> {
        if self.eat('(') {
            let v = self.sum()?;
            if !self.eat(')') {
                bail!("missing `)`");
            }
            return Ok(v);
        }
        if self.eat('√') {
            return Ok(self.atom()?.sqrt());
        }
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        if self.pos > start {
            let name: String = self.tokens[start..self.pos].iter().collect();
            if name != "sqrt" {
                bail!("unknown function `{name}`");
            }
            return Ok(self.atom()?.sqrt());
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.' || c == 'e') {
            self.pos += 1;
        }
        let lit: String = self.tokens[start..self.pos].iter().collect();
        if lit.is_empty() {
            bail!("expected a number");
        }
        Ok(lit.parse()?)
    }
}

#[cfg(test)]
mod tests {
    use super::eval;

    #[test]
    fn forms() {
        assert_eq!(eval("0.0625").unwrap(), 1.0 / 16.0);
        assert_eq!(eval("1/16").unwrap(), 1.0 / 16.0);
        assert_eq!(eval("3/2").unwrap(), 1.5);
        assert_eq!(eval("1/(3*sqrt(3))").unwrap(), 1.0 / (3.0 * 3f64.sqrt()));
        assert_eq!(eval("1/(3√3)").unwrap(), 1.0 / (3.0 * 3f64.sqrt()));
        assert_eq!(eval("1 - 1/sqrt(3)").unwrap(), 1.0 - 1.0 / 3f64.sqrt());
        assert_eq!(eval("-2+1e1").unwrap(), 8.0);
        for bad in ["", "1/", "abc(2)", "(1", "1)", "1/0"] {
            assert!(eval(bad).is_err(), "{bad}");
        }
    }
}
