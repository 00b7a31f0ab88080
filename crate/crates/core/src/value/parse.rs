use thiserror::Error;

use super::Value;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unterminated string starting at byte {offset}")]
    UnterminatedString { offset: usize },
    #[error("malformed number {text:?} at byte {offset}")]
    MalformedNumber { offset: usize, text: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match *self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnterminatedString { offset }
            | ParseError::MalformedNumber { offset, .. } => offset,
        }
    }

    fn syntax(offset: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            offset,
            message: message.into(),
        }
    }
}

/// Parse the whole of `text` as one value.
pub fn parse_value(text: &str) -> Result<Value, ParseError> {
    let mut p = Parser::new(text);
    let v = p.value()?;
    p.finish()?;
    Ok(v)
}

/// Byte-level cursor over value text. Exposed so the task and script
/// grammars can reuse the value sub-grammar.
pub struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    pub fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    fn bytes(&self) -> &'a [u8] {
        self.src.as_bytes()
    }

    pub fn skip_ws(&mut self) {
        while let Some(b) = self.bytes().get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    /// Next non-whitespace byte, without consuming it.
    pub fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes().get(self.pos).copied()
    }

    pub fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, b: u8) -> Result<(), ParseError> {
        if self.eat(b) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected '{}'", b as char)))
        }
    }

    pub fn unexpected(&mut self, what: &str) -> ParseError {
        let found = match self.peek() {
            Some(_) => {
                let c = self.src[self.pos..].chars().next().unwrap_or('?');
                format!("{what}, found '{c}'")
            }
            None => format!("{what}, found end of input"),
        };
        ParseError::syntax(self.pos, found)
    }

    /// Require that only whitespace remains.
    pub fn finish(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.unexpected("trailing input")),
        }
    }

    pub fn at_identifier(&mut self) -> bool {
        self.peek().is_some_and(|b| b.is_ascii_alphabetic())
    }

    /// `letter (letter | digit | '_')*`
    pub fn identifier(&mut self) -> Result<&'a str, ParseError> {
        if !self.at_identifier() {
            return Err(self.unexpected("expected identifier"));
        }
        let start = self.pos;
        while self
            .bytes()
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
        {
            self.pos += 1;
        }
        Ok(&self.src[start..self.pos])
    }

    pub fn value(&mut self) -> Result<Value, ParseError> {
        match self.peek() {
            Some(b'{') => self.list(),
            Some(b'"') => self.string().map(Value::Text),
            Some(b) if b == b'-' || b.is_ascii_digit() => self.number(),
            _ => Err(self.unexpected("expected value")),
        }
    }

    fn list(&mut self) -> Result<Value, ParseError> {
        self.expect(b'{')?;
        let mut items = Vec::new();
        if self.eat(b'}') {
            return Ok(Value::List(items));
        }
        loop {
            items.push(self.value()?);
            if self.eat(b',') {
                continue;
            }
            if self.eat(b'}') {
                return Ok(Value::List(items));
            }
            return Err(self.unexpected("expected ',' or '}'"));
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        let mut chars = self.src[self.pos..].char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, e @ ('"' | '\\'))) => out.push(e),
                    Some((j, e)) => {
                        return Err(ParseError::syntax(
                            self.pos + j,
                            format!("unsupported escape '\\{e}'"),
                        ))
                    }
                    None => return Err(ParseError::UnterminatedString { offset: start }),
                },
                c => out.push(c),
            }
        }
        Err(ParseError::UnterminatedString { offset: start })
    }

    fn number(&mut self) -> Result<Value, ParseError> {
        let start = self.pos;
        let b = self.bytes();
        let mut end = start;
        while end < b.len()
            && (b[end].is_ascii_alphanumeric() || matches!(b[end], b'.' | b'-' | b'+' | b'_'))
        {
            // A sign is only part of the token at the start or right after an exponent marker.
            if matches!(b[end], b'-' | b'+') && end != start && !matches!(b[end - 1], b'e' | b'E')
            {
                break;
            }
            end += 1;
        }
        let text = &self.src[start..end];
        self.pos = end;
        parse_number(text).ok_or_else(|| ParseError::MalformedNumber {
            offset: start,
            text: text.to_owned(),
        })
    }
}

/// `-?digits` is an integer; `-?digits(.digits)?([eE][+-]?digits)?` with a
/// fraction or exponent is a real.
pub(crate) fn parse_number(text: &str) -> Option<Value> {
    let b = text.as_bytes();
    let mut i = usize::from(b.first() == Some(&b'-'));
    let digits = |i: &mut usize| {
        let s = *i;
        while *i < b.len() && b[*i].is_ascii_digit() {
            *i += 1;
        }
        *i > s
    };
    if !digits(&mut i) {
        return None;
    }
    let mut real = false;
    if b.get(i) == Some(&b'.') {
        i += 1;
        if !digits(&mut i) {
            return None;
        }
        real = true;
    }
    if matches!(b.get(i), Some(b'e' | b'E')) {
        i += 1;
        if matches!(b.get(i), Some(b'+' | b'-')) {
            i += 1;
        }
        if !digits(&mut i) {
            return None;
        }
        real = true;
    }
    if i != b.len() {
        return None;
    }
    if real {
        text.parse().ok().map(Value::Real)
    } else {
        text.parse().ok().map(Value::Integer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_list() {
        let v = parse_value("{1, 2.5, {3}}").unwrap();
        assert_eq!(
            v,
            Value::list([
                Value::Integer(1),
                Value::Real(2.5),
                Value::list([Value::Integer(3)])
            ])
        );
    }

    #[test]
    fn empty_list_and_whitespace() {
        assert_eq!(parse_value("{}").unwrap(), Value::List(vec![]));
        assert_eq!(
            parse_value("  {  0 ,\n 1.213 }  ").unwrap(),
            Value::list([Value::Integer(0), Value::Real(1.213)])
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_value("-7").unwrap(), Value::Integer(-7));
        assert_eq!(parse_value("1e3").unwrap(), Value::Real(1000.0));
        assert_eq!(parse_value("2.5E-2").unwrap(), Value::Real(0.025));
        assert_eq!(parse_value("-0.0").unwrap(), Value::Real(0.0));
    }

    #[test]
    fn malformed_numbers() {
        for bad in ["1.", "1.2.3", "--1", "1e", "12abc", "99999999999999999999"] {
            match parse_value(bad) {
                Err(ParseError::MalformedNumber { offset: 0, .. }) => {}
                other => panic!("{bad}: {other:?}"),
            }
        }
    }

    #[test]
    fn strings() {
        assert_eq!(
            parse_value(r#""a \"q\" \\ b""#).unwrap(),
            Value::text(r#"a "q" \ b"#)
        );
        assert_eq!(
            parse_value(r#"{"abc"#),
            Err(ParseError::UnterminatedString { offset: 1 })
        );
        assert!(matches!(
            parse_value(r#""\n""#),
            Err(ParseError::Syntax { offset: 2, .. })
        ));
    }

    #[test]
    fn syntax_offsets() {
        assert_eq!(parse_value("{1 2}").unwrap_err().offset(), 3);
        assert_eq!(parse_value("{1,}").unwrap_err().offset(), 3);
        assert_eq!(parse_value("{1} x").unwrap_err().offset(), 4);
        assert_eq!(parse_value("").unwrap_err().offset(), 0);
        assert_eq!(parse_value("{").unwrap_err().offset(), 1);
    }
}
