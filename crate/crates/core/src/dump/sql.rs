//! Streaming parser for MediaWiki SQL dump `INSERT` statements.
//!
//! The grammar is the one mysqldump emits: statements of the form
//! `INSERT INTO \`table\` VALUES (v,...),(v,...);` where values are integers,
//! floats, `NULL`, or single-quoted strings with backslash escapes. The
//! parser reads the stream byte by byte and never buffers more than the
//! value currently being lexed.

use std::io::BufRead;
use std::marker::PhantomData;

use crate::types::{PageId, Title};

use super::{
    namespace_whitelisted, CategoryLinkRow, DumpError, LinkRow, PageRow, ParseSummary,
    RedirectRow, TableKind,
};

/// One SQL literal inside a tuple.
#[derive(Debug, Clone, PartialEq)]
pub enum SqlValue {
    Int(i64),
    Float(f64),
    Bytes(Vec<u8>),
    Null,
}

impl SqlValue {
    fn as_int(&self) -> Option<i64> {
        match self {
            SqlValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    fn as_bytes(&self) -> Option<&[u8]> {
        match self {
            SqlValue::Bytes(b) => Some(b),
            _ => None,
        }
    }
}

/// Outcome of mapping one SQL tuple onto a typed row.
#[derive(Debug)]
pub enum TupleOutcome<T> {
    Row(T),
    SkipNamespace,
    Malformed(&'static str),
}

/// Conversion from a parsed SQL tuple to a typed dump row.
pub trait FromSqlTuple: Sized {
    const TABLE: TableKind;
    fn from_tuple(values: &[SqlValue]) -> TupleOutcome<Self>;
}

fn positive_id(values: &[SqlValue], idx: usize) -> Result<PageId, &'static str> {
    match values[idx].as_int() {
        Some(v) if v > 0 => Ok(PageId(v as u64)),
        Some(_) => Err("page id must be positive"),
        None => Err("expected integer page id"),
    }
}

fn namespace(values: &[SqlValue], idx: usize) -> Result<i32, &'static str> {
    match values[idx].as_int() {
        Some(v) if i32::try_from(v).is_ok() => Ok(v as i32),
        _ => Err("expected integer namespace"),
    }
}

fn title(values: &[SqlValue], idx: usize) -> Result<Title, &'static str> {
    match values[idx].as_bytes() {
        Some(b) if !b.is_empty() => Ok(Title::new(b)),
        Some(_) => Err("empty title"),
        None => Err("expected string title"),
    }
}

impl FromSqlTuple for PageRow {
    const TABLE: TableKind = TableKind::Page;

    fn from_tuple(values: &[SqlValue]) -> TupleOutcome<Self> {
        if values.len() < 4 {
            return TupleOutcome::Malformed("page tuple needs at least 4 columns");
        }
        let page_id = match positive_id(values, 0) {
            Ok(v) => v,
            Err(e) => return TupleOutcome::Malformed(e),
        };
        let ns = match namespace(values, 1) {
            Ok(v) => v,
            Err(e) => return TupleOutcome::Malformed(e),
        };
        let title = match title(values, 2) {
            Ok(v) => v,
            Err(e) => return TupleOutcome::Malformed(e),
        };
        let is_redirect = match values[3].as_int() {
            Some(v) => v != 0,
            None => return TupleOutcome::Malformed("expected integer redirect flag"),
        };
        if !namespace_whitelisted(ns) {
            return TupleOutcome::SkipNamespace;
        }
        TupleOutcome::Row(PageRow { page_id, namespace: ns, title, is_redirect })
    }
}

impl FromSqlTuple for RedirectRow {
    const TABLE: TableKind = TableKind::Redirect;

    fn from_tuple(values: &[SqlValue]) -> TupleOutcome<Self> {
        if values.len() < 3 {
            return TupleOutcome::Malformed("redirect tuple needs at least 3 columns");
        }
        let source = match positive_id(values, 0) {
            Ok(v) => v,
            Err(e) => return TupleOutcome::Malformed(e),
        };
        let ns = match namespace(values, 1) {
            Ok(v) => v,
            Err(e) => return TupleOutcome::Malformed(e),
        };
        let target = match title(values, 2) {
            Ok(v) => v,
            Err(e) => return TupleOutcome::Malformed(e),
        };
        TupleOutcome::Row(RedirectRow {
            source_page_id: source,
            target_namespace: ns,
            target_title: target,
        })
    }
}

impl FromSqlTuple for LinkRow {
    const TABLE: TableKind = TableKind::PageLinks;

    fn from_tuple(values: &[SqlValue]) -> TupleOutcome<Self> {
        if values.len() < 3 {
            return TupleOutcome::Malformed("pagelinks tuple needs at least 3 columns");
        }
        let source = match positive_id(values, 0) {
            Ok(v) => v,
            Err(e) => return TupleOutcome::Malformed(e),
        };
        let ns = match namespace(values, 1) {
            Ok(v) => v,
            Err(e) => return TupleOutcome::Malformed(e),
        };
        let target = match title(values, 2) {
            Ok(v) => v,
            Err(e) => return TupleOutcome::Malformed(e),
        };
        if !namespace_whitelisted(ns) {
            return TupleOutcome::SkipNamespace;
        }
        TupleOutcome::Row(LinkRow {
            source_page_id: source,
            target_namespace: ns,
            target_title: target,
        })
    }
}

impl FromSqlTuple for CategoryLinkRow {
    const TABLE: TableKind = TableKind::CategoryLinks;

    fn from_tuple(values: &[SqlValue]) -> TupleOutcome<Self> {
        if values.len() < 2 {
            return TupleOutcome::Malformed("categorylinks tuple needs at least 2 columns");
        }
        let source = match positive_id(values, 0) {
            Ok(v) => v,
            Err(e) => return TupleOutcome::Malformed(e),
        };
        let target = match title(values, 1) {
            Ok(v) => v,
            Err(e) => return TupleOutcome::Malformed(e),
        };
        TupleOutcome::Row(CategoryLinkRow {
            source_page_id: source,
            target_category_title: target,
        })
    }
}

/// Byte-level reader with one byte of lookahead.
struct ByteReader<R: BufRead> {
    inner: R,
    peeked: Option<u8>,
    pos: u64,
}

impl<R: BufRead> ByteReader<R> {
    fn new(inner: R) -> Self {
        ByteReader { inner, peeked: None, pos: 0 }
    }

    fn next(&mut self) -> Result<Option<u8>, std::io::Error> {
        if let Some(b) = self.peeked.take() {
            self.pos += 1;
            return Ok(Some(b));
        }
        let buf = self.inner.fill_buf()?;
        if buf.is_empty() {
            return Ok(None);
        }
        let b = buf[0];
        self.inner.consume(1);
        self.pos += 1;
        Ok(Some(b))
    }

    fn peek(&mut self) -> Result<Option<u8>, std::io::Error> {
        if self.peeked.is_none() {
            let buf = self.inner.fill_buf()?;
            if buf.is_empty() {
                return Ok(None);
            }
            self.peeked = Some(buf[0]);
            self.inner.consume(1);
        }
        Ok(self.peeked)
    }
}

enum TupleIssue {
    /// Recoverable: the tuple was structurally sound but its content did not
    /// map onto the expected row shape. The stream is already positioned
    /// after the closing parenthesis.
    Content(&'static str),
    Fatal(DumpError),
}

/// Streaming iterator over the typed rows of one dump table.
///
/// Iterate it as `&mut parser` (or via `by_ref`) so the [`ParseSummary`] can
/// be read back afterwards.
pub struct SqlDumpParser<R: BufRead, T: FromSqlTuple> {
    reader: ByteReader<R>,
    strict: bool,
    summary: ParseSummary,
    in_statement: bool,
    done: bool,
    tuple_index: u64,
    peak_value_bytes: usize,
    _rows: PhantomData<T>,
}

/// Entry point: parse one table's dump from a buffered stream.
pub fn parse_sql_table<R: BufRead, T: FromSqlTuple>(reader: R) -> SqlDumpParser<R, T> {
    SqlDumpParser {
        reader: ByteReader::new(reader),
        strict: false,
        summary: ParseSummary::default(),
        in_statement: false,
        done: false,
        tuple_index: 0,
        peak_value_bytes: 0,
        _rows: PhantomData,
    }
}

impl<R: BufRead, T: FromSqlTuple> SqlDumpParser<R, T> {
    /// In strict mode any tuple that would be skipped as malformed aborts
    /// the parse with a fatal error instead.
    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn summary(&self) -> &ParseSummary {
        &self.summary
    }

    /// Largest single lexed value seen so far; stays bounded by tuple size
    /// regardless of stream length.
    #[cfg(test)]
    pub(crate) fn peak_value_bytes(&self) -> usize {
        self.peak_value_bytes
    }

    /// Scans forward to the next `INSERT INTO` statement for the expected
    /// table and positions the reader right after `VALUES`. Statements for
    /// other tables are skipped whole.
    fn seek_statement(&mut self) -> Result<bool, DumpError> {
        const NEEDLE: &[u8] = b"INSERT INTO";
        let mut matched = 0usize;
        loop {
            let Some(b) = self.reader.next()? else {
                return Ok(false);
            };
            if b == NEEDLE[matched] {
                matched += 1;
                if matched == NEEDLE.len() {
                    if let Some(name) = self.read_statement_header()? {
                        if name == T::TABLE.table_name().as_bytes() {
                            return Ok(true);
                        }
                        self.skip_statement_body()?;
                    }
                    matched = 0;
                }
            } else {
                matched = if b == NEEDLE[0] { 1 } else { 0 };
            }
        }
    }

    /// After `INSERT INTO`, reads the (optionally backquoted) table name and
    /// the `VALUES` keyword. Returns the table name, or None if the header
    /// does not fit the grammar (scanning then continues).
    fn read_statement_header(&mut self) -> Result<Option<Vec<u8>>, DumpError> {
        self.skip_spaces()?;
        let mut name = Vec::new();
        match self.reader.peek()? {
            Some(b'`') => {
                self.reader.next()?;
                loop {
                    match self.reader.next()? {
                        Some(b'`') => break,
                        Some(b) => name.push(b),
                        None => return Err(DumpError::Truncated("eof in table name")),
                    }
                    if name.len() > 256 {
                        return Ok(None);
                    }
                }
            }
            Some(b) if b.is_ascii_alphanumeric() || b == b'_' => {
                while let Some(b) = self.reader.peek()? {
                    if b.is_ascii_alphanumeric() || b == b'_' {
                        name.push(b);
                        self.reader.next()?;
                    } else {
                        break;
                    }
                }
            }
            _ => return Ok(None),
        }
        self.skip_spaces()?;
        const VALUES: &[u8] = b"VALUES";
        for expected in VALUES {
            match self.reader.next()? {
                Some(b) if b == *expected => {}
                Some(_) => return Ok(None),
                None => return Err(DumpError::Truncated("eof before VALUES")),
            }
        }
        Ok(Some(name))
    }

    fn skip_spaces(&mut self) -> Result<(), DumpError> {
        while let Some(b) = self.reader.peek()? {
            if b == b' ' || b == b'\t' || b == b'\n' || b == b'\r' {
                self.reader.next()?;
            } else {
                break;
            }
        }
        Ok(())
    }

    /// Consumes the rest of a statement up to its terminating `;`, honoring
    /// quoted strings so literal semicolons inside values do not end it.
    fn skip_statement_body(&mut self) -> Result<(), DumpError> {
        let mut in_string = false;
        loop {
            match self.reader.next()? {
                None => return Err(DumpError::Truncated("eof inside statement")),
                Some(b'\\') if in_string => {
                    self.reader.next()?;
                }
                Some(b'\'') => in_string = !in_string,
                Some(b';') if !in_string => return Ok(()),
                Some(_) => {}
            }
        }
    }

    /// Consumes the rest of the current tuple after a parse failure so the
    /// next tuple can be attempted. Assumes the reader is inside the tuple.
    fn skip_tuple_remainder(&mut self) -> Result<(), DumpError> {
        let mut in_string = false;
        let mut depth = 1u32;
        loop {
            match self.reader.next()? {
                None => return Err(DumpError::Truncated("eof inside tuple")),
                Some(b'\\') if in_string => {
                    self.reader.next()?;
                }
                Some(b'\'') => in_string = !in_string,
                Some(b'(') if !in_string => depth += 1,
                Some(b')') if !in_string => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(());
                    }
                }
                Some(_) => {}
            }
        }
    }

    /// Parses one `(v, v, ...)` tuple. On content errors the reader is
    /// resynchronized past the closing parenthesis.
    fn parse_tuple(&mut self) -> Result<Result<Vec<SqlValue>, TupleIssue>, DumpError> {
        match self.reader.next()? {
            Some(b'(') => {}
            Some(_) => {
                return Ok(Err(TupleIssue::Fatal(DumpError::Malformed {
                    table: T::TABLE.table_name(),
                    index: self.tuple_index,
                    reason: "expected '(' at tuple start".into(),
                })))
            }
            None => return Err(DumpError::Truncated("eof at tuple start")),
        }
        let mut values = Vec::new();
        loop {
            self.skip_spaces()?;
            match self.parse_value()? {
                Ok(v) => values.push(v),
                Err(reason) => {
                    self.skip_tuple_remainder()?;
                    return Ok(Err(TupleIssue::Content(reason)));
                }
            }
            self.skip_spaces()?;
            match self.reader.next()? {
                Some(b',') => continue,
                Some(b')') => return Ok(Ok(values)),
                Some(_) => {
                    self.skip_tuple_remainder()?;
                    return Ok(Err(TupleIssue::Content("expected ',' or ')' after value")));
                }
                None => return Err(DumpError::Truncated("eof inside tuple")),
            }
        }
    }

    fn parse_value(&mut self) -> Result<Result<SqlValue, &'static str>, DumpError> {
        match self.reader.peek()? {
            Some(b'\'') => {
                self.reader.next()?;
                let s = self.parse_string()?;
                self.peak_value_bytes = self.peak_value_bytes.max(s.len());
                Ok(Ok(SqlValue::Bytes(s)))
            }
            Some(b) if b == b'-' || b == b'+' || b == b'.' || b.is_ascii_digit() => {
                let mut raw = Vec::new();
                let mut numeric = true;
                while let Some(b) = self.reader.peek()? {
                    match b {
                        b'0'..=b'9' | b'-' | b'+' | b'.' | b'e' | b'E' => {
                            raw.push(b);
                            self.reader.next()?;
                        }
                        b',' | b')' | b' ' | b'\t' | b'\n' | b'\r' => break,
                        _ => {
                            numeric = false;
                            raw.push(b);
                            self.reader.next()?;
                            if raw.len() > 64 {
                                break;
                            }
                        }
                    }
                }
                if !numeric {
                    return Ok(Err("invalid numeric literal"));
                }
                let text = std::str::from_utf8(&raw).expect("ascii numeric");
                if !text.contains(['.', 'e', 'E']) {
                    match text.parse::<i64>() {
                        Ok(v) => Ok(Ok(SqlValue::Int(v))),
                        Err(_) => Ok(Err("integer literal out of range")),
                    }
                } else {
                    match text.parse::<f64>() {
                        Ok(v) => Ok(Ok(SqlValue::Float(v))),
                        Err(_) => Ok(Err("invalid float literal")),
                    }
                }
            }
            Some(b'N') | Some(b'n') => {
                for expected in b"NULL" {
                    match self.reader.next()? {
                        Some(b) if b.eq_ignore_ascii_case(expected) => {}
                        Some(_) => return Ok(Err("invalid bare literal")),
                        None => return Err(DumpError::Truncated("eof inside literal")),
                    }
                }
                Ok(Ok(SqlValue::Null))
            }
            Some(_) => Ok(Err("unexpected value start")),
            None => Err(DumpError::Truncated("eof where value expected")),
        }
    }

    /// Lexes a single-quoted string body (the opening quote is consumed).
    /// Handles backslash escapes and doubled quotes.
    fn parse_string(&mut self) -> Result<Vec<u8>, DumpError> {
        let mut out = Vec::new();
        loop {
            match self.reader.next()? {
                None => return Err(DumpError::Truncated("eof inside string")),
                Some(b'\\') => match self.reader.next()? {
                    None => return Err(DumpError::Truncated("eof inside string escape")),
                    Some(b'0') => out.push(0),
                    Some(b'n') => out.push(b'\n'),
                    Some(b'r') => out.push(b'\r'),
                    Some(b't') => out.push(b'\t'),
                    Some(b'Z') => out.push(0x1a),
                    Some(b'b') => out.push(0x08),
                    // \% and \_ keep their backslash in MySQL string literals
                    Some(b @ (b'%' | b'_')) => {
                        out.push(b'\\');
                        out.push(b);
                    }
                    Some(b) => out.push(b),
                },
                Some(b'\'') => {
                    if self.reader.peek()? == Some(b'\'') {
                        self.reader.next()?;
                        out.push(b'\'');
                    } else {
                        return Ok(out);
                    }
                }
                Some(b) => out.push(b),
            }
        }
    }

    fn next_row(&mut self) -> Result<Option<T>, DumpError> {
        loop {
            if !self.in_statement {
                if !self.seek_statement()? {
                    return Ok(None);
                }
                self.in_statement = true;
            }
            self.skip_spaces()?;
            let tuple = match self.parse_tuple()? {
                Ok(values) => values,
                Err(TupleIssue::Content(reason)) => {
                    self.register_malformed(reason)?;
                    self.advance_after_tuple()?;
                    continue;
                }
                Err(TupleIssue::Fatal(e)) => return Err(e),
            };
            self.tuple_index += 1;
            let outcome = T::from_tuple(&tuple);
            self.advance_after_tuple()?;
            match outcome {
                TupleOutcome::Row(row) => {
                    self.summary.emitted += 1;
                    return Ok(Some(row));
                }
                TupleOutcome::SkipNamespace => {
                    self.summary.skipped_namespace += 1;
                }
                TupleOutcome::Malformed(reason) => {
                    // undo the provisional index bump so strict errors report
                    // the offending tuple, then route through the shared path
                    self.tuple_index -= 1;
                    self.register_malformed(reason)?;
                }
            }
        }
    }

    fn register_malformed(&mut self, reason: &str) -> Result<(), DumpError> {
        self.tuple_index += 1;
        if self.strict {
            return Err(DumpError::Malformed {
                table: T::TABLE.table_name(),
                index: self.tuple_index,
                reason: reason.to_string(),
            });
        }
        self.summary.skipped_malformed += 1;
        Ok(())
    }

    /// After a tuple, consumes the `,` separator or the `;` terminator.
    fn advance_after_tuple(&mut self) -> Result<(), DumpError> {
        self.skip_spaces()?;
        match self.reader.peek()? {
            Some(b',') => {
                self.reader.next()?;
                Ok(())
            }
            Some(b';') => {
                self.reader.next()?;
                self.in_statement = false;
                Ok(())
            }
            None => Err(DumpError::Truncated("eof after tuple")),
            Some(_) => {
                // garbage between tuples: abandon the statement and resync
                self.skip_statement_body()?;
                self.in_statement = false;
                Ok(())
            }
        }
    }
}

impl<R: BufRead, T: FromSqlTuple> Iterator for &mut SqlDumpParser<R, T> {
    type Item = Result<T, DumpError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_row() {
            Ok(Some(row)) => Some(Ok(row)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}
