//! Serializers for the dump formats the parsers read.
//!
//! Mainly used to build fixtures and to round-trip parser behavior in tests,
//! but public because generating small synthetic dumps is occasionally useful
//! on its own.

use std::io::{self, Write};

use super::{CategoryLinkRow, LinkRow, PageRow, RawCount, RedirectRow};

/// Escapes one byte string for a single-quoted MySQL literal.
pub fn sql_escape(bytes: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(bytes.len() + 2);
    for &b in bytes {
        match b {
            0 => out.extend_from_slice(b"\\0"),
            b'\n' => out.extend_from_slice(b"\\n"),
            b'\r' => out.extend_from_slice(b"\\r"),
            0x1a => out.extend_from_slice(b"\\Z"),
            b'\'' => out.extend_from_slice(b"\\'"),
            b'\\' => out.extend_from_slice(b"\\\\"),
            other => out.push(other),
        }
    }
    out
}

fn write_statement<W: Write, T>(
    w: &mut W,
    table: &str,
    rows: &[T],
    mut tuple: impl FnMut(&mut W, &T) -> io::Result<()>,
) -> io::Result<()> {
    if rows.is_empty() {
        return Ok(());
    }
    write!(w, "INSERT INTO `{table}` VALUES ")?;
    for (i, row) in rows.iter().enumerate() {
        if i > 0 {
            w.write_all(b",")?;
        }
        tuple(w, row)?;
    }
    w.write_all(b";\n")
}

pub fn write_page_insert<W: Write>(w: &mut W, rows: &[PageRow]) -> io::Result<()> {
    write_statement(w, "page", rows, |w, r| {
        write!(w, "({},{},'", r.page_id.0, r.namespace)?;
        w.write_all(&sql_escape(r.title.as_bytes()))?;
        write!(w, "',{})", r.is_redirect as u8)
    })
}

pub fn write_redirect_insert<W: Write>(w: &mut W, rows: &[RedirectRow]) -> io::Result<()> {
    write_statement(w, "redirect", rows, |w, r| {
        write!(w, "({},{},'", r.source_page_id.0, r.target_namespace)?;
        w.write_all(&sql_escape(r.target_title.as_bytes()))?;
        w.write_all(b"')")
    })
}

pub fn write_pagelinks_insert<W: Write>(w: &mut W, rows: &[LinkRow]) -> io::Result<()> {
    write_statement(w, "pagelinks", rows, |w, r| {
        write!(w, "({},{},'", r.source_page_id.0, r.target_namespace)?;
        w.write_all(&sql_escape(r.target_title.as_bytes()))?;
        w.write_all(b"')")
    })
}

pub fn write_categorylinks_insert<W: Write>(
    w: &mut W,
    rows: &[CategoryLinkRow],
) -> io::Result<()> {
    write_statement(w, "categorylinks", rows, |w, r| {
        write!(w, "({},'", r.source_page_id.0)?;
        w.write_all(&sql_escape(r.target_category_title.as_bytes()))?;
        w.write_all(b"')")
    })
}

/// Writes one pagecounts line. Titles must not contain spaces or newlines;
/// the line format has no escaping.
pub fn write_pagecounts_line<W: Write>(
    w: &mut W,
    record: &RawCount,
    transferred_bytes: u64,
) -> io::Result<()> {
    w.write_all(&record.project)?;
    w.write_all(b" ")?;
    w.write_all(record.title.as_bytes())?;
    writeln!(w, " {} {}", record.count, transferred_bytes)
}
