//! Parser for hourly pagecount files.
//!
//! Each line reads `project title count bytes`, separated by single spaces.
//! The hour is not part of the line; it comes from the file name
//! (`pagecounts-YYYYMMDD-HHMMSS`, optionally gzipped) and is stamped on every
//! emitted record. Lines for other projects are counted, not emitted.

use std::io::BufRead;

use chrono::{DateTime, NaiveDate, Utc};

use crate::types::{is_hour_aligned, Title};

use super::{DumpError, ParseSummary, RawCount};

/// Streaming iterator over the counts of one hourly file.
pub struct PagecountParser<R: BufRead> {
    reader: R,
    hour: DateTime<Utc>,
    project: Vec<u8>,
    strict: bool,
    summary: ParseSummary,
    line_no: u64,
    buf: Vec<u8>,
    done: bool,
}

/// Entry point: parse one hourly pagecounts stream. `hour` must sit on an
/// hour boundary; `project` selects which lines are emitted (e.g. `b"en"`).
pub fn parse_pagecounts<R: BufRead>(
    reader: R,
    hour: DateTime<Utc>,
    project: &[u8],
) -> Result<PagecountParser<R>, DumpError> {
    if !is_hour_aligned(hour) {
        return Err(DumpError::UnalignedHour(hour));
    }
    Ok(PagecountParser {
        reader,
        hour,
        project: project.to_vec(),
        strict: false,
        summary: ParseSummary::default(),
        line_no: 0,
        buf: Vec::new(),
        done: false,
    })
}

impl<R: BufRead> PagecountParser<R> {
    /// In strict mode a malformed line aborts the parse instead of being
    /// skipped and counted.
    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn summary(&self) -> &ParseSummary {
        &self.summary
    }

    fn parse_line(&self) -> Result<RawCount, &'static str> {
        let mut line: &[u8] = &self.buf;
        if line.last() == Some(&b'\n') {
            line = &line[..line.len() - 1];
        }
        if line.last() == Some(&b'\r') {
            line = &line[..line.len() - 1];
        }
        if line.is_empty() {
            return Err("empty line");
        }
        let mut fields = line.split(|&b| b == b' ');
        let project = fields.next().ok_or("missing project")?;
        let title = fields.next().ok_or("missing title")?;
        let count = fields.next().ok_or("missing count")?;
        let bytes = fields.next().ok_or("missing bytes")?;
        if fields.next().is_some() {
            return Err("too many fields");
        }
        if project.is_empty() || title.is_empty() {
            return Err("empty field");
        }
        let count = parse_u64(count).ok_or("invalid count")?;
        parse_u64(bytes).ok_or("invalid bytes field")?;
        Ok(RawCount {
            project: project.to_vec(),
            title: Title::new(title),
            hour: self.hour,
            count,
        })
    }

    fn next_count(&mut self) -> Result<Option<RawCount>, DumpError> {
        loop {
            self.buf.clear();
            let n = self.reader.read_until(b'\n', &mut self.buf)?;
            if n == 0 {
                return Ok(None);
            }
            self.line_no += 1;
            // a bare final newline is end-of-file, not an empty record
            if self.buf == b"\n" && self.reader.fill_buf()?.is_empty() {
                return Ok(None);
            }
            match self.parse_line() {
                Ok(rec) => {
                    if rec.project == self.project {
                        self.summary.emitted += 1;
                        return Ok(Some(rec));
                    }
                    self.summary.skipped_project += 1;
                }
                Err(reason) => {
                    if self.strict {
                        return Err(DumpError::MalformedLine {
                            line: self.line_no,
                            reason: reason.to_string(),
                        });
                    }
                    self.summary.skipped_malformed += 1;
                }
            }
        }
    }
}

impl<R: BufRead> Iterator for &mut PagecountParser<R> {
    type Item = Result<RawCount, DumpError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_count() {
            Ok(Some(rec)) => Some(Ok(rec)),
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

fn parse_u64(bytes: &[u8]) -> Option<u64> {
    std::str::from_utf8(bytes).ok()?.parse().ok()
}

/// Derives the covered hour from a pagecounts file name such as
/// `pagecounts-20180801-030000` or `pagecounts-20180801-030000.gz`.
/// Minutes and seconds in the stamp are truncated to the hour.
pub fn hour_from_filename(name: &str) -> Option<DateTime<Utc>> {
    let stem = name.strip_suffix(".gz").unwrap_or(name);
    let rest = stem.rsplit('/').next()?.strip_prefix("pagecounts-")?;
    let (date, time) = rest.split_once('-')?;
    if date.len() != 8 || time.len() != 6 || !time.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let date = NaiveDate::parse_from_str(date, "%Y%m%d").ok()?;
    let hour: u32 = time[..2].parse().ok()?;
    let naive = date.and_hms_opt(hour, 0, 0)?;
    Some(DateTime::from_naive_utc_and_offset(naive, Utc))
}
