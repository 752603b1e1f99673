//! Stream parsers for MediaWiki-style SQL dumps and hourly pagecount files.
//!
//! The SQL side understands `INSERT INTO \`table\` VALUES (...),(...);`
//! statements for the `page`, `redirect`, `pagelinks` and `categorylinks`
//! tables and yields one typed row per tuple, in file order. Parsing is
//! single-pass and streaming: memory use is bounded by a single tuple, never
//! by file size. Malformed tuples are skipped and counted unless strict mode
//! turns them into fatal errors.

mod pagecounts;
mod sql;
pub mod writer;

use chrono::{DateTime, Utc};
use serde::Serialize;
use thiserror::Error;

use crate::types::{PageId, Title, NS_ARTICLE, NS_CATEGORY};

pub use pagecounts::{hour_from_filename, parse_pagecounts, PagecountParser};
pub use sql::{parse_sql_table, FromSqlTuple, SqlDumpParser, SqlValue};

/// Row of the `page` table: page_id, page_namespace, page_title,
/// page_is_redirect. Extra dump columns are ignored by position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageRow {
    pub page_id: PageId,
    pub namespace: i32,
    pub title: Title,
    pub is_redirect: bool,
}

/// Row of the `redirect` table: rd_from, rd_namespace, rd_title.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RedirectRow {
    pub source_page_id: PageId,
    pub target_namespace: i32,
    pub target_title: Title,
}

/// Row of the `pagelinks` table: pl_from, pl_namespace, pl_title. The target
/// is identified by (namespace, title); resolution to ids happens downstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkRow {
    pub source_page_id: PageId,
    pub target_namespace: i32,
    pub target_title: Title,
}

/// Row of the `categorylinks` table: cl_from, cl_to. The target title is
/// always interpreted in the category namespace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryLinkRow {
    pub source_page_id: PageId,
    pub target_category_title: Title,
}

/// One pagecounts line: `project title count bytes`, stamped with the hour
/// the enclosing file covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCount {
    pub project: Vec<u8>,
    pub title: Title,
    pub hour: DateTime<Utc>,
    pub count: u64,
}

/// Recognized dump tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Page,
    Redirect,
    PageLinks,
    CategoryLinks,
}

impl TableKind {
    pub fn table_name(&self) -> &'static str {
        match self {
            TableKind::Page => "page",
            TableKind::Redirect => "redirect",
            TableKind::PageLinks => "pagelinks",
            TableKind::CategoryLinks => "categorylinks",
        }
    }
}

/// Where every input tuple or line ended up. The counts always satisfy
/// `emitted + skipped_namespace + skipped_malformed + skipped_project = total`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ParseSummary {
    pub emitted: u64,
    pub skipped_namespace: u64,
    pub skipped_malformed: u64,
    pub skipped_project: u64,
}

impl ParseSummary {
    pub fn total(&self) -> u64 {
        self.emitted + self.skipped_namespace + self.skipped_malformed + self.skipped_project
    }
}

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("i/o error reading dump: {0}")]
    Io(#[from] std::io::Error),
    #[error("dump stream truncated: {0}")]
    Truncated(&'static str),
    #[error("malformed tuple in `{table}` dump (tuple #{index}): {reason}")]
    Malformed {
        table: &'static str,
        index: u64,
        reason: String,
    },
    #[error("malformed pagecounts line #{line}: {reason}")]
    MalformedLine { line: u64, reason: String },
    #[error("hour {0} is not aligned to an hour boundary")]
    UnalignedHour(DateTime<Utc>),
}

pub(crate) fn namespace_whitelisted(ns: i32) -> bool {
    ns == NS_ARTICLE || ns == NS_CATEGORY
}
