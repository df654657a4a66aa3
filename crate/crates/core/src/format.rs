//! Magic header lines for the text artifacts.
//!
//! Every text file starts with `#hrli-<kind> v<version>` optionally followed by
//! tab-separated `key=value` fields.

use std::collections::BTreeMap;

use crate::{Error, Result, MAGIC_PREFIX};

pub const VERSION: u32 = 1;

pub fn magic_line(kind: &str, fields: &[(&str, String)]) -> String {
    let mut line = format!("{MAGIC_PREFIX}{kind} v{VERSION}");
    for (k, v) in fields {
        line.push('\t');
        line.push_str(k);
        line.push('=');
        line.push_str(v);
    }
    line
}

pub fn parse_magic(line: &str, kind: &str) -> Result<BTreeMap<String, String>> {
    let bad = |msg: String| Error::Parse { line: 1, msg };
    let mut parts = line.trim_end_matches(['\r', '\n']).split('\t');
    let head = parts.next().unwrap_or_default();
    let expected = format!("{MAGIC_PREFIX}{kind} ");
    let version = head
        .strip_prefix(&expected)
        .ok_or_else(|| bad(format!("expected a `{MAGIC_PREFIX}{kind}` header, found {head:?}")))?;
    if version != format!("v{VERSION}") {
        return Err(bad(format!("unsupported {kind} version {version:?}")));
    }
    let mut fields = BTreeMap::new();
    for part in parts {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed header field {part:?}")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    Ok(fields)
}

pub fn field<T: std::str::FromStr>(fields: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = fields.get(key).ok_or_else(|| Error::Parse {
        line: 1,
        msg: format!("header lacks `{key}`"),
    })?;
    raw.parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("header field `{key}` has invalid value {raw:?}"),
    })
}

pub fn parse_index_list(raw: &str, line: usize) -> Result<Vec<usize>> {
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|tok| {
            tok.parse::<usize>().map_err(|_| Error::Parse {
                line,
                msg: format!("invalid item index {tok:?}"),
            })
        })
        .collect()
}

pub fn join_indices(xs: &[usize]) -> String {
    let mut out = String::with_capacity(xs.len() * 4);
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&x.to_string());
    }
    out
}
