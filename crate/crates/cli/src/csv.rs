//! Minimal RFC-4180 CSV: comma separators, double-quote escaping, `\n`
//! line endings, UTF-8 throughout. Covers exactly what the result files
//! need — a writer for produced rows and a parser for baseline comparison.

use std::fs;
use std::io;
use std::path::Path;

/// Escapes one field: quoted iff it contains a comma, quote, or newline.
fn field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One line, `\n`-terminated.
pub fn line(fields: &[String]) -> String {
    let mut out = fields.iter().map(|f| field(f)).collect::<Vec<_>>().join(",");
    out.push('\n');
    out
}

/// Renders header plus rows to the full file contents.
pub fn render(header: &[String], rows: &[Vec<String>]) -> String {
    let mut text = line(header);
    for row in rows {
        text.push_str(&line(row));
    }
    text
}

pub fn write(path: &Path, header: &[String], rows: &[Vec<String>]) -> io::Result<()> {
    fs::write(path, render(header, rows))
}

/// Parses a full CSV document into (header, rows). Tolerates `\r\n`
/// endings and a missing final newline; every record must have the same
/// field count as the header.
pub fn parse(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), String> {
    let mut records: Vec<Vec<String>> = Vec::new();
    let mut row: Vec<String> = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = text.chars().peekable();
    let mut any = false;
    while let Some(c) = chars.next() {
        any = true;
        if quoted {
            match c {
                '"' => {
                    if chars.peek() == Some(&'"') {
                        chars.next();
                        cur.push('"');
                    } else {
                        quoted = false;
                    }
                }
                _ => cur.push(c),
            }
            continue;
        }
        match c {
            '"' if cur.is_empty() => quoted = true,
            ',' => {
                row.push(std::mem::take(&mut cur));
            }
            '\n' => {
                if cur.ends_with('\r') {
                    cur.pop();
                }
                row.push(std::mem::take(&mut cur));
                records.push(std::mem::take(&mut row));
            }
            _ => cur.push(c),
        }
    }
    if quoted {
        return Err("unterminated quoted field".into());
    }
    if !cur.is_empty() || !row.is_empty() {
        row.push(cur);
        records.push(row);
    }
    if !any || records.is_empty() {
        return Err("empty CSV document".into());
    }
    let header = records.remove(0);
    for (i, r) in records.iter().enumerate() {
        if r.len() != header.len() {
            return Err(format!(
                "record {} has {} fields; header has {}",
                i + 1,
                r.len(),
                header.len()
            ));
        }
    }
    Ok((header, records))
}

/// Formats a float for CSV. Rust's shortest round-trip formatting is
/// deterministic for a given value, which the byte-identity contract
/// relies on.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_with_escapes() {
        let header = vec!["a".to_string(), "b".to_string()];
        let rows = vec![
            vec!["plain".to_string(), "with,comma".to_string()],
            vec!["with\"quote".to_string(), "with\nnewline".to_string()],
        ];
        let text = render(&header, &rows);
        let (h2, r2) = parse(&text).unwrap();
        assert_eq!(h2, header);
        assert_eq!(r2, rows);
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(parse("a,b\n1\n").is_err());
    }

    #[test]
    fn float_formatting_stable() {
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        let v = 6.224432e-7;
        assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }
}
