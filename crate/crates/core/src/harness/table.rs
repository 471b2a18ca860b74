//! Versioned CSV tables.
//!
//! Every table starts with a `schema_version` column. The header and each
//! row are checked against the declared schema before anything is written.

use std::io::Write;

use super::HarnessError;

/// A row type with a fixed, versioned column list.
pub trait CsvRecord {
    const TABLE: &'static str;
    const VERSION: u32;
    /// Column names after `schema_version`.
    const COLUMNS: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

/// Float cell in shortest round-trip form.
pub fn f(v: f64) -> String {
    format!("{v:?}")
}

/// Optional float cell; empty when absent.
pub fn opt(v: Option<f64>) -> String {
    v.map(f).unwrap_or_default()
}

/// `schema_version` followed by the declared columns.
pub fn header<R: CsvRecord>() -> Vec<&'static str> {
    std::iter::once("schema_version").chain(R::COLUMNS.iter().copied()).collect()
}

/// Checks column uniqueness and every row's width.
pub fn check_schema<R: CsvRecord>(rows: &[R]) -> Result<(), HarnessError> {
    let h = header::<R>();
    let mut sorted = h.clone();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(HarnessError::Schema { table: R::TABLE, message: format!("duplicate column `{}`", w[0]) });
    }
    for (n, r) in rows.iter().enumerate() {
        let got = r.fields().len();
        if got != R::COLUMNS.len() {
            return Err(HarnessError::Schema {
                table: R::TABLE,
                message: format!("row {n} has {got} fields, schema has {}", R::COLUMNS.len()),
            });
        }
    }
    Ok(())
}

/// Writes the table as RFC 4180 CSV with a header row.
pub fn write_csv<R: CsvRecord, W: Write>(out: W, rows: &[R]) -> Result<(), HarnessError> {
    check_schema(rows)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    w.write_record(header::<R>())?;
    let version = R::VERSION.to_string();
    for r in rows {
        w.write_record(std::iter::once(version.clone()).chain(r.fields()))?;
    }
    w.flush().map_err(|source| HarnessError::Io { path: R::TABLE.to_string(), source })?;
    Ok(())
}

/// Table as a string.
pub fn to_csv_string<R: CsvRecord>(rows: &[R]) -> Result<String, HarnessError> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Good(f64);
    impl CsvRecord for Good {
        const TABLE: &'static str = "good";
        const VERSION: u32 = 3;
        const COLUMNS: &'static [&'static str] = &["name", "value"];
        fn fields(&self) -> Vec<String> {
            vec!["a,b".into(), f(self.0)]
        }
    }

    struct Short;
    impl CsvRecord for Short {
        const TABLE: &'static str = "short";
        const VERSION: u32 = 1;
        const COLUMNS: &'static [&'static str] = &["x", "y"];
        fn fields(&self) -> Vec<String> {
            vec!["1".into()]
        }
    }

    struct Dup;
    impl CsvRecord for Dup {
        const TABLE: &'static str = "dup";
        const VERSION: u32 = 1;
        const COLUMNS: &'static [&'static str] = &["x", "x"];
        fn fields(&self) -> Vec<String> {
            vec!["1".into(), "2".into()]
        }
    }

    #[test]
    fn writes_versioned_quoted_csv() {
        let s = to_csv_string(&[Good(0.1), Good(-2.5)]).unwrap();
        assert_eq!(s, "schema_version,name,value\r\n3,\"a,b\",0.1\r\n3,\"a,b\",-2.5\r\n");
    }

    #[test]
    fn schema_violations_are_rejected_before_writing() {
        let mut buf = Vec::new();
        assert!(matches!(write_csv(&mut buf, &[Short]), Err(HarnessError::Schema { .. })));
        assert!(buf.is_empty());
        assert!(matches!(to_csv_string(&[Dup]), Err(HarnessError::Schema { .. })));
    }
}
