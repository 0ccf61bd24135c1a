//! Header-less CSV tables; the first column is the main column.

use std::path::Path;

use rowcomp_core::interpret::Table;

use super::FormatError;

pub fn load_table(path: &Path) -> Result<Table, FormatError> {
    let file = std::fs::File::open(path).map_err(|e| FormatError::new(e.to_string()).in_file(path))?;
    parse_table(file).map_err(|e| e.in_file(path))
}

pub fn parse_table(input: impl std::io::Read) -> Result<Table, FormatError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize);
            FormatError {
                line,
                ..FormatError::new(e.to_string())
            }
        })?;
        rows.push(record.iter().map(|c| c.trim().to_string()).collect());
    }
    Table::new(rows).map_err(|e| FormatError::new(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_quoted_cells() {
        let t = parse_table("Kanye West,\"Yeezy, Ye\",1977\nDrake,Drizzy,1986\n".as_bytes()).unwrap();
        assert_eq!((t.n_rows(), t.n_cols()), (2, 3));
        assert_eq!(t.cell(0, 1), "Yeezy, Ye");
    }

    #[test]
    fn rejects_ragged_and_empty() {
        let e = parse_table("a,b\nc\n".as_bytes()).unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(parse_table("".as_bytes()).is_err());
    }
}
