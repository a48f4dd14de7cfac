//! Minimal CSV support for the toolkit's fixed schemas. Fields never
//! contain commas or quotes (ids are alphanumeric, values are numbers), so
//! plain splitting is enough; writers enforce that assumption.

use crate::error::{CoreError, Result};
use std::fs;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let text = fs::read_to_string(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CoreError::format(path.display().to_string(), "empty csv"))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if fields.len() != header.len() {
            return Err(CoreError::format(
                path.display().to_string(),
                format!(
                    "line {}: {} fields, header has {}",
                    lineno + 2,
                    fields.len(),
                    header.len()
                ),
            ));
        }
        rows.push(fields);
    }
    Ok(CsvTable { header, rows })
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut file =
        fs::File::create(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    let check = |field: &str| -> Result<()> {
        if field.contains(',') || field.contains('"') || field.contains('\n') {
            return Err(CoreError::Input(format!(
                "csv field {field:?} contains a delimiter"
            )));
        }
        Ok(())
    };
    for h in header {
        check(h)?;
    }
    writeln!(file, "{}", header.join(","))
        .map_err(|e| CoreError::io(path.display().to_string(), e))?;
    for row in rows {
        for field in row {
            check(field)?;
        }
        writeln!(file, "{}", row.join(","))
            .map_err(|e| CoreError::io(path.display().to_string(), e))?;
    }
    Ok(())
}
