//! Plain-text model dump.
//!
//! Layout: header `N R M`; N rows of `V`; R rows of `H`; M rows holding the
//! diagonal of each `S_m`; then for each view a line `D_m` followed by the
//! D_m rows of `Q_m`. Values are row-major, space separated, written in
//! shortest round-trip form.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::Parafac2Model;
use crate::deepwalk::format_matrix_block;
use crate::error::{Error, Result};

pub fn format_model(model: &Parafac2Model) -> String {
    let mut out = format!("{} {} {}\n", model.v.nrows(), model.rank, model.num_views());
    out.push_str(&format_matrix_block(&model.v, false));
    out.push_str(&format_matrix_block(&model.h, false));
    for s in &model.s {
        let row: Vec<String> = s.iter().map(|x| format!("{x}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    for q in &model.q {
        out.push_str(&format!("{}\n", q.nrows()));
        out.push_str(&format_matrix_block(q, false));
    }
    out
}

pub fn write_model(path: impl AsRef<Path>, model: &Parafac2Model) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_model(model)).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    path: &'a Path,
    line: usize,
}

impl Reader<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn row<T: std::str::FromStr>(&mut self, len: usize) -> Result<Vec<T>> {
        let (idx, text) = self.lines.next().ok_or_else(|| self.err("unexpected end of file"))?;
        self.line = idx + 1;
        let vals = text
            .split_whitespace()
            .map(|t| t.parse::<T>().map_err(|_| self.err(format!("bad value {t:?}"))))
            .collect::<Result<Vec<T>>>()?;
        if vals.len() != len {
            return Err(self.err(format!("expected {len} values, found {}", vals.len())));
        }
        Ok(vals)
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.row::<f64>(cols)?);
        }
        Ok(DMatrix::from_row_slice(rows, cols, &data))
    }
}

pub fn parse_model(text: &str, path: &Path) -> Result<Parafac2Model> {
    let mut rd = Reader {
        lines: text.lines().enumerate(),
        path,
        line: 0,
    };
    let header = rd.row::<usize>(3)?;
    let (n, r, m) = (header[0], header[1], header[2]);
    let v = rd.matrix(n, r)?;
    let h = rd.matrix(r, r)?;
    let s = (0..m)
        .map(|_| rd.row::<f64>(r).map(DVector::from_vec))
        .collect::<Result<Vec<_>>>()?;
    let q = (0..m)
        .map(|_| {
            let d = rd.row::<usize>(1)?[0];
            rd.matrix(d, r)
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some((idx, _)) = rd.lines.find(|(_, l)| !l.trim().is_empty()) {
        rd.line = idx + 1;
        return Err(rd.err("trailing data after model"));
    }
    Ok(Parafac2Model { rank: r, q, h, s, v })
}

pub fn read_model(path: impl AsRef<Path>) -> Result<Parafac2Model> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text, path)
}
