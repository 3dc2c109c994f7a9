//! CSV and JSON forms of surfaces and solver logs.
//!
//! Surface CSV: header `t,s,x1..xm` (graphs: `x,y,z`), one row per node,
//! first parameter slow.

use std::io::{Read, Write};

use super::{GraphSurface, NewtonStep, StringsError, SurfaceGrid, SPACING_TOL};
use crate::numerics::format_float;

fn write_rows<W: Write>(out: W, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<(), StringsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format_float(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Parsed rows of a node table: the two parameter columns and the values.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_rows<R: Read>(input: R) -> Result<Table, StringsError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| StringsError::Lagrangian(format!("line {}: not a number: {f:?}", rows.len() + 2)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(StringsError::Shape {
                expected: header.len(),
                got: row.len(),
            });
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Recovers `(start, step, count)` for both parameters, checking that the
/// rows enumerate a uniform tensor grid with the first column slow.
fn grid_axes(rows: &[Vec<f64>]) -> Result<((f64, f64, usize), (f64, f64, usize)), StringsError> {
    let first = rows.first().ok_or(StringsError::Shape { expected: 1, got: 0 })?[0];
    let ns = rows.iter().take_while(|r| r[0] == first).count();
    if ns == 0 || rows.len() % ns != 0 {
        return Err(StringsError::Shape {
            expected: ns.max(1) * (rows.len() / ns.max(1) + 1),
            got: rows.len(),
        });
    }
    let nt = rows.len() / ns;
    let axis = |name: &'static str, values: Vec<f64>| -> Result<(f64, f64, usize), StringsError> {
        let n = values.len();
        if n < 2 {
            return Err(StringsError::GridTooSmall { nt, ns });
        }
        let h = (values[n - 1] - values[0]) / (n - 1) as f64;
        let scale = values[0].abs().max(values[n - 1].abs()).max(1.0);
        for (k, v) in values.iter().enumerate() {
            if (v - (values[0] + k as f64 * h)).abs() > SPACING_TOL * scale {
                return Err(StringsError::NonUniform { axis: name, index: k });
            }
        }
        Ok((values[0], h, n))
    };
    let t = axis("t", (0..nt).map(|i| rows[i * ns][0]).collect())?;
    let s = axis("s", (0..ns).map(|j| rows[j][1]).collect())?;
    for (k, row) in rows.iter().enumerate() {
        if row[0] != rows[(k / ns) * ns][0] || row[1] != rows[k % ns][1] {
            return Err(StringsError::NonUniform { axis: "rows", index: k });
        }
    }
    Ok((t, s))
}

impl SurfaceGrid {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), StringsError> {
        let mut header = vec!["t".to_string(), "s".to_string()];
        header.extend((0..self.dim()).map(super::base_name));
        let rows = (0..self.nt * self.ns).map(|k| {
            let mut row = vec![self.t(k / self.ns), self.s(k % self.ns)];
            row.extend(self.values.iter().map(|c| c[k]));
            row
        });
        write_rows(out, &header, rows)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<SurfaceGrid, StringsError> {
        let table = read_rows(input)?;
        let m = table.header.len().saturating_sub(2);
        if m == 0 || table.header[0] != "t" || table.header[1] != "s" {
            return Err(StringsError::Lagrangian(format!(
                "surface CSV header must be t,s,x1..xm, got {}",
                table.header.join(",")
            )));
        }
        let ((t0, dt, nt), (s0, ds, ns)) = grid_axes(&table.rows)?;
        let values = (0..m).map(|c| table.rows.iter().map(|r| r[2 + c]).collect()).collect();
        SurfaceGrid::new(t0, dt, nt, s0, ds, ns, values)
    }

    pub fn to_json(&self) -> Result<String, StringsError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<SurfaceGrid, StringsError> {
        let g: SurfaceGrid = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }
}

impl GraphSurface {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), StringsError> {
        let header = ["x", "y", "z"].map(String::from);
        let rows = (0..self.nx * self.ny).map(|k| vec![self.x(k / self.ny), self.y(k % self.ny), self.z[k]]);
        write_rows(out, &header, rows)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<GraphSurface, StringsError> {
        let table = read_rows(input)?;
        if table.header != ["x", "y", "z"] {
            return Err(StringsError::Lagrangian(format!(
                "graph CSV header must be x,y,z, got {}",
                table.header.join(",")
            )));
        }
        let ((x0, hx, nx), (y0, hy, ny)) = grid_axes(&table.rows)?;
        let z = table.rows.iter().map(|r| r[2]).collect();
        GraphSurface::new((x0, x0 + hx * (nx - 1) as f64), (y0, y0 + hy * (ny - 1) as f64), nx, ny, z)
    }

    pub fn to_json(&self) -> Result<String, StringsError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<GraphSurface, StringsError> {
        let g: GraphSurface = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }
}

/// Convergence log as CSV: `iteration,residual,damping`.
pub fn write_log_csv<W: Write>(log: &[NewtonStep], out: W) -> Result<(), StringsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "residual", "damping"])?;
    for s in log {
        w.write_record([s.iteration.to_string(), format_float(s.residual), format_float(s.damping)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surface_csv_round_trip() {
        let g = SurfaceGrid::from_fn((0.0, 1.0), 6, (-1.0, 0.5), 5, 3, |t, s| vec![t, s, (t * s).sin() / 3.0]).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,s,x1,x2,x3\n"));
        let back = SurfaceGrid::read_csv(&buf[..]).unwrap();
        assert_eq!(back.values, g.values);
        assert_eq!((back.nt, back.ns), (6, 5));
        assert!((back.dt - g.dt).abs() < 1e-15);
        assert_eq!(SurfaceGrid::from_json(&g.to_json().unwrap()).unwrap(), g);
    }

    #[test]
    fn graph_csv_round_trip_and_checks() {
        let g = GraphSurface::from_fn((-1.0, 1.0), (0.0, 2.0), 5, 7, |x, y| x * y + 0.1).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = GraphSurface::read_csv(&buf[..]).unwrap();
        assert_eq!(back.z, g.z);
        assert_eq!(GraphSurface::from_json(&g.to_json().unwrap()).unwrap(), g);

        let bad = "x,y,z\n0,0,1\n0,1,1\n0,2,1\n0,3,1\n0,4,1\n1,0,1\n1,1,1\n1,2.5,1\n1,3,1\n1,4,1\n";
        assert!(matches!(GraphSurface::read_csv(bad.as_bytes()), Err(StringsError::NonUniform { .. })));
        assert!(GraphSurface::read_csv("a,b,c\n".as_bytes()).is_err());
    }

    #[test]
    fn log_csv() {
        let log = [
            NewtonStep {
                iteration: 0,
                residual: 0.5,
                damping: 0.0,
            },
            NewtonStep {
                iteration: 1,
                residual: 1e-11,
                damping: 1.0,
            },
        ];
        let mut buf = Vec::new();
        write_log_csv(&log, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iteration,residual,damping\n0,"));
        assert_eq!(text.lines().count(), 3);
    }
}
