//! File formats: binary trace/field containers, CSV exports, PGM previews,
//! and a small self-contained SVG plotter for log-log sweeps.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::forward::BoundaryTrace;
use crate::grid::{Grid, ScalarField};
use crate::metrics::SweepResult;
use crate::rays::{RayPath, TrappingReport, Verdict};

const TRACE_MAGIC: &[u8; 9] = b"TATTRACE1";
const FIELD_MAGIC: &[u8; 9] = b"TATFIELD1";

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Binary trace container: magic, little-endian `u32` sample and sensor
/// counts, `f64` h and dt, sensor coordinates, then the samples time-major.
pub fn write_trace(path: &Path, trace: &BoundaryTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(TRACE_MAGIC)?;
    put_u32(&mut w, trace.n_samples() as u32)?;
    put_u32(&mut w, trace.n_sensors() as u32)?;
    put_f64(&mut w, trace.h)?;
    put_f64(&mut w, trace.dt)?;
    for &(x, y) in &trace.sensor_coords {
        put_f64(&mut w, x)?;
        put_f64(&mut w, y)?;
    }
    for &v in &trace.data {
        put_f64(&mut w, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<BoundaryTrace> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 9];
    r.read_exact(&mut magic)?;
    if &magic != TRACE_MAGIC {
        return Err(Error::Format(format!(
            "{} is not a trace file (bad magic)",
            path.display()
        )));
    }
    let n_samples = get_u32(&mut r)? as usize;
    let n_sensors = get_u32(&mut r)? as usize;
    let h = get_f64(&mut r)?;
    let dt = get_f64(&mut r)?;
    if n_sensors == 0 || n_samples == 0 {
        return Err(Error::Format("empty trace file".into()));
    }
    let mut sensor_coords = Vec::with_capacity(n_sensors);
    for _ in 0..n_sensors {
        let x = get_f64(&mut r)?;
        let y = get_f64(&mut r)?;
        sensor_coords.push((x, y));
    }
    let mut data = Vec::with_capacity(n_samples * n_sensors);
    for _ in 0..n_samples * n_sensors {
        data.push(get_f64(&mut r)?);
    }
    Ok(BoundaryTrace {
        h,
        dt,
        sensor_coords,
        data,
        speed_tag: String::new(),
        phantom_tag: String::new(),
    })
}

/// CSV view of a trace: header `t,s0,s1,...`, one row per time sample.
pub fn trace_to_csv(path: &Path, trace: &BoundaryTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "t")?;
    for s in 0..trace.n_sensors() {
        write!(w, ",s{s}")?;
    }
    writeln!(w)?;
    for k in 0..trace.n_samples() {
        write!(w, "{}", k as f64 * trace.dt)?;
        for &v in trace.row(k) {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Binary field container: magic, `u32` node counts, `f64` spacing and
/// origin, then the samples row-major.
pub fn write_field(path: &Path, field: &ScalarField) -> Result<()> {
    let g = field.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FIELD_MAGIC)?;
    put_u32(&mut w, g.nx() as u32)?;
    put_u32(&mut w, g.ny() as u32)?;
    put_f64(&mut w, g.h())?;
    put_f64(&mut w, g.origin().0)?;
    put_f64(&mut w, g.origin().1)?;
    for &v in field.values() {
        put_f64(&mut w, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 9];
    r.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return Err(Error::Format(format!(
            "{} is not a field file (bad magic)",
            path.display()
        )));
    }
    let nx = get_u32(&mut r)? as usize;
    let ny = get_u32(&mut r)? as usize;
    let h = get_f64(&mut r)?;
    let ox = get_f64(&mut r)?;
    let oy = get_f64(&mut r)?;
    let grid = Grid::new((ox, oy), h, nx, ny)?;
    let mut values = Vec::with_capacity(nx * ny);
    for _ in 0..nx * ny {
        values.push(get_f64(&mut r)?);
    }
    ScalarField::from_values(grid, values)
}

/// CSV view of a field: `x,y,value` per node.
pub fn field_to_csv(path: &Path, field: &ScalarField) -> Result<()> {
    let g = field.grid();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y,value")?;
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let (x, y) = g.node(i, j);
            writeln!(w, "{x},{y},{}", field.at(i, j))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// 8-bit binary PGM, linearly rescaled to the field's value range, top row
/// first (+y up).
pub fn field_to_pgm(path: &Path, field: &ScalarField) -> Result<()> {
    let g = field.grid();
    let (lo, hi) = field
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{} {}\n255\n", g.nx(), g.ny())?;
    let mut raster = Vec::with_capacity(g.len());
    for j in (0..g.ny()).rev() {
        for i in 0..g.nx() {
            let v = (field.at(i, j) - lo) / span;
            raster.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    w.write_all(&raster)?;
    w.flush()?;
    Ok(())
}

/// Sweep CSV: `T,error,lnT,lnError`.
pub fn sweep_to_csv(path: &Path, sweep: &SweepResult) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "T,error,lnT,lnError")?;
    for &(t, e) in &sweep.points {
        writeln!(w, "{t},{e},{},{}", t.ln(), e.ln())?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable regression summary next to the CSV.
pub fn sweep_summary(path: &Path, sweep: &SweepResult) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "norm: {}", sweep.norm.as_str())?;
    writeln!(w, "points: {}", sweep.points.len())?;
    writeln!(w, "usable: {} (trailing plateau excluded)", sweep.usable)?;
    writeln!(
        w,
        "T range used: [{}, {}]",
        sweep.points[0].0,
        sweep.points[sweep.usable - 1].0
    )?;
    writeln!(w, "slope: {:.6}", sweep.slope)?;
    writeln!(w, "intercept: {:.6}", sweep.intercept)?;
    writeln!(w, "r_squared: {:.6}", sweep.r_squared)?;
    w.flush()?;
    Ok(())
}

/// Log-log plot of the sweep with the regression overlay; pure SVG paths and
/// text, no external tooling.
pub fn sweep_to_svg(path: &Path, sweep: &SweepResult) -> Result<()> {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const ML: f64 = 70.0; // left margin
    const MR: f64 = 20.0;
    const MT: f64 = 30.0;
    const MB: f64 = 50.0;

    let xs: Vec<f64> = sweep.points.iter().map(|&(t, _)| t.ln()).collect();
    let ys: Vec<f64> = sweep.points.iter().map(|&(_, e)| e.ln()).collect();
    let (xmin, xmax) = bounds(&xs);
    let (ymin, ymax) = bounds(&ys);
    let pad = |lo: f64, hi: f64| {
        let s = (hi - lo).max(1e-12) * 0.08;
        (lo - s, hi + s)
    };
    let (xmin, xmax) = pad(xmin, xmax);
    let (ymin, ymax) = pad(ymin, ymax);
    let px = |x: f64| ML + (x - xmin) / (xmax - xmin) * (W - ML - MR);
    let py = |y: f64| H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB);

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // axes
    s.push_str(&format!(
        "<path d=\"M {ML} {MT} L {ML} {} L {} {}\" stroke=\"black\" fill=\"none\"/>\n",
        H - MB,
        W - MR,
        H - MB
    ));
    // ticks
    for k in 0..=4 {
        let x = xmin + (xmax - xmin) * k as f64 / 4.0;
        let y = ymin + (ymax - ymin) * k as f64 / 4.0;
        s.push_str(&format!(
            "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{0:.1}\" y2=\"{2:.1}\" stroke=\"black\"/>\n",
            px(x),
            H - MB,
            H - MB + 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{:.2}</text>\n",
            px(x),
            H - MB + 18.0,
            x
        ));
        s.push_str(&format!(
            "<line x1=\"{1:.1}\" y1=\"{0:.1}\" x2=\"{2:.1}\" y2=\"{0:.1}\" stroke=\"black\"/>\n",
            py(y),
            ML - 5.0,
            ML
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"end\">{:.2}</text>\n",
            ML - 8.0,
            py(y) + 4.0,
            y
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">ln T</text>\n",
        (ML + W - MR) / 2.0,
        H - 10.0
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">ln {} error</text>\n",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0,
        sweep.norm.as_str()
    ));
    // measured points and connecting line
    let mut poly = String::from("<polyline fill=\"none\" stroke=\"steelblue\" points=\"");
    for (&x, &y) in xs.iter().zip(&ys) {
        poly.push_str(&format!("{:.2},{:.2} ", px(x), py(y)));
    }
    poly.push_str("\"/>\n");
    s.push_str(&poly);
    for (k, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
        let fill = if k < sweep.usable {
            "steelblue"
        } else {
            "silver"
        };
        s.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.3\" fill=\"{fill}\"/>\n",
            px(x),
            py(y)
        ));
    }
    // regression overlay on the usable range
    let x_lo = xs[0];
    let x_hi = xs[sweep.usable - 1];
    s.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"crimson\" stroke-dasharray=\"6 4\"/>\n",
        px(x_lo),
        py(sweep.slope * x_lo + sweep.intercept),
        px(x_hi),
        py(sweep.slope * x_hi + sweep.intercept)
    ));
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"20\" font-size=\"13\" text-anchor=\"middle\">slope {:.3}, r² {:.3}</text>\n",
        (ML + W - MR) / 2.0,
        sweep.slope,
        sweep.r_squared
    ));
    s.push_str("</svg>\n");
    std::fs::write(path, s)?;
    Ok(())
}

fn bounds(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Ray path CSV: `t,x,y,xi_x,xi_y,H`.
pub fn ray_path_to_csv(path: &Path, ray: &RayPath) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,x,y,xi_x,xi_y,H")?;
    for s in &ray.samples {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.t, s.x, s.y, s.xi_x, s.xi_y, s.hamiltonian
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Trapping verdicts as CSV rows.
pub fn trapping_report_to_csv(path: &Path, report: &TrappingReport) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x0,y0,xi_x,xi_y,verdict,time,max_radius,reliable")?;
    for (seed, verdict, reliable) in &report.verdicts {
        let (kind, time, max_r) = match verdict {
            Verdict::Escaped(t) => ("escaped", *t, f64::NAN),
            Verdict::Trapped { t_max, max_radius } => ("trapped", *t_max, *max_radius),
        };
        writeln!(
            w,
            "{},{},{},{},{kind},{time},{max_r},{reliable}",
            seed.x.0, seed.x.1, seed.xi.0, seed.xi.1
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable trapping summary.
pub fn trapping_report_table(report: &TrappingReport) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "speed: {}   seeds: {}   t_max: {}   dt: {}   escape radius: {}\n",
        report.speed_tag,
        report.verdicts.len(),
        report.t_max,
        report.dt,
        report.r_escape
    ));
    s.push_str(&format!(
        "escaped: {} / {} ({:.1}%)   unreliable paths: {}\n",
        report.n_escaped(),
        report.verdicts.len(),
        100.0 * report.fraction_escaped(),
        report.n_unreliable
    ));
    let trapped: Vec<&(crate::rays::RaySeed, Verdict, bool)> = report
        .verdicts
        .iter()
        .filter(|(_, v, _)| matches!(v, Verdict::Trapped { .. }))
        .collect();
    if !trapped.is_empty() {
        // escape fraction per seed position: partial trapping shows up as a
        // cone of trapped directions at each point
        let mut positions: Vec<(f64, f64)> = Vec::new();
        for (seed, _, _) in &report.verdicts {
            if !positions
                .iter()
                .any(|&(x, y)| x == seed.x.0 && y == seed.x.1)
            {
                positions.push(seed.x);
            }
        }
        s.push_str("escape fraction by seed position (x0, y0, escaped/total):\n");
        for (x, y) in positions {
            let at_pos: Vec<_> = report
                .verdicts
                .iter()
                .filter(|(seed, _, _)| seed.x == (x, y))
                .collect();
            let escaped = at_pos
                .iter()
                .filter(|(_, v, _)| matches!(v, Verdict::Escaped(_)))
                .count();
            if escaped < at_pos.len() {
                s.push_str(&format!(
                    "  ({x:6.3}, {y:6.3})  {escaped:2} / {}\n",
                    at_pos.len()
                ));
            }
        }
        s.push_str("trapped seeds (x0, y0, xi_x, xi_y, max |x|):\n");
        for (seed, verdict, _) in trapped {
            if let Verdict::Trapped { max_radius, .. } = verdict {
                s.push_str(&format!(
                    "  ({:6.3}, {:6.3})  ({:6.3}, {:6.3})  {:.4}\n",
                    seed.x.0, seed.x.1, seed.xi.0, seed.xi.1, max_radius
                ));
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::NormKind;
    use proptest::prelude::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("tatrec-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn field_round_trip_is_exact() {
        let g = Grid::make_grid(-1.0, 1.0, 0.25).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (x * 3.1).sin() * (y * 2.7).cos());
        let p = tmp("field.tatfield");
        write_field(&p, &f).unwrap();
        let back = read_field(&p).unwrap();
        assert_eq!(back.grid(), f.grid());
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let p = tmp("bogus.bin");
        std::fs::write(&p, b"NOTAFILE0xyz").unwrap();
        assert!(matches!(read_field(&p), Err(Error::Format(_))));
        assert!(matches!(read_trace(&p), Err(Error::Format(_))));
    }

    #[test]
    fn pgm_has_correct_header_and_size() {
        let g = Grid::make_grid(-1.0, 1.0, 0.5).unwrap(); // 5x5
        let f = ScalarField::from_fn(g, |x, y| x + y);
        let p = tmp("field.pgm");
        field_to_pgm(&p, &f).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let header = b"P5\n5 5\n255\n";
        assert!(bytes.starts_with(header));
        assert_eq!(bytes.len(), header.len() + 25);
        // max value maps to 255 (top-right corner, first row in the raster)
        assert_eq!(bytes[header.len() + 4], 255);
    }

    #[test]
    fn sweep_files_render() {
        let sweep = SweepResult {
            points: vec![(3.0, 0.5), (4.0, 0.35), (6.0, 0.22), (8.0, 0.21)],
            usable: 3,
            norm: NormKind::H1,
            slope: -1.2,
            intercept: 0.1,
            r_squared: 0.99,
        };
        let csv = tmp("sweep.csv");
        sweep_to_csv(&csv, &sweep).unwrap();
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with("T,error,lnT,lnError\n"));
        assert_eq!(text.lines().count(), 5);

        let svg = tmp("sweep.svg");
        sweep_to_svg(&svg, &sweep).unwrap();
        let text = std::fs::read_to_string(&svg).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.contains("polyline"));
        assert!(text.contains("slope -1.200"));

        let summary = tmp("sweep.txt");
        sweep_summary(&summary, &sweep).unwrap();
        let text = std::fs::read_to_string(&summary).unwrap();
        assert!(text.contains("slope: -1.2"));
        assert!(text.contains("usable: 3"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn trace_round_trip_is_exact(
            n_samples in 1usize..20,
            n_sensors in 1usize..30,
            seed in 0u64..u64::MAX,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let sensor_coords: Vec<(f64, f64)> =
                (0..n_sensors).map(|_| (rng.random(), rng.random())).collect();
            let data: Vec<f64> = (0..n_samples * n_sensors)
                .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                .collect();
            let trace = BoundaryTrace {
                h: 0.01,
                dt: 0.005,
                sensor_coords,
                data,
                speed_tag: String::new(),
                phantom_tag: String::new(),
            };
            let p = tmp(&format!("trace-{seed}.tattrace"));
            write_trace(&p, &trace).unwrap();
            let back = read_trace(&p).unwrap();
            std::fs::remove_file(&p).ok();
            prop_assert_eq!(back, trace);
        }
    }
}
