//! Marching-squares level sets of planar polynomials, for plotting.

use crate::error::{Error, Result};
use crate::polynomial::DensePolynomial;

pub type Segment = [[f64; 2]; 2];

/// Segments approximating `{p = level}` inside `bbox` on a
/// `resolution × resolution` grid.
pub fn level_set(p: &DensePolynomial, level: f64, bbox: [[f64; 2]; 2], resolution: usize) -> Result<Vec<Segment>> {
    if p.n() != 2 {
        return Err(Error::InvalidArgument("contours are only defined for n = 2".into()));
    }
    if resolution < 2 || bbox.iter().any(|[a, b]| !(a < b)) {
        return Err(Error::InvalidArgument("contour grid needs resolution >= 2 and a non-empty box".into()));
    }
    let m = resolution;
    let xs: Vec<f64> = (0..=m).map(|i| bbox[0][0] + (bbox[0][1] - bbox[0][0]) * i as f64 / m as f64).collect();
    let ys: Vec<f64> = (0..=m).map(|i| bbox[1][0] + (bbox[1][1] - bbox[1][0]) * i as f64 / m as f64).collect();
    let f: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| ys.iter().map(|&y| p.eval_unchecked(&[x, y]) - level).collect())
        .collect();
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..m {
            // corners counter-clockwise from (i, j)
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v: Vec<f64> = c.iter().map(|&(a, b)| f[a][b]).collect();
            let pt = |k: usize| [xs[c[k].0], ys[c[k].1]];
            let mut crossings = Vec::with_capacity(4);
            for k in 0..4 {
                let (a, b) = (v[k], v[(k + 1) % 4]);
                if (a < 0.0) != (b < 0.0) {
                    let t = a / (a - b);
                    let (pa, pb) = (pt(k), pt((k + 1) % 4));
                    crossings.push([pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]);
                }
            }
            match crossings.len() {
                2 => out.push([crossings[0], crossings[1]]),
                4 => {
                    // saddle: pair edges by the sign of the centre value
                    let centre = v.iter().sum::<f64>() / 4.0;
                    if (centre < 0.0) == (v[0] < 0.0) {
                        out.push([crossings[0], crossings[3]]);
                        out.push([crossings[1], crossings[2]]);
                    } else {
                        out.push([crossings[0], crossings[1]]);
                        out.push([crossings[2], crossings[3]]);
                    }
                }
                _ => {}
            }
        }
    }
    Ok(out)
}

/// CSV with columns `segment,x1,x2`, two rows per segment.
pub fn write_contour_csv<W: std::io::Write>(segments: &[Segment], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["segment", "x1", "x2"])?;
    for (k, s) in segments.iter().enumerate() {
        for p in s {
            out.write_record([k.to_string(), crate::io::fmt_f64(p[0]), crate::io::fmt_f64(p[1])])?;
        }
    }
    out.flush()?;
    Ok(())
}
