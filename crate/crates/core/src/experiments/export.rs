use std::io::Write;

use super::population::CurvePoint;
use super::{BasinHistogram, Endpoint};
use crate::error::{Error, Result};

/// Scatter-plot rows `x,y,label,algorithm,seed`. Two-dimensional endpoints only.
pub fn write_endpoints_csv<W: Write>(mut out: W, endpoints: &[Endpoint], algorithm: &str) -> Result<()> {
    writeln!(out, "x,y,label,algorithm,seed")?;
    for e in endpoints {
        let [x, y] = e.params.as_slice() else {
            return Err(Error::arg("endpoint export needs two-dimensional points"));
        };
        writeln!(out, "{x},{y},{},{algorithm},{}", e.label, e.seed)?;
    }
    Ok(())
}

pub fn write_histogram_csv<W: Write>(mut out: W, hist: &BasinHistogram) -> Result<()> {
    writeln!(out, "label,count,percent")?;
    for ((label, count), (_, pct)) in hist.counts.iter().zip(hist.percentages()?) {
        writeln!(out, "{label},{count},{pct}")?;
    }
    Ok(())
}

pub fn write_curve_csv<W: Write>(mut out: W, curve: &[CurvePoint]) -> Result<()> {
    writeln!(out, "grad_evals,loss,smoothed_loss")?;
    for p in curve {
        writeln!(out, "{},{},{}", p.grad_evals, p.loss, p.smoothed_loss)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscapes::BasinLabel;

    #[test]
    fn headers_and_rows() {
        let mut h = BasinHistogram::new(vec![BasinLabel::Minimum("GM".into()), BasinLabel::Else]);
        h.add(Endpoint {
            params: vec![0.5, -1.0].into(),
            label: BasinLabel::Minimum("GM".into()),
            seed: 42,
            diverged: false,
        })
        .unwrap();

        let mut buf = Vec::new();
        write_endpoints_csv(&mut buf, &h.endpoints, "SAM").unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,y,label,algorithm,seed\n0.5,-1,GM,SAM,42\n");

        let mut buf = Vec::new();
        write_histogram_csv(&mut buf, &h).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "label,count,percent\nGM,1,100\nElse,0,0\n");

        let mut buf = Vec::new();
        let curve = [CurvePoint {
            grad_evals: 3,
            loss: 0.25,
            smoothed_loss: 0.5,
        }];
        write_curve_csv(&mut buf, &curve).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "grad_evals,loss,smoothed_loss\n3,0.25,0.5\n");
    }

    #[test]
    fn endpoints_must_be_planar() {
        let e = Endpoint {
            params: vec![0.0; 3].into(),
            label: BasinLabel::Else,
            seed: 0,
            diverged: false,
        };
        assert!(write_endpoints_csv(Vec::new(), &[e], "GD").is_err());
    }
}
