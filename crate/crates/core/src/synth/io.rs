//! Dataset CSV: header `x0,...,x{d-1},y,posterior1`, reals at 17 significant
//! digits, empty `posterior1` when unknown.

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::mixture::{DomainDataset, DomainTag, LabeledSample};

pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_dataset<W: Write>(out: W, ds: &DomainDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let d = ds.dim();
    let mut header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    header.push("posterior1".into());
    w.write_record(&header).map_err(csv_err)?;
    for s in &ds.samples {
        let mut rec: Vec<String> = s.x.iter().map(|&v| fmt_real(v)).collect();
        rec.push(s.y.to_string());
        rec.push(s.posterior1.map(fmt_real).unwrap_or_default());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R, tag: DomainTag) -> Result<DomainDataset> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let d = header.len().checked_sub(2).ok_or_else(|| Error::Format("short header".into()))?;
    for (j, h) in header.iter().take(d).enumerate() {
        if h != format!("x{j}") {
            return Err(Error::Format(format!("unexpected column `{h}`")));
        }
    }
    if header.get(d) != Some("y") || header.get(d + 1) != Some("posterior1") {
        return Err(Error::Format("header must end with y,posterior1".into()));
    }
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::Format(format!("bad number `{s}`")))
    };
    let mut samples = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let x = rec.iter().take(d).map(parse).collect::<Result<Vec<_>>>()?;
        let y: u8 = rec[d]
            .parse()
            .ok()
            .filter(|&y| y <= 1)
            .ok_or_else(|| Error::Format(format!("bad label `{}`", &rec[d])))?;
        let posterior1 = match &rec[d + 1] {
            "" => None,
            s => Some(parse(s)?),
        };
        samples.push(LabeledSample { x, y, posterior1 });
    }
    Ok(DomainDataset {
        samples,
        tag,
        generator: None,
        seed: 0,
        labeled: None,
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
